#pragma once

#include <span>
#include <utility>
#include <vector>

#include "geosched/power.hpp"
#include "geosched/strategy.hpp"

namespace geosched {

// Realized accounting for one DC in one epoch.
struct DcLedgerRow {
  int dc_id = 0;
  double ar_total = 0.0;  // tasks/hour routed here
  PowerBreakdown power;
  double carbon_kg = 0.0;
  double energy_cost_usd = 0.0;
  double peak_delta_usd = 0.0;
  double network_cost_usd = 0.0;
  double total_cost_usd = 0.0;
};

struct EpochLedger {
  int tau = 0;
  std::vector<DcLedgerRow> dc;
  double cloud_carbon_kg = 0.0;
  double cloud_cost_usd = 0.0;
  std::vector<double> updated_prior_peak_kw;
};

// Building blocks (realized path) ------------------------------------------

double dc_carbon_kg(double carbon_factor, double net_kw, double epoch_hours);

// Peak-demand charge for one epoch: price * (pc - pp) when the period peak
// including this epoch (pc) reaches or exceeds the prior peak, else 0.
// Returns (charge, new prior peak).
std::pair<double, double> peak_cost_delta(double peak_price, double pc_peak_kw,
                                          double prior_peak_kw);

// migrated_counts[i] = number of node-slots at this DC occupied by task i
// whose requests originated elsewhere.
double network_cost_usd(const Scenario& s, std::span<const double> migrated_counts);

double dc_cost_usd(const DataCenter& dc, double net_kw, double elec_price,
                   double peak_delta, double network_cost, double epoch_hours);

// Checks Strategy invariants for the whole profile; throws InfeasibleProfile
// naming the violated constraint.
void validate_profile(const Scenario& s, const ExecRateTable& er,
                      const StrategyProfile& profile);

// Full realized ledger: power, carbon, energy/peak/network costs per DC plus
// cloud totals and the carried-forward peak state.
EpochLedger make_epoch_ledger(const Scenario& s, const ExecRateTable& er,
                              const StrategyProfile& profile,
                              const EpochState& state);

// Estimation surrogates (what the solvers optimize) -------------------------

struct PlayerEstimate {
  std::vector<double> per_dc;
  double total = 0.0;
};

// Maximum network cost for (task, DC): N_price * node_count * size_gb.
double nc_max_usd(const Scenario& s, int task_idx, int dc_idx);

// Estimated carbon of one player: per-DC carbon_factor * est power * hours.
// Validates 0 <= ar <= ER per entry.
PlayerEstimate estimate_carbon_player(const Scenario& s, const ExecRateTable& er,
                                      int player, std::span<const double> ar,
                                      int tau);

// Per-DC estimated grid draw of every player except `player` (the peak
// context a player optimizes against; negative estimates draw nothing).
std::vector<double> peer_est_draw_kw(const Scenario& s, const ExecRateTable& er,
                                     const StrategyProfile& profile, int player,
                                     int tau);

// Same, over all players (used to thread estimated peaks between game rounds).
std::vector<double> total_est_draw_kw(const Scenario& s, const ExecRateTable& er,
                                      const StrategyProfile& profile, int tau);

// Estimated cost of one player given the peers' draw context. The peak charge
// uses the total estimated draw (peers + own) against the prior peak; the
// whole charge lands on every player unless scenario.prorate_peak is set.
PlayerEstimate estimate_cost_player_given_peers(const Scenario& s,
                                                const ExecRateTable& er,
                                                int player,
                                                std::span<const double> ar,
                                                std::span<const double> peer_draw_kw,
                                                const EpochState& state);

// Convenience wrapper: peers taken from the profile, own rates from slot
// `player` of the same profile.
PlayerEstimate estimate_cost_player(const Scenario& s, const ExecRateTable& er,
                                    int player, const StrategyProfile& profile,
                                    const EpochState& state);

// Cloud-level estimated objective (sum of per-player estimates). Validates
// the profile first.
double cloud_objective(const Scenario& s, const ExecRateTable& er,
                       const StrategyProfile& profile, const EpochState& state,
                       Objective objective);

// Evaluates the same formulas without feasibility validation; rates may sit
// outside [0, ER] (used for derivative probes). No clamping is applied.
double cloud_objective_unchecked(const Scenario& s, const ExecRateTable& er,
                                 const StrategyProfile& profile,
                                 const EpochState& state, Objective objective);

}  // namespace geosched
