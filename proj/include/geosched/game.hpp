#pragma once

#include "geosched/accounting.hpp"

namespace geosched {

// Solver tuning constants, collected in one place. Fractions are relative to
// the acting player's CAR.
struct GameConfig {
  double eps_rel = 1e-3;         // Nash stop: max relative L1 strategy change
  int max_rounds = 100;          // Nash pass limit
  double eps_reward_rel = 1e-3;  // epsilon-equilibrium certificate threshold
  double ls_delta_start = 0.25;  // cost local search: first transfer size
  double ls_delta_min = 1e-4;    // cost local search: final transfer size
  double fd_step = 0.01;         // FD force probe step
  double fd_quantum = 0.02;      // FD load moved per committed step
  int fd_iter_factor = 10;       // FD iteration cap = factor * |I| * |D|
};

// Normalizes raw_fractions onto the simplex, scales by CAR_i(tau), then
// repairs any per-DC overflow by clamping to ER and pushing the excess onto
// the remaining headroom proportionally. The result satisfies the Strategy
// invariants exactly. Throws NoFeasibleStrategy when the cloud cannot absorb
// CAR (excluded for validated scenarios).
Strategy project_feasible(const Scenario& s, const ExecRateTable& er,
                          std::span<const double> raw_fractions, int player,
                          int tau);

// The quantity each player minimizes: estimated carbon (CET) or estimated
// cost (CCT) of its own task type, peers fixed.
double player_reward(const Scenario& s, const ExecRateTable& er, int player,
                     const StrategyProfile& profile, const EpochState& state,
                     Objective objective);

// Reward-minimizing strategy for one player with the others held fixed.
// Carbon is linear in the player's rates, so an exact greedy fill by marginal
// coefficient (ties split proportionally to capacity) is optimal. Cost seeds
// with the same greedy on the linear part and refines with a deterministic
// pairwise-transfer local search through the full reward.
Strategy best_reply(const Scenario& s, const ExecRateTable& er, int player,
                    const StrategyProfile& profile, const EpochState& state,
                    Objective objective, const GameConfig& cfg = {});

struct NashResult {
  StrategyProfile profile;
  int rounds = 0;       // passes in which some strategy moved by >= eps
  bool converged = false;
  double cert_max_improvement_rel = 0.0;  // post-hoc epsilon certificate
  long best_reply_calls = 0;
};

// Sequential best-reply iteration in ascending player order. Converged when
// a full pass changes no strategy by eps_rel * CAR_i or more. When the pass
// limit is hit instead, converged stays false and the best profile seen (by
// cloud objective) is returned.
NashResult nash_solve(const Scenario& s, const ExecRateTable& er, int tau,
                      Objective objective, const EpochState& state,
                      const GameConfig& cfg = {});

struct FdResult {
  StrategyProfile profile;
  long moves = 0;  // committed load transfers
  long evals = 0;  // objective evaluations (probes + candidates)
};

// Force-directed baseline: forces are finite-difference marginals of the
// cloud objective; each iteration moves one quantum of load from the
// highest-force (player, DC) cell to that player's lowest-force DC with
// headroom, stopping when the candidate move no longer improves.
FdResult force_directed(const Scenario& s, const ExecRateTable& er, int tau,
                        Objective objective, const EpochState& state,
                        const GameConfig& cfg = {});

struct OracleResult {
  StrategyProfile profile;
  double objective_value = 0.0;
  long profiles_evaluated = 0;
};

// Exhaustive search over per-player simplex grids with the given fraction
// resolution (must divide 1). Guard: at most 1e7 combined profiles, else
// TooLarge.
OracleResult oracle_grid(const Scenario& s, const ExecRateTable& er, int tau,
                         Objective objective, const EpochState& state,
                         double resolution);

// Every player split proportionally to its per-DC execution rates. Always
// feasible; used as the NASH and FD starting point.
StrategyProfile proportional_profile(const Scenario& s, const ExecRateTable& er,
                                     int tau);

}  // namespace geosched
