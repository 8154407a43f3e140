#include "geosched/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace geosched {

double dc_carbon_kg(double carbon_factor, double net_kw, double epoch_hours) {
  return carbon_factor * net_kw * epoch_hours;
}

std::pair<double, double> peak_cost_delta(double peak_price, double pc_peak_kw,
                                          double prior_peak_kw) {
  if (pc_peak_kw < 0.0 || prior_peak_kw < 0.0) {
    throw Error("peak power inputs must be >= 0");
  }
  if (pc_peak_kw >= prior_peak_kw) {
    return {peak_price * (pc_peak_kw - prior_peak_kw), pc_peak_kw};
  }
  return {0.0, prior_peak_kw};
}

double network_cost_usd(const Scenario& s, std::span<const double> migrated_counts) {
  double usd = 0.0;
  for (size_t i = 0; i < migrated_counts.size(); ++i) {
    if (migrated_counts[i] < 0.0) throw Error("migrated counts must be >= 0");
    usd += s.network_price * s.task_types[i].size_gb * migrated_counts[i];
  }
  return usd;
}

double dc_cost_usd(const DataCenter& dc, double net_kw, double elec_price,
                   double peak_delta, double network_cost, double epoch_hours) {
  double alpha = net_kw > 0.0 ? 1.0 : dc.net_meter;
  return elec_price * alpha * net_kw * epoch_hours + peak_delta + network_cost;
}

void validate_profile(const Scenario& s, const ExecRateTable& er,
                      const StrategyProfile& profile) {
  if (static_cast<int>(profile.strategies.size()) != s.num_tasks()) {
    throw InfeasibleProfile("profile must contain one strategy per task type");
  }
  for (int i = 0; i < s.num_tasks(); ++i) {
    const Strategy& st = profile.strategies[static_cast<size_t>(i)];
    if (st.player != i) {
      throw InfeasibleProfile("strategy at position " + std::to_string(i) +
                              " belongs to player " + std::to_string(st.player));
    }
    if (static_cast<int>(st.rates.size()) != s.num_dcs()) {
      throw InfeasibleProfile("strategy for task " + std::to_string(i + 1) +
                              " must list one rate per data center");
    }
    double sum = 0.0;
    for (int d = 0; d < s.num_dcs(); ++d) {
      double r = st.rates[static_cast<size_t>(d)];
      if (r < 0.0) {
        throw InfeasibleProfile("negative rate for task " + std::to_string(i + 1) +
                                " at data center " + std::to_string(d + 1));
      }
      if (r > er.at(i, d)) {
        throw InfeasibleProfile("rate " + std::to_string(r) + " for task " +
                                std::to_string(i + 1) + " exceeds ER " +
                                std::to_string(er.at(i, d)) + " at data center " +
                                std::to_string(d + 1));
      }
      sum += r;
    }
    double car = s.arrival_at(i, profile.tau);
    if (std::abs(sum - car) > 1e-9 * car + 1e-12) {
      throw InfeasibleProfile("rates for task " + std::to_string(i + 1) +
                              " sum to " + std::to_string(sum) +
                              ", expected CAR " + std::to_string(car));
    }
  }
}

EpochLedger make_epoch_ledger(const Scenario& s, const ExecRateTable& er,
                              const StrategyProfile& profile,
                              const EpochState& state) {
  validate_profile(s, er, profile);
  int hour = s.hour_of(state.tau);
  double h = s.epoch_hours;

  EpochLedger led;
  led.tau = state.tau;
  led.updated_prior_peak_kw.resize(static_cast<size_t>(s.num_dcs()));

  std::vector<double> ar(static_cast<size_t>(s.num_tasks()));
  std::vector<double> migrated(static_cast<size_t>(s.num_tasks()));
  for (int d = 0; d < s.num_dcs(); ++d) {
    const DataCenter& dcs = s.data_centers[static_cast<size_t>(d)];
    DcLedgerRow row;
    row.dc_id = dcs.id;
    double nodes = static_cast<double>(dcs.total_nodes());
    for (int i = 0; i < s.num_tasks(); ++i) {
      double rate = profile.strategies[static_cast<size_t>(i)].rates[static_cast<size_t>(d)];
      ar[static_cast<size_t>(i)] = rate;
      row.ar_total += rate;
      // Occupied node-slots whose requests landed at another DC first.
      migrated[static_cast<size_t>(i)] =
          (rate / er.at(i, d)) * nodes *
          (1.0 - s.origin_frac[static_cast<size_t>(i)][static_cast<size_t>(d)]);
    }
    row.power = dc_power(s, er, d, ar, state.tau);
    row.carbon_kg = dc_carbon_kg(dcs.carbon_at(hour), row.power.net_kw, h);
    row.network_cost_usd = network_cost_usd(s, migrated);

    double grid_draw = std::max(row.power.net_kw, 0.0);
    double prior = state.prior_peak_kw[static_cast<size_t>(d)];
    auto [delta, new_peak] =
        peak_cost_delta(dcs.peak_price, std::max(prior, grid_draw), prior);
    row.peak_delta_usd = delta;
    led.updated_prior_peak_kw[static_cast<size_t>(d)] = new_peak;

    double alpha = row.power.net_kw > 0.0 ? 1.0 : dcs.net_meter;
    row.energy_cost_usd = dcs.price_at(hour) * alpha * row.power.net_kw * h;
    row.total_cost_usd = row.energy_cost_usd + row.peak_delta_usd + row.network_cost_usd;

    led.cloud_carbon_kg += row.carbon_kg;
    led.cloud_cost_usd += row.total_cost_usd;
    led.dc.push_back(std::move(row));
  }
  return led;
}

double nc_max_usd(const Scenario& s, int task_idx, int dc_idx) {
  return s.network_price *
         static_cast<double>(s.data_centers[static_cast<size_t>(dc_idx)].total_nodes()) *
         s.task_types[static_cast<size_t>(task_idx)].size_gb;
}

PlayerEstimate estimate_carbon_player(const Scenario& s, const ExecRateTable& er,
                                      int player, std::span<const double> ar,
                                      int tau) {
  int hour = s.hour_of(tau);
  PlayerEstimate est;
  est.per_dc.resize(static_cast<size_t>(s.num_dcs()));
  for (int d = 0; d < s.num_dcs(); ++d) {
    double p = est_dc_power_kw(s, er, player, d, ar[static_cast<size_t>(d)], tau);
    double kg = s.data_centers[static_cast<size_t>(d)].carbon_at(hour) * p *
                s.epoch_hours;
    est.per_dc[static_cast<size_t>(d)] = kg;
    est.total += kg;
  }
  return est;
}

namespace {

// Unchecked per-task estimated power: the linear formula with no range check.
double est_power_raw(const Scenario& s, const ExecRateTable& er, int player,
                     int d, double ar, int tau) {
  return dc_power_max_kw(s, d, tau) * ar / er.at(player, d);
}

std::vector<double> est_draw_except(const Scenario& s, const ExecRateTable& er,
                                    const StrategyProfile& profile, int skip,
                                    int tau) {
  std::vector<double> draw(static_cast<size_t>(s.num_dcs()), 0.0);
  for (const Strategy& st : profile.strategies) {
    if (st.player == skip) continue;
    for (int d = 0; d < s.num_dcs(); ++d) {
      double p = est_power_raw(s, er, st.player, d, st.rates[static_cast<size_t>(d)], tau);
      draw[static_cast<size_t>(d)] += std::max(p, 0.0);
    }
  }
  return draw;
}

PlayerEstimate cost_player_impl(const Scenario& s, const ExecRateTable& er,
                                int player, std::span<const double> ar,
                                std::span<const double> peer_draw_kw,
                                const EpochState& state, bool checked) {
  int hour = s.hour_of(state.tau);
  double h = s.epoch_hours;
  PlayerEstimate est;
  est.per_dc.resize(static_cast<size_t>(s.num_dcs()));
  for (int d = 0; d < s.num_dcs(); ++d) {
    const DataCenter& dc = s.data_centers[static_cast<size_t>(d)];
    double p_est = checked
                       ? est_dc_power_kw(s, er, player, d, ar[static_cast<size_t>(d)], state.tau)
                       : est_power_raw(s, er, player, d, ar[static_cast<size_t>(d)], state.tau);
    double own_draw = std::max(p_est, 0.0);
    double total_draw = peer_draw_kw[static_cast<size_t>(d)] + own_draw;
    double prior = state.prior_peak_kw[static_cast<size_t>(d)];
    auto [delta, ignored] =
        peak_cost_delta(dc.peak_price, std::max(prior, total_draw), prior);
    (void)ignored;
    double delta_attr = delta;
    if (s.prorate_peak) {
      delta_attr = total_draw > 0.0 ? delta * own_draw / total_draw : 0.0;
    }
    double alpha = p_est > 0.0 ? 1.0 : dc.net_meter;
    double energy = dc.price_at(hour) * alpha * p_est * h;
    double network = nc_max_usd(s, player, d) * ar[static_cast<size_t>(d)] / er.at(player, d);
    double usd = energy + delta_attr + network;
    est.per_dc[static_cast<size_t>(d)] = usd;
    est.total += usd;
  }
  return est;
}

}  // namespace

std::vector<double> peer_est_draw_kw(const Scenario& s, const ExecRateTable& er,
                                     const StrategyProfile& profile, int player,
                                     int tau) {
  return est_draw_except(s, er, profile, player, tau);
}

std::vector<double> total_est_draw_kw(const Scenario& s, const ExecRateTable& er,
                                      const StrategyProfile& profile, int tau) {
  return est_draw_except(s, er, profile, -1, tau);
}

PlayerEstimate estimate_cost_player_given_peers(const Scenario& s,
                                                const ExecRateTable& er,
                                                int player,
                                                std::span<const double> ar,
                                                std::span<const double> peer_draw_kw,
                                                const EpochState& state) {
  return cost_player_impl(s, er, player, ar, peer_draw_kw, state, true);
}

PlayerEstimate estimate_cost_player(const Scenario& s, const ExecRateTable& er,
                                    int player, const StrategyProfile& profile,
                                    const EpochState& state) {
  auto peers = peer_est_draw_kw(s, er, profile, player, state.tau);
  return cost_player_impl(
      s, er, player, profile.strategies[static_cast<size_t>(player)].rates, peers,
      state, true);
}

namespace {

double objective_impl(const Scenario& s, const ExecRateTable& er,
                      const StrategyProfile& profile, const EpochState& state,
                      Objective objective, bool checked) {
  double total = 0.0;
  if (objective == Objective::Carbon) {
    int hour = s.hour_of(state.tau);
    for (const Strategy& st : profile.strategies) {
      for (int d = 0; d < s.num_dcs(); ++d) {
        double p = checked ? est_dc_power_kw(s, er, st.player, d,
                                             st.rates[static_cast<size_t>(d)], state.tau)
                           : est_power_raw(s, er, st.player, d,
                                           st.rates[static_cast<size_t>(d)], state.tau);
        total += s.data_centers[static_cast<size_t>(d)].carbon_at(hour) * p *
                 s.epoch_hours;
      }
    }
    return total;
  }
  // Cost: the peak context (total draw per DC) is shared by all players, so
  // build it once and hand each player the complement.
  auto all_draw = est_draw_except(s, er, profile, -1, state.tau);
  std::vector<double> peers(all_draw.size());
  for (const Strategy& st : profile.strategies) {
    for (int d = 0; d < s.num_dcs(); ++d) {
      double p = est_power_raw(s, er, st.player, d, st.rates[static_cast<size_t>(d)],
                               state.tau);
      peers[static_cast<size_t>(d)] =
          all_draw[static_cast<size_t>(d)] - std::max(p, 0.0);
    }
    total += cost_player_impl(s, er, st.player, st.rates, peers, state, checked).total;
  }
  return total;
}

}  // namespace

double cloud_objective(const Scenario& s, const ExecRateTable& er,
                       const StrategyProfile& profile, const EpochState& state,
                       Objective objective) {
  validate_profile(s, er, profile);
  return objective_impl(s, er, profile, state, objective, true);
}

double cloud_objective_unchecked(const Scenario& s, const ExecRateTable& er,
                                 const StrategyProfile& profile,
                                 const EpochState& state, Objective objective) {
  return objective_impl(s, er, profile, state, objective, false);
}

}  // namespace geosched
