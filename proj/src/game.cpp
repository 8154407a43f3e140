#include "geosched/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace geosched {

namespace {

// Moves the rate vector onto {sum == CAR, 0 <= rate <= cap} exactly, fixing
// the float dust left by arithmetic on the way.
void settle_exact(std::vector<double>& rates, std::span<const double> caps,
                  double car) {
  double sum = 0.0;
  for (size_t d = 0; d < rates.size(); ++d) {
    rates[d] = std::min(std::max(rates[d], 0.0), caps[d]);
    sum += rates[d];
  }
  double resid = car - sum;
  if (resid > 0.0) {
    for (size_t d = 0; d < rates.size() && resid > 0.0; ++d) {
      double before = rates[d];
      rates[d] = std::min(caps[d], rates[d] + resid);
      resid -= rates[d] - before;
    }
  } else if (resid < 0.0) {
    for (size_t d = 0; d < rates.size() && resid < 0.0; ++d) {
      double take = std::min(-resid, rates[d]);
      rates[d] -= take;
      resid += take;
    }
  }
}

std::vector<double> player_caps(const ExecRateTable& er, int player) {
  std::vector<double> caps(static_cast<size_t>(er.dcs));
  for (int d = 0; d < er.dcs; ++d) caps[static_cast<size_t>(d)] = er.at(player, d);
  return caps;
}

// Greedy fill over a linear objective: DCs sorted by marginal coefficient,
// cheapest group first, ties split proportionally to capacity.
std::vector<double> greedy_fill(std::span<const double> coef,
                                std::span<const double> caps, double car) {
  size_t n = coef.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return coef[a] < coef[b]; });

  std::vector<double> rates(n, 0.0);
  double remaining = car;
  size_t g = 0;
  while (g < n && remaining > 0.0) {
    // Collect the tie group starting at g.
    size_t h = g + 1;
    double c0 = coef[order[g]];
    while (h < n) {
      double c1 = coef[order[h]];
      if (std::abs(c1 - c0) > 1e-12 * std::max({1.0, std::abs(c0), std::abs(c1)})) break;
      ++h;
    }
    double group_cap = 0.0;
    for (size_t k = g; k < h; ++k) group_cap += caps[order[k]];
    double take = std::min(remaining, group_cap);
    if (group_cap > 0.0) {
      for (size_t k = g; k < h; ++k) {
        rates[order[k]] = take * caps[order[k]] / group_cap;
      }
    }
    remaining -= take;
    g = h;
  }
  return rates;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

}  // namespace

Strategy project_feasible(const Scenario& s, const ExecRateTable& er,
                          std::span<const double> raw_fractions, int player,
                          int tau) {
  int n_dcs = er.dcs;
  if (static_cast<int>(raw_fractions.size()) != n_dcs) {
    throw Error("raw_fractions must have one entry per data center");
  }
  double raw_sum = 0.0;
  for (double f : raw_fractions) {
    if (f < 0.0 || !std::isfinite(f)) throw Error("fractions must be finite and >= 0");
    raw_sum += f;
  }
  if (!(raw_sum > 0.0)) throw Error("fractions need at least one positive entry");

  Strategy st;
  st.player = player;
  st.rates.assign(static_cast<size_t>(n_dcs), 0.0);
  double car = s.arrival_at(player, tau);
  if (car == 0.0) return st;

  auto caps = player_caps(er, player);
  double cap_sum = std::accumulate(caps.begin(), caps.end(), 0.0);
  if (car > cap_sum) {
    throw NoFeasibleStrategy("CAR " + std::to_string(car) + " for task " +
                             std::to_string(player + 1) +
                             " exceeds total execution capacity " +
                             std::to_string(cap_sum));
  }

  for (int d = 0; d < n_dcs; ++d) {
    st.rates[static_cast<size_t>(d)] = raw_fractions[static_cast<size_t>(d)] / raw_sum * car;
  }
  // Clamp-and-redistribute: at most |D| rounds reach a fixpoint because each
  // round permanently saturates at least one DC.
  for (int round = 0; round < n_dcs; ++round) {
    double excess = 0.0;
    for (int d = 0; d < n_dcs; ++d) {
      double over = st.rates[static_cast<size_t>(d)] - caps[static_cast<size_t>(d)];
      if (over > 0.0) {
        excess += over;
        st.rates[static_cast<size_t>(d)] = caps[static_cast<size_t>(d)];
      }
    }
    if (excess <= 0.0) break;
    double headroom = 0.0;
    for (int d = 0; d < n_dcs; ++d) {
      headroom += caps[static_cast<size_t>(d)] - st.rates[static_cast<size_t>(d)];
    }
    if (headroom <= 0.0) break;
    double ratio = std::min(1.0, excess / headroom);
    for (int d = 0; d < n_dcs; ++d) {
      st.rates[static_cast<size_t>(d)] +=
          ratio * (caps[static_cast<size_t>(d)] - st.rates[static_cast<size_t>(d)]);
    }
  }
  settle_exact(st.rates, caps, car);
  return st;
}

StrategyProfile proportional_profile(const Scenario& s, const ExecRateTable& er,
                                     int tau) {
  StrategyProfile profile;
  profile.tau = tau;
  for (int i = 0; i < s.num_tasks(); ++i) {
    auto caps = player_caps(er, i);
    profile.strategies.push_back(project_feasible(s, er, caps, i, tau));
  }
  return profile;
}

double player_reward(const Scenario& s, const ExecRateTable& er, int player,
                     const StrategyProfile& profile, const EpochState& state,
                     Objective objective) {
  validate_profile(s, er, profile);
  const Strategy& st = profile.strategies[static_cast<size_t>(player)];
  if (objective == Objective::Carbon) {
    return estimate_carbon_player(s, er, player, st.rates, state.tau).total;
  }
  return estimate_cost_player(s, er, player, profile, state).total;
}

Strategy best_reply(const Scenario& s, const ExecRateTable& er, int player,
                    const StrategyProfile& profile, const EpochState& state,
                    Objective objective, const GameConfig& cfg) {
  int n_dcs = er.dcs;
  double car = s.arrival_at(player, state.tau);
  Strategy st;
  st.player = player;
  st.rates.assign(static_cast<size_t>(n_dcs), 0.0);
  if (car == 0.0) return st;

  auto caps = player_caps(er, player);
  int hour = s.hour_of(state.tau);
  double h = s.epoch_hours;

  // Marginal cost of one unit of rate on each DC, ignoring the peak charge
  // (carbon has no peak term, so for carbon this is the whole reward).
  std::vector<double> coef(static_cast<size_t>(n_dcs));
  for (int d = 0; d < n_dcs; ++d) {
    const DataCenter& dc = s.data_centers[static_cast<size_t>(d)];
    double dp_max = dc_power_max_kw(s, d, state.tau);
    double per_rate = dp_max / er.at(player, d);
    if (objective == Objective::Carbon) {
      coef[static_cast<size_t>(d)] = dc.carbon_at(hour) * per_rate * h;
    } else {
      double alpha = dp_max > 0.0 ? 1.0 : dc.net_meter;
      coef[static_cast<size_t>(d)] = dc.price_at(hour) * alpha * per_rate * h +
                                     nc_max_usd(s, player, d) / er.at(player, d);
    }
  }
  st.rates = greedy_fill(coef, caps, car);
  settle_exact(st.rates, caps, car);
  if (objective == Objective::Carbon) return st;

  // Cost couples DCs through the peak charge, so polish the greedy seed with
  // pairwise transfers at halving step sizes, scored through the full reward.
  auto peers = peer_est_draw_kw(s, er, profile, player, state.tau);
  auto reward = [&](const std::vector<double>& rates) {
    return estimate_cost_player_given_peers(s, er, player, rates, peers, state).total;
  };
  double best = reward(st.rates);
  for (double delta = cfg.ls_delta_start * car; delta >= cfg.ls_delta_min * car;
       delta *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int a = 0; a < n_dcs; ++a) {
        for (int b = 0; b < n_dcs; ++b) {
          if (a == b) continue;
          double move = std::min({delta, st.rates[static_cast<size_t>(a)],
                                  caps[static_cast<size_t>(b)] -
                                      st.rates[static_cast<size_t>(b)]});
          if (move <= 0.0) continue;
          std::vector<double> cand = st.rates;
          double to = std::min(caps[static_cast<size_t>(b)],
                               cand[static_cast<size_t>(b)] + move);
          double actual = to - cand[static_cast<size_t>(b)];
          cand[static_cast<size_t>(b)] = to;
          cand[static_cast<size_t>(a)] =
              std::max(0.0, cand[static_cast<size_t>(a)] - actual);
          double r = reward(cand);
          if (r < best - 1e-12 * (1.0 + std::abs(best))) {
            st.rates = std::move(cand);
            best = r;
            improved = true;
          }
        }
      }
    }
  }
  settle_exact(st.rates, caps, car);
  return st;
}

NashResult nash_solve(const Scenario& s, const ExecRateTable& er, int tau,
                      Objective objective, const EpochState& state,
                      const GameConfig& cfg) {
  NashResult res;
  StrategyProfile profile = proportional_profile(s, er, tau);
  StrategyProfile best_profile = profile;
  double best_obj = cloud_objective(s, er, profile, state, objective);

  for (int pass = 0; pass < cfg.max_rounds; ++pass) {
    double max_rel = 0.0;
    for (int i = 0; i < s.num_tasks(); ++i) {
      Strategy br = best_reply(s, er, i, profile, state, objective, cfg);
      ++res.best_reply_calls;
      double car = s.arrival_at(i, tau);
      double rel = l1_distance(profile.strategies[static_cast<size_t>(i)].rates,
                               br.rates) /
                   std::max(car, 1e-300);
      max_rel = std::max(max_rel, rel);
      profile.strategies[static_cast<size_t>(i)] = std::move(br);
    }
    double obj = cloud_objective(s, er, profile, state, objective);
    if (obj < best_obj) {
      best_obj = obj;
      best_profile = profile;
    }
    if (max_rel < cfg.eps_rel) {
      res.converged = true;
      break;
    }
    ++res.rounds;
  }

  res.profile = res.converged ? profile : best_profile;

  // Post-hoc epsilon-equilibrium certificate: how much any single player
  // could still gain from one more best reply.
  for (int i = 0; i < s.num_tasks(); ++i) {
    double before = player_reward(s, er, i, res.profile, state, objective);
    Strategy br = best_reply(s, er, i, res.profile, state, objective, cfg);
    ++res.best_reply_calls;
    StrategyProfile probe = res.profile;
    probe.strategies[static_cast<size_t>(i)] = std::move(br);
    double after = player_reward(s, er, i, probe, state, objective);
    double gain = (before - after) / std::max(std::abs(before), 1e-9);
    res.cert_max_improvement_rel = std::max(res.cert_max_improvement_rel, gain);
  }
  return res;
}

FdResult force_directed(const Scenario& s, const ExecRateTable& er, int tau,
                        Objective objective, const EpochState& state,
                        const GameConfig& cfg) {
  FdResult res;
  res.profile = proportional_profile(s, er, tau);
  double obj = cloud_objective(s, er, res.profile, state, objective);
  int n_tasks = s.num_tasks();
  int n_dcs = s.num_dcs();
  long cap_iters = static_cast<long>(cfg.fd_iter_factor) * n_tasks * n_dcs;

  std::vector<double> force(static_cast<size_t>(n_tasks) * static_cast<size_t>(n_dcs));
  for (long iter = 0; iter < cap_iters; ++iter) {
    double base = cloud_objective_unchecked(s, er, res.profile, state, objective);
    ++res.evals;
    for (int i = 0; i < n_tasks; ++i) {
      double car = s.arrival_at(i, tau);
      double step = cfg.fd_step * car;
      for (int d = 0; d < n_dcs; ++d) {
        size_t idx = static_cast<size_t>(i) * static_cast<size_t>(n_dcs) +
                     static_cast<size_t>(d);
        if (car == 0.0) {
          force[idx] = 0.0;
          continue;
        }
        StrategyProfile probe = res.profile;
        probe.strategies[static_cast<size_t>(i)].rates[static_cast<size_t>(d)] += step;
        force[idx] =
            (cloud_objective_unchecked(s, er, probe, state, objective) - base) / step;
        ++res.evals;
      }
    }

    // Source: loaded cell pushing hardest; target: that player's calmest DC
    // with headroom. Ties resolve to the lowest index for determinism.
    int src_i = -1, src_d = -1;
    double src_f = 0.0;
    for (int i = 0; i < n_tasks; ++i) {
      for (int d = 0; d < n_dcs; ++d) {
        if (res.profile.strategies[static_cast<size_t>(i)].rates[static_cast<size_t>(d)] <= 0.0) {
          continue;
        }
        double f = force[static_cast<size_t>(i) * static_cast<size_t>(n_dcs) +
                         static_cast<size_t>(d)];
        if (src_i < 0 || f > src_f) {
          src_i = i;
          src_d = d;
          src_f = f;
        }
      }
    }
    if (src_i < 0) break;

    int tgt_d = -1;
    double tgt_f = 0.0;
    for (int d = 0; d < n_dcs; ++d) {
      if (d == src_d) continue;
      double headroom =
          er.at(src_i, d) -
          res.profile.strategies[static_cast<size_t>(src_i)].rates[static_cast<size_t>(d)];
      if (headroom <= 0.0) continue;
      double f = force[static_cast<size_t>(src_i) * static_cast<size_t>(n_dcs) +
                       static_cast<size_t>(d)];
      if (tgt_d < 0 || f < tgt_f) {
        tgt_d = d;
        tgt_f = f;
      }
    }
    if (tgt_d < 0) break;

    double car = s.arrival_at(src_i, tau);
    auto& rates = res.profile.strategies[static_cast<size_t>(src_i)].rates;
    double quantum = std::min({cfg.fd_quantum * car, rates[static_cast<size_t>(src_d)],
                               er.at(src_i, tgt_d) - rates[static_cast<size_t>(tgt_d)]});
    if (quantum <= 0.0) break;

    StrategyProfile cand = res.profile;
    auto& crates = cand.strategies[static_cast<size_t>(src_i)].rates;
    double to = std::min(er.at(src_i, tgt_d), crates[static_cast<size_t>(tgt_d)] + quantum);
    double actual = to - crates[static_cast<size_t>(tgt_d)];
    crates[static_cast<size_t>(tgt_d)] = to;
    crates[static_cast<size_t>(src_d)] =
        std::max(0.0, crates[static_cast<size_t>(src_d)] - actual);
    double cand_obj = cloud_objective(s, er, cand, state, objective);
    ++res.evals;
    if (cand_obj >= obj - 1e-12 * (1.0 + std::abs(obj))) break;
    res.profile = std::move(cand);
    obj = cand_obj;
    ++res.moves;
  }
  return res;
}

OracleResult oracle_grid(const Scenario& s, const ExecRateTable& er, int tau,
                         Objective objective, const EpochState& state,
                         double resolution) {
  if (!(resolution > 0.0) || resolution > 1.0) {
    throw Error("resolution must lie in (0, 1]");
  }
  long steps = std::lround(1.0 / resolution);
  if (std::abs(steps * resolution - 1.0) > 1e-9) {
    throw Error("resolution must divide 1 evenly");
  }

  int n_tasks = s.num_tasks();
  int n_dcs = s.num_dcs();

  // Per-player candidate strategies: all compositions of `steps` grid units
  // over |D| slots, projected to feasibility.
  std::vector<std::vector<Strategy>> cands(static_cast<size_t>(n_tasks));
  double total = 1.0;
  for (int i = 0; i < n_tasks; ++i) {
    if (s.arrival_at(i, tau) == 0.0) {
      Strategy zero;
      zero.player = i;
      zero.rates.assign(static_cast<size_t>(n_dcs), 0.0);
      cands[static_cast<size_t>(i)].push_back(std::move(zero));
      continue;
    }
    std::vector<double> frac(static_cast<size_t>(n_dcs), 0.0);
    std::vector<long> units(static_cast<size_t>(n_dcs), 0);
    // Depth-first composition enumeration in lexicographic order.
    auto enumerate = [&](auto&& self, int slot, long left) -> void {
      if (slot == n_dcs - 1) {
        units[static_cast<size_t>(slot)] = left;
        for (int d = 0; d < n_dcs; ++d) {
          frac[static_cast<size_t>(d)] =
              static_cast<double>(units[static_cast<size_t>(d)]) /
              static_cast<double>(steps);
        }
        cands[static_cast<size_t>(i)].push_back(
            project_feasible(s, er, frac, i, tau));
        return;
      }
      for (long u = 0; u <= left; ++u) {
        units[static_cast<size_t>(slot)] = u;
        self(self, slot + 1, left - u);
      }
    };
    enumerate(enumerate, 0, steps);
    total *= static_cast<double>(cands[static_cast<size_t>(i)].size());
    if (total > 1e7) {
      throw TooLarge("grid would enumerate more than 1e7 profiles");
    }
  }
  if (total > 1e7) throw TooLarge("grid would enumerate more than 1e7 profiles");

  OracleResult res;
  StrategyProfile profile;
  profile.tau = tau;
  profile.strategies.resize(static_cast<size_t>(n_tasks));
  std::vector<size_t> pick(static_cast<size_t>(n_tasks), 0);
  bool first = true;
  while (true) {
    for (int i = 0; i < n_tasks; ++i) {
      profile.strategies[static_cast<size_t>(i)] =
          cands[static_cast<size_t>(i)][pick[static_cast<size_t>(i)]];
    }
    double val = cloud_objective_unchecked(s, er, profile, state, objective);
    ++res.profiles_evaluated;
    if (first || val < res.objective_value) {
      res.objective_value = val;
      res.profile = profile;
      first = false;
    }
    // Odometer increment over the per-player candidate lists.
    int i = n_tasks - 1;
    while (i >= 0) {
      if (++pick[static_cast<size_t>(i)] < cands[static_cast<size_t>(i)].size()) break;
      pick[static_cast<size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return res;
}

}  // namespace geosched
