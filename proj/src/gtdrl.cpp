#include "geosched/gtdrl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace geosched {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kEps = 1e-9;

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

// Stops training once the reward curve goes flat: the 50-episode moving
// average must beat its own value from 50 episodes earlier by more than
// 0.1%, and 50 consecutive failures count as a plateau. Raw episode rewards
// never stop jittering (episode difficulty is random), so the rule works on
// the smoothed curve and a lookback rather than a best-ever watermark,
// which a single dip could stall forever.
struct PlateauTracker {
  static constexpr std::size_t kWindow = 50;
  std::vector<double> window;
  double window_sum = 0.0;
  std::size_t next = 0;
  std::vector<double> avg_hist;
  int stall = 0;

  bool record(double r) {
    if (window.size() < kWindow) {
      window.push_back(r);
      window_sum += r;
      if (window.size() < kWindow) return false;
    } else {
      window_sum += r - window[next];
      window[next] = r;
      next = (next + 1) % kWindow;
    }
    avg_hist.push_back(window_sum / static_cast<double>(kWindow));
    if (avg_hist.size() <= kWindow) return false;
    const double avg = avg_hist.back();
    const double past = avg_hist[avg_hist.size() - 1 - kWindow];
    const double margin = 0.001 * std::abs(past) + 1e-12;
    if (avg > past + margin) {
      stall = 0;
    } else {
      ++stall;
    }
    return stall >= 50;
  }
};

// Rewrites the scenario's arrival table with one day of random loads. Each
// epoch draws a cloud-wide demand level in [0.2, 1.0] of the feasible
// maximum and splits it across tasks with flat simplex weights, so the
// utilization shares sum to the drawn level. Independent per-task draws
// would stack to several times the cloud's capacity and leave most episodes
// saturated, where the reward no longer reacts to the allocation. Draw order
// is epoch-major (level first, then one weight per task), which is part of
// the reproducibility contract.
void draw_episode_arrivals(Scenario& es, std::span<const double> cap,
                           Rng& rng) {
  const std::size_t n_tasks = es.arrivals.size();
  std::vector<double> w(n_tasks);
  for (int t = 0; t < es.epochs_per_day; ++t) {
    const double level = rng.uniform(0.2, 1.0);
    double sum = 0.0;
    for (double& wi : w) {
      wi = -std::log(1.0 - rng.uniform());
      sum += wi;
    }
    sum = std::max(sum, 1e-300);
    for (std::size_t i = 0; i < n_tasks; ++i) {
      es.arrivals[i][static_cast<std::size_t>(t)] =
          (w[i] / sum) * level * cap[i];
    }
  }
}

std::vector<double> block_softmax(std::span<const double> z, int blocks,
                                  int width) {
  std::vector<double> out;
  out.reserve(z.size());
  for (int b = 0; b < blocks; ++b) {
    std::vector<double> fr = drl::softmax(
        z.subspan(static_cast<std::size_t>(b) * static_cast<std::size_t>(width),
                  static_cast<std::size_t>(width)));
    out.insert(out.end(), fr.begin(), fr.end());
  }
  return out;
}

void check_prior_peak(const Scenario& s, std::span<const double> prior) {
  if (static_cast<int>(prior.size()) != s.num_dcs()) {
    throw Error("prior peak vector must have one entry per data center");
  }
}

}  // namespace

StateNorms make_state_norms(const Scenario& s, const ExecRateTable& er) {
  StateNorms n;
  n.max_carbon = 0.0;
  n.max_price = 0.0;
  for (int d = 0; d < s.num_dcs(); ++d) {
    const DataCenter& dc = s.data_centers[static_cast<std::size_t>(d)];
    for (int hour = 0; hour < s.epochs_per_day; ++hour) {
      n.max_carbon = std::max(n.max_carbon, dc.carbon_at(hour));
      n.max_price = std::max(n.max_price, dc.price_at(hour));
    }
    n.gross_max.push_back(dc_gross_max_kw(s, d));
  }
  n.cap = er.cap;
  for (int i = 0; i < s.num_tasks(); ++i) {
    double mx = 0.0;
    for (int d = 0; d < s.num_dcs(); ++d) {
      mx = std::max(mx, nc_max_usd(s, i, d));
    }
    n.max_nc.push_back(mx);
  }
  return n;
}

std::vector<double> build_agent_state(const Scenario& s, const ExecRateTable& er,
                                      const StateNorms& norms, int player,
                                      double car, int tau,
                                      std::span<const double> prior_peak_kw) {
  check_prior_peak(s, prior_peak_kw);
  if (player < 0 || player >= s.num_tasks()) throw Error("player out of range");
  if (!(car >= 0.0) || !std::isfinite(car)) throw Error("CAR must be finite and >= 0");

  const int n_dcs = s.num_dcs();
  const int hour = s.hour_of(tau);
  std::vector<double> v(static_cast<std::size_t>(agent_state_dim(n_dcs)));
  const double cap = std::max(norms.cap[static_cast<std::size_t>(player)], kEps);
  v[0] = car / cap;
  std::vector<double> carbon_slope(static_cast<std::size_t>(n_dcs));
  std::vector<double> cost_slope(static_cast<std::size_t>(n_dcs));
  std::vector<double> peak_slope(static_cast<std::size_t>(n_dcs));
  double carbon_ref = kEps, cost_ref = kEps, peak_ref = kEps;
  for (int d = 0; d < n_dcs; ++d) {
    const DataCenter& dc = s.data_centers[static_cast<std::size_t>(d)];
    const std::size_t ud = static_cast<std::size_t>(d);
    const double p_unit = dc_power_max_kw(s, d, tau);
    const double er_id = std::max(er.at(player, d), kEps);
    const double alpha = p_unit > 0.0 ? 1.0 : dc.net_meter;
    carbon_slope[ud] = dc.carbon_at(hour) * p_unit * s.epoch_hours / er_id;
    cost_slope[ud] = (dc.price_at(hour) * alpha * p_unit * s.epoch_hours +
                      nc_max_usd(s, player, d)) /
                     er_id;
    peak_slope[ud] = dc.peak_price * std::max(p_unit, 0.0) / er_id;
    carbon_ref = std::max(carbon_ref, std::abs(carbon_slope[ud]));
    cost_ref = std::max(cost_ref, std::abs(cost_slope[ud]));
    peak_ref = std::max(peak_ref, std::abs(peak_slope[ud]));
  }
  for (int d = 0; d < n_dcs; ++d) {
    const DataCenter& dc = s.data_centers[static_cast<std::size_t>(d)];
    const std::size_t ud = static_cast<std::size_t>(d);
    const std::size_t o = 1 + 10 * ud;
    v[o + 0] = er.at(player, d) / cap;
    v[o + 1] = dc.carbon_at(hour) / std::max(norms.max_carbon, kEps);
    v[o + 2] = dc.price_at(hour) / std::max(norms.max_price, kEps);
    v[o + 3] = dc.renewable_at(hour) / std::max(dc_power_max_kw(s, d, tau), kEps);
    v[o + 4] = dc.net_meter;
    v[o + 5] = prior_peak_kw[ud] /
               std::max(norms.gross_max[ud], kEps);
    v[o + 6] = nc_max_usd(s, player, d) /
               std::max(norms.max_nc[static_cast<std::size_t>(player)], kEps);
    v[o + 7] = carbon_slope[ud] / carbon_ref;
    v[o + 8] = cost_slope[ud] / cost_ref;
    v[o + 9] = peak_slope[ud] / peak_ref;
  }
  const double ang = kTwoPi * hour / s.epochs_per_day;
  v[v.size() - 2] = std::sin(ang);
  v[v.size() - 1] = std::cos(ang);
  for (double& x : v) x = clamp1(x);
  return v;
}

std::vector<double> build_mono_state(const Scenario& s, const ExecRateTable& er,
                                     const StateNorms& norms,
                                     std::span<const double> car, int tau,
                                     std::span<const double> prior_peak_kw) {
  check_prior_peak(s, prior_peak_kw);
  const int n_tasks = s.num_tasks();
  const int n_dcs = s.num_dcs();
  if (static_cast<int>(car.size()) != n_tasks) {
    throw Error("CAR vector must have one entry per task");
  }
  const int hour = s.hour_of(tau);
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(mono_state_dim(n_tasks, n_dcs)));
  for (int i = 0; i < n_tasks; ++i) {
    v.push_back(car[static_cast<std::size_t>(i)] /
                std::max(norms.cap[static_cast<std::size_t>(i)], kEps));
  }
  for (int d = 0; d < n_dcs; ++d) {
    const DataCenter& dc = s.data_centers[static_cast<std::size_t>(d)];
    v.push_back(dc.carbon_at(hour) / std::max(norms.max_carbon, kEps));
    v.push_back(dc.price_at(hour) / std::max(norms.max_price, kEps));
    v.push_back(dc.renewable_at(hour) / std::max(dc_power_max_kw(s, d, tau), kEps));
    v.push_back(dc.net_meter);
    v.push_back(prior_peak_kw[static_cast<std::size_t>(d)] /
                std::max(norms.gross_max[static_cast<std::size_t>(d)], kEps));
  }
  std::vector<double> carbon_slope(static_cast<std::size_t>(n_dcs));
  std::vector<double> cost_slope(static_cast<std::size_t>(n_dcs));
  std::vector<double> peak_slope(static_cast<std::size_t>(n_dcs));
  for (int i = 0; i < n_tasks; ++i) {
    const double cap = std::max(norms.cap[static_cast<std::size_t>(i)], kEps);
    double carbon_ref = kEps, cost_ref = kEps, peak_ref = kEps;
    for (int d = 0; d < n_dcs; ++d) {
      const DataCenter& dc = s.data_centers[static_cast<std::size_t>(d)];
      const std::size_t ud = static_cast<std::size_t>(d);
      const double p_unit = dc_power_max_kw(s, d, tau);
      const double er_id = std::max(er.at(i, d), kEps);
      const double alpha = p_unit > 0.0 ? 1.0 : dc.net_meter;
      carbon_slope[ud] = dc.carbon_at(hour) * p_unit * s.epoch_hours / er_id;
      cost_slope[ud] = (dc.price_at(hour) * alpha * p_unit * s.epoch_hours +
                        nc_max_usd(s, i, d)) /
                       er_id;
      peak_slope[ud] = dc.peak_price * std::max(p_unit, 0.0) / er_id;
      carbon_ref = std::max(carbon_ref, std::abs(carbon_slope[ud]));
      cost_ref = std::max(cost_ref, std::abs(cost_slope[ud]));
      peak_ref = std::max(peak_ref, std::abs(peak_slope[ud]));
    }
    for (int d = 0; d < n_dcs; ++d) {
      const std::size_t ud = static_cast<std::size_t>(d);
      v.push_back(er.at(i, d) / cap);
      v.push_back(nc_max_usd(s, i, d) /
                  std::max(norms.max_nc[static_cast<std::size_t>(i)], kEps));
      v.push_back(carbon_slope[ud] / carbon_ref);
      v.push_back(cost_slope[ud] / cost_ref);
      v.push_back(peak_slope[ud] / peak_ref);
    }
  }
  const double ang = kTwoPi * hour / s.epochs_per_day;
  v.push_back(std::sin(ang));
  v.push_back(std::cos(ang));
  for (double& x : v) x = clamp1(x);
  return v;
}

AgentPool make_agent_pool(const Scenario& s, Objective objective,
                          const drl::PpoConfig& cfg) {
  AgentPool pool;
  pool.objective = objective;
  pool.ppo = cfg;
  pool.num_dcs = s.num_dcs();
  pool.n_state = agent_state_dim(pool.num_dcs);
  for (int i = 0; i < s.num_tasks(); ++i) {
    Agent a;
    a.policy = drl::make_policy(pool.n_state, pool.num_dcs);
    a.value = drl::make_value(pool.n_state);
    pool.agents.push_back(std::move(a));
  }
  pool.log.per_agent_reward.assign(pool.agents.size(), {});
  pool.log.non_finite_updates.assign(pool.agents.size(), 0);
  return pool;
}

StrategyProfile gtdrl_allocate(const AgentPool& pool, const Scenario& s,
                               const ExecRateTable& er, int tau,
                               std::span<const double> prior_peak_kw,
                               Objective objective, ActMode mode,
                               uint64_t seed) {
  const int n_tasks = s.num_tasks();
  const int n_dcs = s.num_dcs();
  if (pool.objective != objective) {
    throw Error(std::string("agent pool was trained for ") +
                objective_name(pool.objective) + " but " +
                objective_name(objective) + " was requested");
  }
  if (static_cast<int>(pool.agents.size()) != n_tasks || pool.num_dcs != n_dcs ||
      pool.n_state != agent_state_dim(n_dcs)) {
    throw Error("agent pool does not match the scenario shape");
  }
  check_prior_peak(s, prior_peak_kw);

  const StateNorms norms = make_state_norms(s, er);
  std::vector<double> peak_ctx(prior_peak_kw.begin(), prior_peak_kw.end());
  StrategyProfile profile;
  profile.tau = tau;
  profile.strategies.resize(static_cast<std::size_t>(n_tasks));
  const int rounds = std::max(1, pool.gt_rounds);
  for (int round = 0; round < rounds; ++round) {
    // Players act independently: no agent sees another's action this round,
    // and stochastic draws use per-player seeds, so evaluation order cannot
    // influence the outcome.
    for (int i = 0; i < n_tasks; ++i) {
      const std::vector<double> obs = build_agent_state(
          s, er, norms, i, s.arrival_at(i, tau), tau, peak_ctx);
      std::vector<double> fr;
      if (mode == ActMode::Deterministic) {
        fr = drl::forward_policy(pool.agents[static_cast<std::size_t>(i)].policy, obs);
      } else {
        Rng r(derive_seed(seed, static_cast<uint64_t>(round) * 1000003ULL +
                                    static_cast<uint64_t>(i)));
        fr = drl::sample_action(pool.agents[static_cast<std::size_t>(i)].policy,
                                obs, r)
                 .fractions;
      }
      profile.strategies[static_cast<std::size_t>(i)] =
          project_feasible(s, er, fr, i, tau);
    }
    if (round + 1 < rounds) {
      // Re-feed peer context: next round observes the peak each DC would see
      // if this round's profile were realized.
      const std::vector<double> est = total_est_draw_kw(s, er, profile, tau);
      for (int d = 0; d < n_dcs; ++d) {
        peak_ctx[static_cast<std::size_t>(d)] =
            std::max(prior_peak_kw[static_cast<std::size_t>(d)],
                     est[static_cast<std::size_t>(d)]);
      }
    }
  }
  return profile;
}

std::vector<double> reward_norms(const Scenario& s, const ExecRateTable& er,
                                 Objective objective) {
  (void)er;
  const int n_tasks = s.num_tasks();
  const int n_dcs = s.num_dcs();
  std::vector<double> out(static_cast<std::size_t>(n_tasks), kEps);
  for (int i = 0; i < n_tasks; ++i) {
    double worst = 0.0;
    for (int hour = 0; hour < s.epochs_per_day; ++hour) {
      double total = 0.0;
      for (int d = 0; d < n_dcs; ++d) {
        const DataCenter& dc = s.data_centers[static_cast<std::size_t>(d)];
        const double dpmax = std::max(dc_power_max_kw(s, d, hour), 0.0);
        if (objective == Objective::Carbon) {
          total += dc.carbon_at(hour) * dpmax * s.epoch_hours;
        } else {
          total += dc.price_at(hour) * dpmax * s.epoch_hours + nc_max_usd(s, i, d);
        }
      }
      worst = std::max(worst, total);
    }
    out[static_cast<std::size_t>(i)] =
        std::max(out[static_cast<std::size_t>(i)], worst);
  }
  return out;
}

AgentPool gtdrl_train(const Scenario& s, Objective objective,
                      const drl::PpoConfig& cfg, int episodes, uint64_t seed) {
  if (episodes < 0) throw Error("episodes must be >= 0");
  const ExecRateTable er = build_exec_rates(s);
  const int n_tasks = s.num_tasks();
  const int n_dcs = s.num_dcs();
  const int epochs = s.epochs_per_day;

  AgentPool pool = make_agent_pool(s, objective, cfg);
  pool.ppo.seed = seed;
  for (int i = 0; i < n_tasks; ++i) {
    Agent& a = pool.agents[static_cast<std::size_t>(i)];
    drl::randomize_policy(a.policy, derive_seed(seed, 3000 + static_cast<uint64_t>(i)));
    drl::randomize_value(a.value, derive_seed(seed, 4000 + static_cast<uint64_t>(i)));
  }
  if (episodes == 0) return pool;

  const StateNorms norms = make_state_norms(s, er);
  const std::vector<double> rnorm = reward_norms(s, er, objective);
  Scenario es = s;  // arrival table rewritten per episode
  Rng car_rng(derive_seed(seed, 1));
  std::vector<Rng> act_rng, upd_rng;
  act_rng.reserve(static_cast<std::size_t>(n_tasks));
  upd_rng.reserve(static_cast<std::size_t>(n_tasks));
  for (int i = 0; i < n_tasks; ++i) {
    act_rng.emplace_back(derive_seed(seed, 1000 + static_cast<uint64_t>(i)));
    upd_rng.emplace_back(derive_seed(seed, 2000 + static_cast<uint64_t>(i)));
  }
  std::vector<drl::Trajectory> traj(static_cast<std::size_t>(n_tasks));
  PlateauTracker plateau;
  const int window = std::max(1, cfg.rollout_episodes);

  for (int ep = 0; ep < episodes; ++ep) {
    draw_episode_arrivals(es, er.cap, car_rng);
    EpochState st = fresh_month_state(n_dcs);
    std::vector<double> ep_return(static_cast<std::size_t>(n_tasks), 0.0);

    for (int tau = 0; tau < epochs; ++tau) {
      st.tau = tau;
      StrategyProfile profile;
      profile.tau = tau;
      profile.strategies.resize(static_cast<std::size_t>(n_tasks));
      std::vector<std::vector<double>> obs(static_cast<std::size_t>(n_tasks));
      std::vector<drl::ActionSample> smp(static_cast<std::size_t>(n_tasks));
      std::vector<double> val(static_cast<std::size_t>(n_tasks));
      for (int i = 0; i < n_tasks; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        Agent& a = pool.agents[ui];
        obs[ui] = build_agent_state(es, er, norms, i, es.arrival_at(i, tau), tau,
                                    st.prior_peak_kw);
        smp[ui] = drl::sample_action(a.policy, obs[ui], act_rng[ui]);
        profile.strategies[ui] = project_feasible(es, er, smp[ui].fractions, i, tau);
        val[ui] = drl::value_forward(a.value, obs[ui]);
      }
      const EpochLedger led = make_epoch_ledger(es, er, profile, st);
      for (int i = 0; i < n_tasks; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        const double est =
            objective == Objective::Carbon
                ? estimate_carbon_player(es, er, i, profile.strategies[ui].rates,
                                         tau)
                      .total
                : estimate_cost_player(es, er, i, profile, st).total;
        // Normalize by the step's own demand so heavy and light draws score
        // on per-unit terms. Scaling a state's reward does not move that
        // state's best action, but it keeps episode difficulty out of the
        // training curve, which would otherwise swamp the plateau rule.
        const double load = es.arrival_at(i, tau) /
                            std::max(er.cap[ui], kEps);
        const double r = -est / (rnorm[ui] * std::max(load, 0.05));
        ep_return[ui] += r;
        traj[ui].steps.push_back({std::move(obs[ui]), std::move(smp[ui].z),
                                  smp[ui].log_prob, r, val[ui],
                                  tau + 1 == epochs});
      }
      st.prior_peak_kw = led.updated_prior_peak_kw;
    }

    double pooled = 0.0;
    for (int i = 0; i < n_tasks; ++i) {
      const std::size_t ui = static_cast<std::size_t>(i);
      pool.log.per_agent_reward[ui].push_back(ep_return[ui]);
      pooled += ep_return[ui];
    }
    pooled /= static_cast<double>(n_tasks);
    pool.log.mean_episode_reward.push_back(pooled);
    pool.log.episodes_run = ep + 1;

    if ((ep + 1) % window == 0) {
      for (int i = 0; i < n_tasks; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        Agent& a = pool.agents[ui];
        drl::RolloutBatch batch =
            drl::make_batch(traj[ui], cfg.gamma, cfg.lambda_gae);
        // Anneal the step size and exploration bonus together: early updates
        // cross the uniform-start region quickly, late ones settle into a
        // basin instead of orbiting it, which is where flat-curve stops were
        // leaving policies of uneven quality from seed to seed.
        drl::PpoConfig step_cfg = cfg;
        const double anneal =
            std::max(0.2, 1.0 - static_cast<double>(a.updates) / 150.0);
        step_cfg.lr = cfg.lr * anneal;
        step_cfg.entropy_coef = cfg.entropy_coef * anneal;
        const drl::PpoStats stats =
            drl::ppo_update(a.policy, a.value, a.policy_adam, a.value_adam,
                            batch, step_cfg, upd_rng[ui]);
        a.updates += 1;
        if (stats.aborted_non_finite) pool.log.non_finite_updates[ui] += 1;
        traj[ui].steps.clear();
      }
    }
    if (plateau.record(pooled)) {
      pool.log.plateaued = true;
      break;
    }
  }
  return pool;
}

MonoAgent make_mono_agent(const Scenario& s, Objective objective,
                          const drl::PpoConfig& cfg) {
  MonoAgent a;
  a.objective = objective;
  a.ppo = cfg;
  a.num_tasks = s.num_tasks();
  a.num_dcs = s.num_dcs();
  a.n_state = mono_state_dim(a.num_tasks, a.num_dcs);
  a.policy = drl::make_policy(a.n_state, a.num_tasks * a.num_dcs);
  a.value = drl::make_value(a.n_state);
  a.log.per_agent_reward.assign(1, {});
  a.log.non_finite_updates.assign(1, 0);
  return a;
}

StrategyProfile mono_ppo_allocate(const MonoAgent& agent, const Scenario& s,
                                  const ExecRateTable& er, int tau,
                                  std::span<const double> prior_peak_kw,
                                  Objective objective, ActMode mode,
                                  uint64_t seed) {
  const int n_tasks = s.num_tasks();
  const int n_dcs = s.num_dcs();
  if (agent.objective != objective) {
    throw Error(std::string("agent was trained for ") +
                objective_name(agent.objective) + " but " +
                objective_name(objective) + " was requested");
  }
  if (agent.num_tasks != n_tasks || agent.num_dcs != n_dcs ||
      agent.n_state != mono_state_dim(n_tasks, n_dcs)) {
    throw Error("agent does not match the scenario shape");
  }
  check_prior_peak(s, prior_peak_kw);

  const StateNorms norms = make_state_norms(s, er);
  std::vector<double> car(static_cast<std::size_t>(n_tasks));
  for (int i = 0; i < n_tasks; ++i) car[static_cast<std::size_t>(i)] = s.arrival_at(i, tau);
  const std::vector<double> obs =
      build_mono_state(s, er, norms, car, tau, prior_peak_kw);

  std::vector<double> z;
  if (mode == ActMode::Deterministic) {
    z = drl::policy_logits(agent.policy, obs);
  } else {
    Rng r(derive_seed(seed, 1));
    z = drl::sample_action(agent.policy, obs, r).z;
  }
  const std::vector<double> fr = block_softmax(z, n_tasks, n_dcs);

  StrategyProfile profile;
  profile.tau = tau;
  for (int i = 0; i < n_tasks; ++i) {
    const std::span<const double> block(
        fr.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n_dcs),
        static_cast<std::size_t>(n_dcs));
    profile.strategies.push_back(project_feasible(s, er, block, i, tau));
  }
  return profile;
}

MonoAgent mono_ppo_train(const Scenario& s, Objective objective,
                         const drl::PpoConfig& cfg, int episodes,
                         uint64_t seed) {
  if (episodes < 0) throw Error("episodes must be >= 0");
  const ExecRateTable er = build_exec_rates(s);
  const int n_tasks = s.num_tasks();
  const int n_dcs = s.num_dcs();
  const int epochs = s.epochs_per_day;

  MonoAgent agent = make_mono_agent(s, objective, cfg);
  agent.ppo.seed = seed;
  drl::randomize_policy(agent.policy, derive_seed(seed, 3000));
  drl::randomize_value(agent.value, derive_seed(seed, 4000));
  if (episodes == 0) return agent;

  const StateNorms norms = make_state_norms(s, er);
  const std::vector<double> rnorm = reward_norms(s, er, objective);
  double norm_total = 0.0;
  for (double n : rnorm) norm_total += n;
  norm_total = std::max(norm_total, kEps);

  Scenario es = s;
  Rng car_rng(derive_seed(seed, 1));
  Rng act_rng(derive_seed(seed, 1000));
  Rng upd_rng(derive_seed(seed, 2000));
  drl::Trajectory traj;
  PlateauTracker plateau;
  const int window = std::max(1, cfg.rollout_episodes);
  std::vector<double> car(static_cast<std::size_t>(n_tasks));

  for (int ep = 0; ep < episodes; ++ep) {
    draw_episode_arrivals(es, er.cap, car_rng);
    EpochState st = fresh_month_state(n_dcs);
    double ep_return = 0.0;

    for (int tau = 0; tau < epochs; ++tau) {
      st.tau = tau;
      for (int i = 0; i < n_tasks; ++i) {
        car[static_cast<std::size_t>(i)] = es.arrival_at(i, tau);
      }
      std::vector<double> obs =
          build_mono_state(es, er, norms, car, tau, st.prior_peak_kw);
      drl::ActionSample smp = drl::sample_action(agent.policy, obs, act_rng);
      const std::vector<double> fr = block_softmax(smp.z, n_tasks, n_dcs);

      StrategyProfile profile;
      profile.tau = tau;
      for (int i = 0; i < n_tasks; ++i) {
        const std::span<const double> block(
            fr.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(n_dcs),
            static_cast<std::size_t>(n_dcs));
        profile.strategies.push_back(project_feasible(es, er, block, i, tau));
      }

      const double val = drl::value_forward(agent.value, obs);
      const double est = cloud_objective(es, er, profile, st, objective);
      // Same per-unit normalization as the per-agent trainer, against the
      // cloud-wide utilization of this step's draw.
      double util = 0.0;
      for (int i = 0; i < n_tasks; ++i) {
        util += car[static_cast<std::size_t>(i)] /
                std::max(er.cap[static_cast<std::size_t>(i)], kEps);
      }
      const double r = -est / (norm_total * std::max(util, 0.05));
      ep_return += r;
      traj.steps.push_back({std::move(obs), std::move(smp.z), smp.log_prob, r,
                            val, tau + 1 == epochs});

      const EpochLedger led = make_epoch_ledger(es, er, profile, st);
      st.prior_peak_kw = led.updated_prior_peak_kw;
    }

    agent.log.per_agent_reward[0].push_back(ep_return);
    agent.log.mean_episode_reward.push_back(ep_return);
    agent.log.episodes_run = ep + 1;

    if ((ep + 1) % window == 0) {
      drl::RolloutBatch batch = drl::make_batch(traj, cfg.gamma, cfg.lambda_gae);
      // Same annealing schedule as the per-agent trainer.
      drl::PpoConfig step_cfg = cfg;
      const double anneal =
          std::max(0.2, 1.0 - static_cast<double>(agent.updates) / 150.0);
      step_cfg.lr = cfg.lr * anneal;
      step_cfg.entropy_coef = cfg.entropy_coef * anneal;
      const drl::PpoStats stats =
          drl::ppo_update(agent.policy, agent.value, agent.policy_adam,
                          agent.value_adam, batch, step_cfg, upd_rng);
      agent.updates += 1;
      if (stats.aborted_non_finite) agent.log.non_finite_updates[0] += 1;
      traj.steps.clear();
    }
    if (plateau.record(ep_return)) {
      agent.log.plateaued = true;
      break;
    }
  }
  return agent;
}

// Checkpoint bundles ---------------------------------------------------------

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_checkpoint_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCheckpoint("missing checkpoint file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json ppo_to_json(const drl::PpoConfig& c) {
  json j;
  j["clip_eps"] = c.clip_eps;
  j["gamma"] = c.gamma;
  j["lambda_gae"] = c.lambda_gae;
  j["lr"] = c.lr;
  j["epochs_per_update"] = c.epochs_per_update;
  j["minibatch"] = c.minibatch;
  j["value_coef"] = c.value_coef;
  j["entropy_coef"] = c.entropy_coef;
  j["grad_clip_norm"] = c.grad_clip_norm;
  j["rollout_episodes"] = c.rollout_episodes;
  j["seed"] = c.seed;
  return j;
}

drl::PpoConfig ppo_from_json(const json& j) {
  drl::PpoConfig c;
  try {
    c.clip_eps = j.at("clip_eps").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.lambda_gae = j.at("lambda_gae").get<double>();
    c.lr = j.at("lr").get<double>();
    c.epochs_per_update = j.at("epochs_per_update").get<int>();
    c.minibatch = j.at("minibatch").get<int>();
    c.value_coef = j.at("value_coef").get<double>();
    c.entropy_coef = j.at("entropy_coef").get<double>();
    c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
    c.rollout_episodes = j.at("rollout_episodes").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
  } catch (const json::exception& e) {
    throw MalformedConfig(std::string("checkpoint: bad ppo config: ") + e.what());
  }
  return c;
}

json log_to_json(const TrainLog& log) {
  json j;
  j["mean_episode_reward"] = log.mean_episode_reward;
  j["episodes_run"] = log.episodes_run;
  j["plateaued"] = log.plateaued;
  j["non_finite_updates"] = log.non_finite_updates;
  return j;
}

TrainLog log_from_json(const json& j, std::size_t agents) {
  TrainLog log;
  log.per_agent_reward.assign(agents, {});  // per-agent curves are not persisted
  try {
    log.mean_episode_reward = j.at("mean_episode_reward").get<std::vector<double>>();
    log.episodes_run = j.at("episodes_run").get<int>();
    log.plateaued = j.at("plateaued").get<bool>();
    log.non_finite_updates = j.at("non_finite_updates").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw MalformedConfig(std::string("checkpoint: bad training log: ") + e.what());
  }
  return log;
}

Objective objective_from_name(const std::string& name) {
  if (name == "carbon") return Objective::Carbon;
  if (name == "cost") return Objective::Cost;
  throw MalformedConfig("checkpoint: unknown objective \"" + name + "\"");
}

json load_manifest(const fs::path& dir, const char* kind) {
  const fs::path mpath = dir / "manifest.json";
  std::error_code ec;
  if (!fs::exists(mpath, ec)) {
    throw MissingCheckpoint("no checkpoint manifest at " + mpath.string());
  }
  json j;
  try {
    j = json::parse(read_checkpoint_text(mpath));
  } catch (const json::exception& e) {
    throw MalformedConfig(std::string("checkpoint: bad manifest: ") + e.what());
  }
  if (j.value("kind", "") != kind) {
    throw MalformedConfig(std::string("checkpoint: expected kind \"") + kind +
                          "\" in " + mpath.string());
  }
  return j;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
}

}  // namespace

void save_agent_pool(const AgentPool& pool, const std::string& dir) {
  const fs::path base(dir);
  ensure_dir(base);
  json manifest;
  manifest["kind"] = "gtdrl_pool";
  manifest["objective"] = objective_name(pool.objective);
  manifest["num_agents"] = pool.agents.size();
  manifest["num_dcs"] = pool.num_dcs;
  manifest["n_state"] = pool.n_state;
  manifest["gt_rounds"] = pool.gt_rounds;
  manifest["ppo"] = ppo_to_json(pool.ppo);
  manifest["log"] = log_to_json(pool.log);
  json files = json::array();
  char name[64];
  for (std::size_t i = 0; i < pool.agents.size(); ++i) {
    std::snprintf(name, sizeof(name), "agent_%03zu.policy.json", i);
    const std::string pfile = name;
    std::snprintf(name, sizeof(name), "agent_%03zu.value.json", i);
    const std::string vfile = name;
    write_text(base / pfile, drl::policy_to_json(pool.agents[i].policy));
    write_text(base / vfile, drl::value_to_json(pool.agents[i].value));
    json entry;
    entry["policy"] = pfile;
    entry["value"] = vfile;
    files.push_back(entry);
  }
  manifest["agents"] = files;
  write_text(base / "manifest.json", manifest.dump(2));
}

AgentPool load_agent_pool(const std::string& dir) {
  const fs::path base(dir);
  const json manifest = load_manifest(base, "gtdrl_pool");
  AgentPool pool;
  try {
    pool.objective = objective_from_name(manifest.at("objective").get<std::string>());
    pool.num_dcs = manifest.at("num_dcs").get<int>();
    pool.n_state = manifest.at("n_state").get<int>();
    pool.gt_rounds = manifest.at("gt_rounds").get<int>();
    pool.ppo = ppo_from_json(manifest.at("ppo"));
    const auto& files = manifest.at("agents");
    for (const auto& entry : files) {
      Agent a;
      a.policy = drl::policy_from_json(
          read_checkpoint_text(base / entry.at("policy").get<std::string>()));
      a.value = drl::value_from_json(
          read_checkpoint_text(base / entry.at("value").get<std::string>()));
      pool.agents.push_back(std::move(a));
    }
    pool.log = log_from_json(manifest.at("log"), pool.agents.size());
  } catch (const json::exception& e) {
    throw MalformedConfig(std::string("checkpoint: bad manifest fields: ") +
                          e.what());
  }
  if (manifest.at("num_agents").get<std::size_t>() != pool.agents.size()) {
    throw MalformedConfig("checkpoint: agent count mismatch");
  }
  for (const Agent& a : pool.agents) {
    if (a.policy.net.input_dim() != pool.n_state ||
        a.policy.net.output_dim() != pool.num_dcs ||
        a.value.net.input_dim() != pool.n_state) {
      throw MalformedConfig("checkpoint: agent dimensions do not match manifest");
    }
  }
  return pool;
}

void save_mono_agent(const MonoAgent& agent, const std::string& dir) {
  const fs::path base(dir);
  ensure_dir(base);
  json manifest;
  manifest["kind"] = "mono_ppo";
  manifest["objective"] = objective_name(agent.objective);
  manifest["num_tasks"] = agent.num_tasks;
  manifest["num_dcs"] = agent.num_dcs;
  manifest["n_state"] = agent.n_state;
  manifest["ppo"] = ppo_to_json(agent.ppo);
  manifest["log"] = log_to_json(agent.log);
  manifest["policy"] = "mono.policy.json";
  manifest["value"] = "mono.value.json";
  write_text(base / "mono.policy.json", drl::policy_to_json(agent.policy));
  write_text(base / "mono.value.json", drl::value_to_json(agent.value));
  write_text(base / "manifest.json", manifest.dump(2));
}

MonoAgent load_mono_agent(const std::string& dir) {
  const fs::path base(dir);
  const json manifest = load_manifest(base, "mono_ppo");
  MonoAgent agent;
  try {
    agent.objective = objective_from_name(manifest.at("objective").get<std::string>());
    agent.num_tasks = manifest.at("num_tasks").get<int>();
    agent.num_dcs = manifest.at("num_dcs").get<int>();
    agent.n_state = manifest.at("n_state").get<int>();
    agent.ppo = ppo_from_json(manifest.at("ppo"));
    agent.policy = drl::policy_from_json(
        read_checkpoint_text(base / manifest.at("policy").get<std::string>()));
    agent.value = drl::value_from_json(
        read_checkpoint_text(base / manifest.at("value").get<std::string>()));
    agent.log = log_from_json(manifest.at("log"), 1);
  } catch (const json::exception& e) {
    throw MalformedConfig(std::string("checkpoint: bad manifest fields: ") +
                          e.what());
  }
  if (agent.policy.net.input_dim() != agent.n_state ||
      agent.policy.net.output_dim() != agent.num_tasks * agent.num_dcs ||
      agent.value.net.input_dim() != agent.n_state) {
    throw MalformedConfig("checkpoint: agent dimensions do not match manifest");
  }
  return agent;
}

}  // namespace geosched
