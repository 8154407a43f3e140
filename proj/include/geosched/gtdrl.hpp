#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geosched/drl.hpp"
#include "geosched/game.hpp"

namespace geosched {

// Per-scenario constants used to squash observations into [-1, 1]. Built once
// and reused for every state vector.
struct StateNorms {
  double max_carbon = 1.0;         // over DCs and hours
  double max_price = 1.0;          // over DCs and hours
  std::vector<double> gross_max;   // per DC, kW
  std::vector<double> cap;         // per task: sum_d ER
  std::vector<double> max_nc;      // per task: max_d NC^max
};

StateNorms make_state_norms(const Scenario& s, const ExecRateTable& er);

inline int agent_state_dim(int num_dcs) { return 3 + 10 * num_dcs; }
inline int mono_state_dim(int num_tasks, int num_dcs) {
  return 2 + 5 * num_dcs + num_tasks + 5 * num_tasks * num_dcs;
}

// Observation for one player. Layout:
//   [0]                   CAR_i / cap_i
//   [1 + 10d + 0]         ER_{i,d} / cap_i
//   [1 + 10d + 1]         carbon factor of d at this hour / max_carbon
//   [1 + 10d + 2]         electricity price of d at this hour / max_price
//   [1 + 10d + 3]         renewable kW / max(DP^max_d, eps)
//   [1 + 10d + 4]         net-metering factor alpha_d
//   [1 + 10d + 5]         prior peak kW / max(gross max_d, eps)
//   [1 + 10d + 6]         NC^max_{i,d} / max_nc_i
//   [1 + 10d + 7]         estimated carbon per routed fraction, / max_d |...|
//   [1 + 10d + 8]         estimated energy+network cost per routed fraction,
//                         / max_d |...|
//   [1 + 10d + 9]         peak charge per routed fraction if the draw sets a
//                         new peak, / max_d |...|
//   [1 + 10D], [2 + 10D]  sin/cos of the hour angle
// Every entry is clamped to [-1, 1]. The three slope entries hand the policy
// the quantities the estimated objectives are linear in, so ranking data
// centers does not have to be rediscovered from the raw factors. The peak
// slope is the fresh-peak marginal price; the prior-peak entry tells the
// policy how much of it is already sunk.
std::vector<double> build_agent_state(const Scenario& s, const ExecRateTable& er,
                                      const StateNorms& norms, int player,
                                      double car, int tau,
                                      std::span<const double> prior_peak_kw);

// Monolithic agent's observation: all players' CAR entries, the five
// DC-level features per DC, then (ER share, NC norm, carbon slope, cost
// slope, peak slope) per (task, DC) pair, then the hour sin/cos pair.
std::vector<double> build_mono_state(const Scenario& s, const ExecRateTable& er,
                                     const StateNorms& norms,
                                     std::span<const double> car, int tau,
                                     std::span<const double> prior_peak_kw);

enum class ActMode { Deterministic, Stochastic };

struct TrainLog {
  std::vector<double> mean_episode_reward;  // pooled over agents, per episode
  std::vector<std::vector<double>> per_agent_reward;  // [agent][episode]
  int episodes_run = 0;
  bool plateaued = false;
  std::vector<int> non_finite_updates;  // aborted PPO updates per agent
};

struct Agent {
  drl::PolicyParams policy;
  drl::ValueParams value;
  drl::Adam policy_adam, value_adam;
  long updates = 0;
};

// One PPO agent per task type, acting on a |D| simplex each.
struct AgentPool {
  Objective objective = Objective::Carbon;
  drl::PpoConfig ppo;
  int gt_rounds = 1;  // action rounds per epoch; >1 re-feeds peer peak context
  int n_state = 0;
  int num_dcs = 0;
  std::vector<Agent> agents;
  TrainLog log;
};

// Zero-initialized pool (uniform fractions everywhere).
AgentPool make_agent_pool(const Scenario& s, Objective objective,
                          const drl::PpoConfig& cfg);

// Each player independently maps its observation through its policy
// (deterministic head or seeded Gaussian sample) and projects the fractions
// onto its feasible set. Player order cannot matter: there is no cross-agent
// communication and stochastic draws use per-player derived seeds.
StrategyProfile gtdrl_allocate(const AgentPool& pool, const Scenario& s,
                               const ExecRateTable& er, int tau,
                               std::span<const double> prior_peak_kw,
                               Objective objective, ActMode mode,
                               uint64_t seed);

// Episodic training: each episode is one day with per-epoch cloud arrival
// rates drawn uniformly in [0.2, 1.0] * capacity. All agents step the same
// environment (peers frozen within a rollout batch), collect rewards
// -estimate/norm, and update independently every rollout_episodes episodes.
// Stops early when the pooled mean episode reward has not improved by more
// than 0.1% for 50 consecutive episodes.
AgentPool gtdrl_train(const Scenario& s, Objective objective,
                      const drl::PpoConfig& cfg, int episodes, uint64_t seed);

// Monolithic baseline: a single agent over |I|*|D| logits, softmaxed per
// player block, rewarded with the estimated cloud objective.
struct MonoAgent {
  Objective objective = Objective::Carbon;
  drl::PpoConfig ppo;
  int n_state = 0;
  int num_tasks = 0;
  int num_dcs = 0;
  drl::PolicyParams policy;
  drl::ValueParams value;
  drl::Adam policy_adam, value_adam;
  long updates = 0;
  TrainLog log;
};

MonoAgent make_mono_agent(const Scenario& s, Objective objective,
                          const drl::PpoConfig& cfg);

StrategyProfile mono_ppo_allocate(const MonoAgent& agent, const Scenario& s,
                                  const ExecRateTable& er, int tau,
                                  std::span<const double> prior_peak_kw,
                                  Objective objective, ActMode mode,
                                  uint64_t seed);

MonoAgent mono_ppo_train(const Scenario& s, Objective objective,
                         const drl::PpoConfig& cfg, int episodes,
                         uint64_t seed);

// Per-player reward scale: the largest estimated objective a single player
// could register in any hour if it saturated every DC (floor 1e-9). Rewards
// are -estimate/norm, so they stay in roughly [-1, 0].
std::vector<double> reward_norms(const Scenario& s, const ExecRateTable& er,
                                 Objective objective);

// Checkpoint bundles: manifest.json plus one policy/value JSON per agent.
// Loading a missing directory or manifest throws MissingCheckpoint; malformed
// contents throw MalformedConfig.
void save_agent_pool(const AgentPool& pool, const std::string& dir);
AgentPool load_agent_pool(const std::string& dir);
void save_mono_agent(const MonoAgent& agent, const std::string& dir);
MonoAgent load_mono_agent(const std::string& dir);

}  // namespace geosched
