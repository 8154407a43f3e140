#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geosched/game.hpp"
#include "geosched/gtdrl.hpp"

namespace geosched {

enum class Solver { Fd, Nash, Ppo, Gtdrl, Oracle };

const char* solver_name(Solver s);
Solver solver_from_name(const std::string& name);  // MalformedConfig on junk

// Everything run_epoch needs besides the scenario: tuning knobs plus the
// trained agents for the DRL solvers.
struct SolverContext {
  GameConfig game;
  double oracle_resolution = 0.05;
  // Iteration allowance per simulated hour. The compute budget is a step cap
  // rather than wall time so runs stay reproducible.
  long iter_budget_per_hour = 10'000'000;
  const AgentPool* pool = nullptr;  // required for Solver::Gtdrl
  const MonoAgent* mono = nullptr;  // required for Solver::Ppo
};

struct EpochOutcome {
  StrategyProfile profile;
  EpochLedger ledger;
  EpochState next;
  long iterations = 0;       // solver-reported work (calls/evals/profiles)
  double est_objective = 0;  // estimated cloud objective of the profile
};

// Solves one epoch from epoch-start information only, then realizes the
// ledger and carries the peak state forward. Throws SolverBudgetExceeded
// when the solver reports more iterations than the configured budget and
// MissingCheckpoint when a DRL solver has no agents in the context.
EpochOutcome run_epoch(const Scenario& s, const ExecRateTable& er, int tau,
                       Solver solver, const EpochState& state,
                       Objective objective, uint64_t seed,
                       const SolverContext& ctx);

struct DayResult {
  std::vector<EpochOutcome> epochs;  // one per epoch of the day
  EpochState final_state;
};

// Chains run_epoch over one day, threading the peak state. `state` carries
// the month so far; day 0 of a month must pass fresh_month_state.
DayResult run_day(const Scenario& s, const ExecRateTable& er, Solver solver,
                  Objective objective, uint64_t seed, int day_index,
                  const EpochState& state, const SolverContext& ctx);

struct ExperimentConfig {
  std::string scenario_path;
  std::vector<Solver> solvers;
  Objective objective = Objective::Carbon;
  // Overrides the scenario's generated arrival shape; empty string keeps it.
  // "flat" zeroes the amplitude, "sinusoidal" keeps the spec amplitude.
  std::string pattern;
  int runs = 5;
  uint64_t seed = 0;
  int days = 1;
  std::vector<double> renewable_scale = {1.0};
  std::string out_dir;
  double noise_frac = 0.2;  // per-epoch arrival noise, sd as fraction of mean
  // DRL solvers: load from these checkpoint dirs when set, otherwise train
  // train_episodes episodes at renewable scale 1.0 before the runs.
  std::string gtdrl_ckpt;
  std::string ppo_ckpt;
  int train_episodes = 1000;
  GameConfig game;
  double oracle_resolution = 0.05;
  long iter_budget_per_hour = 10'000'000;
};

ExperimentConfig load_experiment_config(const std::string& path);

struct EpochRecord {
  Solver solver;
  double scale = 1.0;
  int run = 0;
  int day = 0;
  int epoch = 0;
  EpochLedger ledger;
  double est_objective = 0.0;
  long iterations = 0;
};

struct SolverScaleSummary {
  Solver solver;
  double scale = 1.0;
  int samples = 0;  // runs * days
  double mean_daily_carbon_kg = 0.0;
  double se_daily_carbon_kg = 0.0;
  double mean_daily_cost_usd = 0.0;
  double se_daily_cost_usd = 0.0;
  double mean_daily_est_objective = 0.0;
  double mean_iterations_per_epoch = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<EpochRecord> epochs;
  std::vector<SolverScaleSummary> summary;
  // reductions[a][b]: % by which solver a's mean daily objective metric
  // undercuts solver b's, at reduction_scale (diagonal exactly 0).
  std::vector<std::vector<double>> reductions;
  double reduction_scale = 1.0;
};

// Trains or loads DRL agents once, then for every renewable scale and run
// executes all solvers on identical sampled arrival traces. Sampling is
// per-run (derived seeds), shared across solvers and scales.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Writes epochs.csv, summary.csv, reductions.csv, result.json and the
// plotdata/ series. Deterministic byte-for-byte given the same result.
void write_results(const ExperimentResult& result, const std::string& dir);

}  // namespace geosched
