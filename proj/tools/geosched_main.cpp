#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "geosched/harness.hpp"

namespace {

using namespace geosched;

// Exit codes: 0 success, 2 validation failure (bad scenario/config/arguments),
// 3 solver or runtime failure.
constexpr int kOk = 0;
constexpr int kValidationFailure = 2;
constexpr int kSolverFailure = 3;

int classify(const Error& e) {
  if (dynamic_cast<const MalformedConfig*>(&e) ||
      dynamic_cast<const MissingTrace*>(&e) ||
      dynamic_cast<const MissingCoeffs*>(&e) ||
      dynamic_cast<const BadAmplitude*>(&e) ||
      dynamic_cast<const InfeasibleScenario*>(&e)) {
    return kValidationFailure;
  }
  return kSolverFailure;
}

Objective parse_objective(const std::string& name) {
  if (name == "carbon") return Objective::Carbon;
  if (name == "cost") return Objective::Cost;
  throw MalformedConfig("objective must be carbon or cost");
}

int cmd_validate(const std::string& path) {
  const Scenario s = load_scenario(path);
  std::printf("ok: %d task types, %d data centers, %d epochs/day\n",
              s.num_tasks(), s.num_dcs(), s.epochs_per_day);
  return kOk;
}

int cmd_train(const std::string& scenario_path, const std::string& objective,
              const std::string& solver, int episodes, uint64_t seed,
              const std::string& out_dir) {
  const Scenario s = load_scenario(scenario_path);
  const Objective obj = parse_objective(objective);
  drl::PpoConfig cfg;
  cfg.seed = seed;

  if (solver == "gtdrl") {
    const AgentPool pool = gtdrl_train(s, obj, cfg, episodes, seed);
    save_agent_pool(pool, out_dir);
    std::printf("trained gtdrl pool: %zu agents, %d episodes%s\n",
                pool.agents.size(), pool.log.episodes_run,
                pool.log.plateaued ? " (plateaued)" : "");
    if (!pool.log.mean_episode_reward.empty()) {
      std::printf("final mean episode reward: %.12g\n",
                  pool.log.mean_episode_reward.back());
    }
  } else if (solver == "ppo") {
    const MonoAgent agent = mono_ppo_train(s, obj, cfg, episodes, seed);
    save_mono_agent(agent, out_dir);
    std::printf("trained mono ppo agent: %d episodes%s\n",
                agent.log.episodes_run,
                agent.log.plateaued ? " (plateaued)" : "");
    if (!agent.log.mean_episode_reward.empty()) {
      std::printf("final episode reward: %.12g\n",
                  agent.log.mean_episode_reward.back());
    }
  } else {
    throw MalformedConfig("train solver must be gtdrl or ppo");
  }
  std::printf("checkpoint written to %s\n", out_dir.c_str());
  return kOk;
}

int cmd_run(const std::string& config_path) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const ExperimentResult result = run_experiment(cfg);
  write_results(result, cfg.out_dir);
  for (const SolverScaleSummary& sum : result.summary) {
    std::printf("%s scale=%.12g mean daily carbon=%.12g kg cost=%.12g usd\n",
                solver_name(sum.solver), sum.scale, sum.mean_daily_carbon_kg,
                sum.mean_daily_cost_usd);
  }
  std::printf("results written to %s\n", cfg.out_dir.c_str());
  return kOk;
}

int cmd_oracle(const std::string& scenario_path, int tau,
               const std::string& objective, double resolution) {
  const Scenario s = load_scenario(scenario_path);
  const Objective obj = parse_objective(objective);
  const ExecRateTable er = build_exec_rates(s);
  const EpochState state = fresh_month_state(s.num_dcs());
  const OracleResult res = oracle_grid(s, er, tau, obj, state, resolution);
  std::printf("optimum %s: %.12g (%ld profiles)\n", objective_name(obj),
              res.objective_value, res.profiles_evaluated);
  for (const Strategy& st : res.profile.strategies) {
    std::printf("task %d:", st.player + 1);
    for (double r : st.rates) std::printf(" %.12g", r);
    std::printf("\n");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geosched: geo-distributed inference workload scheduling"};
  app.require_subcommand(1);

  std::string scenario;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", scenario, "Scenario JSON path")->required();

  std::string train_scenario, train_objective = "carbon", train_solver = "gtdrl";
  std::string train_out;
  int train_episodes = 1000;
  uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "Train a DRL solver");
  train->add_option("--scenario", train_scenario, "Scenario JSON path")->required();
  train->add_option("--objective", train_objective, "carbon or cost");
  train->add_option("--solver", train_solver, "gtdrl or ppo");
  train->add_option("--episodes", train_episodes, "Episode budget");
  train->add_option("--seed", train_seed, "Training seed");
  train->add_option("--out", train_out, "Checkpoint directory")->required();

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("--config", run_config, "Experiment JSON path")->required();

  std::string oracle_scenario, oracle_objective = "carbon";
  int oracle_tau = 0;
  double oracle_res = 0.05;
  auto* oracle = app.add_subcommand("oracle", "Brute-force one epoch");
  oracle->add_option("--scenario", oracle_scenario, "Scenario JSON path")->required();
  oracle->add_option("--tau", oracle_tau, "Epoch index");
  oracle->add_option("--objective", oracle_objective, "carbon or cost");
  oracle->add_option("--res", oracle_res, "Grid resolution (must divide 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidationFailure;
  }

  try {
    if (validate->parsed()) return cmd_validate(scenario);
    if (train->parsed()) {
      return cmd_train(train_scenario, train_objective, train_solver,
                       train_episodes, train_seed, train_out);
    }
    if (run->parsed()) return cmd_run(run_config);
    if (oracle->parsed()) {
      return cmd_oracle(oracle_scenario, oracle_tau, oracle_objective, oracle_res);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverFailure;
  }
  return kOk;
}
