#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "geosched/accounting.hpp"
#include "geosched/harness.hpp"
#include "support.hpp"

using namespace geosched;
using test::DcSpec;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() /
               ("geosched_harness_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Scenario peaky_fixture() {
  Scenario s = test::make_scenario(
      {DcSpec{.nodes = 10, .carbon = 0.4, .price = 0.1, .peak_price = 12.0},
       DcSpec{.nodes = 5, .carbon = 0.2, .price = 0.2, .peak_price = 9.0}},
      {10.0}, {100.0});
  for (auto& dc : s.data_centers) dc.crac_max_kw = 10.0;
  return s;
}

double epoch_arrival_total(const EpochRecord& rec) {
  double total = 0.0;
  for (const DcLedgerRow& row : rec.ledger.dc) total += row.ar_total;
  return total;
}

}  // namespace

TEST_CASE("solver names round-trip") {
  const Solver all[] = {Solver::Fd, Solver::Nash, Solver::Ppo, Solver::Gtdrl,
                        Solver::Oracle};
  for (Solver s : all) {
    CHECK(solver_from_name(solver_name(s)) == s);
  }
  CHECK(std::string(solver_name(Solver::Nash)) == "nash");
  CHECK(std::string(solver_name(Solver::Gtdrl)) == "gtdrl");
  CHECK_THROWS_AS(solver_from_name("warp"), MalformedConfig);
}

TEST_CASE("run_epoch solves, accounts, and advances the peak state") {
  Scenario s = peaky_fixture();
  ExecRateTable er = build_exec_rates(s);
  SolverContext ctx;
  EpochState state = fresh_month_state(2);

  EpochOutcome nash =
      run_epoch(s, er, 0, Solver::Nash, state, Objective::Carbon, 0, ctx);
  validate_profile(s, er, nash.profile);
  CHECK(nash.iterations > 0);
  CHECK(std::isfinite(nash.est_objective));
  CHECK(nash.ledger.tau == 0);
  CHECK(nash.next.tau == 1);
  CHECK(nash.next.prior_peak_kw == nash.ledger.updated_prior_peak_kw);

  EpochOutcome fd =
      run_epoch(s, er, 0, Solver::Fd, state, Objective::Carbon, 0, ctx);
  validate_profile(s, er, fd.profile);
  CHECK(fd.iterations > 0);

  // One task on two DCs at resolution 0.05: exactly 21 grid profiles.
  EpochOutcome oracle =
      run_epoch(s, er, 0, Solver::Oracle, state, Objective::Carbon, 0, ctx);
  validate_profile(s, er, oracle.profile);
  CHECK(oracle.iterations == 21);
  CHECK(oracle.est_objective <= nash.est_objective + 1e-6);
}

TEST_CASE("DRL solvers require their agents in the context") {
  Scenario s = peaky_fixture();
  ExecRateTable er = build_exec_rates(s);
  SolverContext ctx;
  EpochState state = fresh_month_state(2);
  CHECK_THROWS_AS(
      run_epoch(s, er, 0, Solver::Gtdrl, state, Objective::Carbon, 0, ctx),
      MissingCheckpoint);
  CHECK_THROWS_AS(
      run_epoch(s, er, 0, Solver::Ppo, state, Objective::Carbon, 0, ctx),
      MissingCheckpoint);

  AgentPool pool = make_agent_pool(s, Objective::Carbon, drl::PpoConfig{});
  MonoAgent mono = make_mono_agent(s, Objective::Carbon, drl::PpoConfig{});
  ctx.pool = &pool;
  ctx.mono = &mono;

  EpochOutcome g =
      run_epoch(s, er, 0, Solver::Gtdrl, state, Objective::Carbon, 0, ctx);
  CHECK(g.profile.strategies[0].rates[0] == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(g.iterations == 1);

  EpochOutcome m =
      run_epoch(s, er, 0, Solver::Ppo, state, Objective::Carbon, 0, ctx);
  CHECK(m.profile.strategies[0].rates[1] == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(m.iterations == 1);
}

TEST_CASE("the iteration budget is enforced per simulated hour") {
  Scenario s = peaky_fixture();
  ExecRateTable er = build_exec_rates(s);
  SolverContext ctx;
  ctx.iter_budget_per_hour = 1;
  EpochState state = fresh_month_state(2);
  CHECK_THROWS_AS(
      run_epoch(s, er, 0, Solver::Nash, state, Objective::Carbon, 0, ctx),
      SolverBudgetExceeded);
}

TEST_CASE("a flat day pays its peak charge in the first epoch only") {
  Scenario s = peaky_fixture();
  ExecRateTable er = build_exec_rates(s);
  SolverContext ctx;

  DayResult day0 = run_day(s, er, Solver::Nash, Objective::Carbon, 3, 0,
                           fresh_month_state(2), ctx);
  REQUIRE(day0.epochs.size() == 24);
  double first_delta = 0.0;
  for (const DcLedgerRow& row : day0.epochs[0].ledger.dc) {
    first_delta += row.peak_delta_usd;
  }
  CHECK(first_delta > 0.0);
  for (std::size_t t = 1; t < day0.epochs.size(); ++t) {
    for (const DcLedgerRow& row : day0.epochs[t].ledger.dc) {
      CHECK(row.peak_delta_usd == 0.0);
    }
  }
  CHECK(day0.final_state.tau == 24);
  CHECK(day0.final_state.prior_peak_kw ==
        day0.epochs.back().ledger.updated_prior_peak_kw);

  DayResult day1 = run_day(s, er, Solver::Nash, Objective::Carbon, 3, 1,
                           day0.final_state, ctx);
  for (const EpochOutcome& e : day1.epochs) {
    for (const DcLedgerRow& row : e.ledger.dc) {
      CHECK(row.peak_delta_usd == 0.0);
    }
  }

  DayResult again = run_day(s, er, Solver::Nash, Objective::Carbon, 3, 0,
                            fresh_month_state(2), ctx);
  for (std::size_t t = 0; t < day0.epochs.size(); ++t) {
    CHECK(again.epochs[t].est_objective == day0.epochs[t].est_objective);
    CHECK(again.epochs[t].profile.strategies[0].rates ==
          day0.epochs[t].profile.strategies[0].rates);
  }
}

TEST_CASE("run_experiment shares sampled arrivals across solvers") {
  Scenario s = peaky_fixture();
  fs::path dir = temp_dir("exp");
  save_scenario(s, (dir / "scen.json").string());

  ExperimentConfig cfg;
  cfg.scenario_path = (dir / "scen.json").string();
  cfg.solvers = {Solver::Nash, Solver::Fd};
  cfg.objective = Objective::Carbon;
  cfg.runs = 2;
  cfg.days = 1;
  cfg.seed = 5;
  cfg.noise_frac = 0.25;

  ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.epochs.size() == 2 * 2 * 24);
  REQUIRE(res.summary.size() == 2);
  CHECK(res.summary[0].samples == 2);
  REQUIRE(res.reductions.size() == 2);
  CHECK(res.reductions[0][0] == 0.0);
  CHECK(res.reductions[1][1] == 0.0);

  // Index epoch totals by (solver, run, epoch).
  auto total = [&](Solver sv, int run, int epoch) {
    for (const EpochRecord& rec : res.epochs) {
      if (rec.solver == sv && rec.run == run && rec.epoch == epoch &&
          rec.day == 0) {
        return epoch_arrival_total(rec);
      }
    }
    REQUIRE(false);
    return 0.0;
  };
  for (int run = 0; run < 2; ++run) {
    for (int epoch : {0, 7, 23}) {
      double a = total(Solver::Nash, run, epoch);
      double b = total(Solver::Fd, run, epoch);
      CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
  }
  // Different runs draw different noise around the same base.
  CHECK(total(Solver::Nash, 0, 0) != total(Solver::Nash, 1, 0));

  // Re-aggregating the epoch records reproduces the summary.
  for (const SolverScaleSummary& sum : res.summary) {
    double carbon = 0.0;
    for (const EpochRecord& rec : res.epochs) {
      if (rec.solver == sum.solver) carbon += rec.ledger.cloud_carbon_kg;
    }
    carbon /= 2.0;  // runs * days
    CHECK(sum.mean_daily_carbon_kg == doctest::Approx(carbon).epsilon(1e-9));
  }

  // The whole pipeline is deterministic for a fixed config.
  ExperimentResult res2 = run_experiment(cfg);
  REQUIRE(res2.epochs.size() == res.epochs.size());
  for (std::size_t i = 0; i < res.epochs.size(); ++i) {
    CHECK(res2.epochs[i].est_objective == res.epochs[i].est_objective);
    CHECK(res2.epochs[i].ledger.cloud_carbon_kg ==
          res.epochs[i].ledger.cloud_carbon_kg);
  }

  fs::path out_a = dir / "out_a";
  fs::path out_b = dir / "out_b";
  write_results(res, out_a.string());
  write_results(res2, out_b.string());
  const std::string epochs_a = slurp(out_a / "epochs.csv");
  CHECK(epochs_a == slurp(out_b / "epochs.csv"));
  CHECK(slurp(out_a / "summary.csv") == slurp(out_b / "summary.csv"));
  CHECK(epochs_a.rfind("solver,run,day,epoch,dc_id,net_kw,carbon_kg,"
                       "energy_cost_usd,peak_delta_usd,network_cost_usd,"
                       "total_cost_usd,scale,est_objective\n",
                       0) == 0);
  // One line per (epoch record, DC) plus the header.
  CHECK(std::count(epochs_a.begin(), epochs_a.end(), '\n') ==
        1 + static_cast<long>(res.epochs.size()) * 2);
  CHECK(fs::exists(out_a / "reductions.csv"));
  CHECK(fs::exists(out_a / "result.json"));
  CHECK(fs::exists(out_a / "plotdata" / "daily_series.csv"));
  CHECK(fs::exists(out_a / "plotdata" / "renewable_sweep.csv"));
  CHECK(fs::exists(out_a / "plotdata" / "scalability_bars.csv"));

  fs::remove_all(dir);
}

TEST_CASE("empty results still produce headed CSV files") {
  ExperimentResult res;
  fs::path dir = temp_dir("empty");
  write_results(res, dir.string());
  CHECK(slurp(dir / "epochs.csv") ==
        "solver,run,day,epoch,dc_id,net_kw,carbon_kg,energy_cost_usd,"
        "peak_delta_usd,network_cost_usd,total_cost_usd,scale,est_objective\n");
  CHECK(slurp(dir / "reductions.csv") == "solver\n");
  fs::remove_all(dir);
}

TEST_CASE("the pattern override reshapes generated arrivals only") {
  Scenario s = peaky_fixture();
  test::set_sinusoidal(s, 0.4);
  fs::path dir = temp_dir("pattern");
  save_scenario(s, (dir / "scen.json").string());

  ExperimentConfig cfg;
  cfg.scenario_path = (dir / "scen.json").string();
  cfg.solvers = {Solver::Nash};
  cfg.objective = Objective::Carbon;
  cfg.runs = 1;
  cfg.days = 1;
  cfg.noise_frac = 0.0;
  cfg.pattern = "flat";

  ExperimentResult flat = run_experiment(cfg);
  const double t0 = epoch_arrival_total(flat.epochs[0]);
  for (const EpochRecord& rec : flat.epochs) {
    CHECK(epoch_arrival_total(rec) == doctest::Approx(t0).epsilon(1e-9));
  }

  cfg.pattern = "sinusoidal";
  ExperimentResult sin = run_experiment(cfg);
  double lo = 1e300, hi = 0.0;
  for (const EpochRecord& rec : sin.epochs) {
    lo = std::min(lo, epoch_arrival_total(rec));
    hi = std::max(hi, epoch_arrival_total(rec));
  }
  CHECK(hi > 1.39 * t0);
  CHECK(lo < 0.61 * t0);

  cfg.pattern = "square";
  CHECK_THROWS_AS(run_experiment(cfg), MalformedConfig);

  // Trace-driven scenarios have no generator to override.
  Scenario traced = peaky_fixture();
  traced.arrival_spec = ArrivalSpec{};  // pattern: Trace
  save_scenario(traced, (dir / "traced.json").string());
  cfg.pattern = "flat";
  cfg.scenario_path = (dir / "traced.json").string();
  CHECK_THROWS_AS(run_experiment(cfg), MalformedConfig);

  fs::remove_all(dir);
}

TEST_CASE("run_experiment drives the DRL solvers end to end") {
  Scenario s = peaky_fixture();
  fs::path dir = temp_dir("drl");
  save_scenario(s, (dir / "scen.json").string());

  ExperimentConfig cfg;
  cfg.scenario_path = (dir / "scen.json").string();
  cfg.solvers = {Solver::Gtdrl, Solver::Ppo};
  cfg.objective = Objective::Carbon;
  cfg.runs = 1;
  cfg.days = 1;
  cfg.seed = 2;
  cfg.noise_frac = 0.1;
  cfg.train_episodes = 4;

  ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.epochs.size() == 2 * 24);
  for (const EpochRecord& rec : res.epochs) {
    CHECK(rec.iterations == 1);
    CHECK(std::isfinite(rec.est_objective));
  }

  // A checkpoint in the config short-circuits training.
  AgentPool uniform_pool = make_agent_pool(s, Objective::Carbon, drl::PpoConfig{});
  save_agent_pool(uniform_pool, (dir / "ckpt").string());
  cfg.solvers = {Solver::Gtdrl};
  cfg.gtdrl_ckpt = (dir / "ckpt").string();
  ExperimentResult from_ckpt = run_experiment(cfg);
  for (const EpochRecord& rec : from_ckpt.epochs) {
    REQUIRE(rec.ledger.dc.size() == 2);
    double total = epoch_arrival_total(rec);
    CHECK(rec.ledger.dc[0].ar_total == doctest::Approx(total / 2).epsilon(1e-9));
  }

  fs::remove_all(dir);
}

TEST_CASE("experiment configs load with relative paths resolved") {
  fs::path dir = temp_dir("cfg");
  Scenario s = peaky_fixture();
  save_scenario(s, (dir / "scen.json").string());
  {
    std::ofstream out(dir / "exp.json");
    out << R"({
      "scenario": "scen.json",
      "solvers": ["nash", "oracle"],
      "objective": "cost",
      "pattern": "flat",
      "runs": 3,
      "seed": 9,
      "days": 2,
      "renewable_scale": [0.0, 1.0],
      "noise_frac": 0.05,
      "train_episodes": 50,
      "iter_budget_per_hour": 5000
    })";
  }
  ExperimentConfig c = load_experiment_config((dir / "exp.json").string());
  CHECK(c.scenario_path == (dir / "scen.json").string());
  CHECK(c.solvers == std::vector<Solver>{Solver::Nash, Solver::Oracle});
  CHECK(c.objective == Objective::Cost);
  CHECK(c.pattern == "flat");
  CHECK(c.runs == 3);
  CHECK(c.seed == 9);
  CHECK(c.days == 2);
  CHECK(c.renewable_scale == std::vector<double>{0.0, 1.0});
  CHECK(c.noise_frac == doctest::Approx(0.05));
  CHECK(c.train_episodes == 50);
  CHECK(c.iter_budget_per_hour == 5000);
  CHECK(c.oracle_resolution == doctest::Approx(0.05));

  CHECK_THROWS_AS(load_experiment_config((dir / "nope.json").string()),
                  MalformedConfig);
  std::ofstream(dir / "junk.json") << "not json";
  CHECK_THROWS_AS(load_experiment_config((dir / "junk.json").string()),
                  MalformedConfig);
  std::ofstream(dir / "bad_solver.json")
      << R"({"scenario":"scen.json","solvers":["warp"],"objective":"cost"})";
  CHECK_THROWS_AS(load_experiment_config((dir / "bad_solver.json").string()),
                  MalformedConfig);
  std::ofstream(dir / "bad_obj.json")
      << R"({"scenario":"scen.json","solvers":["nash"],"objective":"speed"})";
  CHECK_THROWS_AS(load_experiment_config((dir / "bad_obj.json").string()),
                  MalformedConfig);
  fs::remove_all(dir);
}

TEST_CASE("run_experiment validates its knobs before touching the scenario") {
  ExperimentConfig cfg;
  cfg.scenario_path = "/definitely/not/there.json";
  cfg.solvers = {};
  CHECK_THROWS_AS(run_experiment(cfg), MalformedConfig);
  cfg.solvers = {Solver::Nash};
  cfg.runs = 0;
  CHECK_THROWS_AS(run_experiment(cfg), MalformedConfig);
  cfg.runs = 1;
  cfg.renewable_scale = {};
  CHECK_THROWS_AS(run_experiment(cfg), MalformedConfig);
  cfg.renewable_scale = {1.0};
  cfg.noise_frac = -0.5;
  CHECK_THROWS_AS(run_experiment(cfg), MalformedConfig);
}
