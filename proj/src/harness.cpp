#include "geosched/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace geosched {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

int env_threads() {
  const char* raw = std::getenv("GEOSCHED_THREADS");
  if (!raw) return 1;
  const int n = std::atoi(raw);
  return std::clamp(n, 1, 64);
}

}  // namespace

const char* solver_name(Solver s) {
  switch (s) {
    case Solver::Fd: return "fd";
    case Solver::Nash: return "nash";
    case Solver::Ppo: return "ppo";
    case Solver::Gtdrl: return "gtdrl";
    case Solver::Oracle: return "oracle";
  }
  return "?";
}

Solver solver_from_name(const std::string& name) {
  if (name == "fd") return Solver::Fd;
  if (name == "nash") return Solver::Nash;
  if (name == "ppo") return Solver::Ppo;
  if (name == "gtdrl") return Solver::Gtdrl;
  if (name == "oracle") return Solver::Oracle;
  throw MalformedConfig("unknown solver \"" + name + "\"");
}

EpochOutcome run_epoch(const Scenario& s, const ExecRateTable& er, int tau,
                       Solver solver, const EpochState& state,
                       Objective objective, uint64_t seed,
                       const SolverContext& ctx) {
  EpochState at{tau, state.prior_peak_kw};
  EpochOutcome out;

  switch (solver) {
    case Solver::Fd: {
      FdResult r = force_directed(s, er, tau, objective, at, ctx.game);
      out.profile = std::move(r.profile);
      out.iterations = r.evals;
      break;
    }
    case Solver::Nash: {
      NashResult r = nash_solve(s, er, tau, objective, at, ctx.game);
      out.profile = std::move(r.profile);
      out.iterations = r.best_reply_calls;
      break;
    }
    case Solver::Oracle: {
      OracleResult r =
          oracle_grid(s, er, tau, objective, at, ctx.oracle_resolution);
      out.profile = std::move(r.profile);
      out.iterations = r.profiles_evaluated;
      break;
    }
    case Solver::Gtdrl: {
      if (!ctx.pool) {
        throw MissingCheckpoint("gtdrl solver has no trained agent pool");
      }
      out.profile = gtdrl_allocate(*ctx.pool, s, er, tau, at.prior_peak_kw,
                                   objective, ActMode::Deterministic, seed);
      out.iterations =
          static_cast<long>(std::max(1, ctx.pool->gt_rounds)) * s.num_tasks();
      break;
    }
    case Solver::Ppo: {
      if (!ctx.mono) {
        throw MissingCheckpoint("ppo solver has no trained agent");
      }
      out.profile = mono_ppo_allocate(*ctx.mono, s, er, tau, at.prior_peak_kw,
                                      objective, ActMode::Deterministic, seed);
      out.iterations = 1;
      break;
    }
  }

  const long budget = std::max<long>(
      1, std::lround(static_cast<double>(ctx.iter_budget_per_hour) * s.epoch_hours));
  if (out.iterations > budget) {
    throw SolverBudgetExceeded(std::string(solver_name(solver)) + " used " +
                               std::to_string(out.iterations) +
                               " iterations, budget " + std::to_string(budget));
  }

  out.est_objective = cloud_objective(s, er, out.profile, at, objective);
  out.ledger = make_epoch_ledger(s, er, out.profile, at);
  out.next = EpochState{tau + 1, out.ledger.updated_prior_peak_kw};
  return out;
}

DayResult run_day(const Scenario& s, const ExecRateTable& er, Solver solver,
                  Objective objective, uint64_t seed, int day_index,
                  const EpochState& state, const SolverContext& ctx) {
  DayResult day;
  EpochState cur = state;
  for (int t = 0; t < s.epochs_per_day; ++t) {
    const uint64_t epoch_seed = derive_seed(
        seed, static_cast<uint64_t>(day_index) *
                      static_cast<uint64_t>(s.epochs_per_day) +
                  static_cast<uint64_t>(t));
    EpochOutcome out =
        run_epoch(s, er, cur.tau, solver, cur, objective, epoch_seed, ctx);
    cur = out.next;
    day.epochs.push_back(std::move(out));
  }
  day.final_state = std::move(cur);
  return day;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedConfig("cannot open experiment config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();

  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw MalformedConfig(std::string("experiment config: bad json: ") + e.what());
  }
  if (!j.is_object()) throw MalformedConfig("experiment config must be an object");

  ExperimentConfig c;
  try {
    const fs::path base = fs::path(path).parent_path();
    const std::string scen = j.at("scenario").get<std::string>();
    c.scenario_path = (fs::path(scen).is_absolute() ? fs::path(scen) : base / scen).string();
    for (const auto& name : j.at("solvers")) {
      c.solvers.push_back(solver_from_name(name.get<std::string>()));
    }
    const std::string obj = j.at("objective").get<std::string>();
    if (obj == "carbon") {
      c.objective = Objective::Carbon;
    } else if (obj == "cost") {
      c.objective = Objective::Cost;
    } else {
      throw MalformedConfig("experiment config: objective must be carbon or cost");
    }
    c.pattern = j.value("pattern", std::string());
    c.runs = j.value("runs", 5);
    c.seed = j.value("seed", uint64_t{0});
    c.days = j.value("days", 1);
    if (j.contains("renewable_scale")) {
      c.renewable_scale = j.at("renewable_scale").get<std::vector<double>>();
    }
    c.out_dir = j.value("out_dir", std::string("out"));
    c.noise_frac = j.value("noise_frac", 0.2);
    c.gtdrl_ckpt = j.value("gtdrl_ckpt", std::string());
    c.ppo_ckpt = j.value("ppo_ckpt", std::string());
    c.train_episodes = j.value("train_episodes", 1000);
    c.oracle_resolution = j.value("oracle_resolution", 0.05);
    c.iter_budget_per_hour = j.value("iter_budget_per_hour", int64_t{10'000'000});
    if (!c.gtdrl_ckpt.empty() && !fs::path(c.gtdrl_ckpt).is_absolute()) {
      c.gtdrl_ckpt = (base / c.gtdrl_ckpt).string();
    }
    if (!c.ppo_ckpt.empty() && !fs::path(c.ppo_ckpt).is_absolute()) {
      c.ppo_ckpt = (base / c.ppo_ckpt).string();
    }
  } catch (const json::exception& e) {
    throw MalformedConfig(std::string("experiment config: ") + e.what());
  }
  return c;
}

namespace {

void validate_experiment_config(const ExperimentConfig& c) {
  if (c.solvers.empty()) throw MalformedConfig("experiment: empty solver list");
  if (c.runs < 1) throw MalformedConfig("experiment: runs must be >= 1");
  if (c.days < 1) throw MalformedConfig("experiment: days must be >= 1");
  if (c.renewable_scale.empty()) {
    throw MalformedConfig("experiment: renewable_scale must be non-empty");
  }
  for (double sc : c.renewable_scale) {
    if (!(sc >= 0.0) || !std::isfinite(sc)) {
      throw MalformedConfig("experiment: renewable scales must be finite and >= 0");
    }
  }
  if (!(c.noise_frac >= 0.0)) {
    throw MalformedConfig("experiment: noise_frac must be >= 0");
  }
  if (c.train_episodes < 0) {
    throw MalformedConfig("experiment: train_episodes must be >= 0");
  }
  if (!c.pattern.empty() && c.pattern != "flat" && c.pattern != "sinusoidal") {
    throw MalformedConfig("experiment: pattern must be flat or sinusoidal");
  }
}

void apply_pattern_override(Scenario& s, const std::string& pattern) {
  if (pattern.empty()) return;
  if (s.arrival_spec.pattern == ArrivalPattern::Trace) {
    throw MalformedConfig(
        "pattern override requires a scenario with generated arrivals");
  }
  const ArrivalPattern p =
      pattern == "flat" ? ArrivalPattern::Flat : ArrivalPattern::Sinusoidal;
  const double amp = p == ArrivalPattern::Flat ? 0.0 : s.arrival_spec.amplitude;
  s.arrivals = generate_arrivals(p, s.arrival_spec.base, amp,
                                 s.arrival_spec.phase_h, s.epochs_per_day);
  s.arrival_spec.pattern = p;
  s.arrival_spec.amplitude = amp;
  validate_scenario(s);
}

struct DailyTotals {
  double carbon = 0.0;
  double cost = 0.0;
  double est = 0.0;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_experiment_config(config);

  Scenario nominal = load_scenario(config.scenario_path);
  apply_pattern_override(nominal, config.pattern);
  const ExecRateTable er = build_exec_rates(nominal);

  const bool need_pool =
      std::count(config.solvers.begin(), config.solvers.end(), Solver::Gtdrl) > 0;
  const bool need_mono =
      std::count(config.solvers.begin(), config.solvers.end(), Solver::Ppo) > 0;

  // DRL agents are prepared once, on the unscaled scenario, and shared
  // read-only by every run.
  std::optional<AgentPool> pool;
  if (need_pool) {
    if (!config.gtdrl_ckpt.empty()) {
      pool = load_agent_pool(config.gtdrl_ckpt);
    } else {
      pool = gtdrl_train(nominal, config.objective, drl::PpoConfig{},
                         config.train_episodes, derive_seed(config.seed, 7));
    }
  }
  std::optional<MonoAgent> mono;
  if (need_mono) {
    if (!config.ppo_ckpt.empty()) {
      mono = load_mono_agent(config.ppo_ckpt);
    } else {
      mono = mono_ppo_train(nominal, config.objective, drl::PpoConfig{},
                            config.train_episodes, derive_seed(config.seed, 8));
    }
  }

  SolverContext ctx;
  ctx.game = config.game;
  ctx.oracle_resolution = config.oracle_resolution;
  ctx.iter_budget_per_hour = config.iter_budget_per_hour;
  ctx.pool = pool ? &*pool : nullptr;
  ctx.mono = mono ? &*mono : nullptr;

  // One sampled arrival trace per run, shared by all solvers and scales.
  std::vector<std::vector<std::vector<double>>> run_arrivals;
  run_arrivals.reserve(static_cast<std::size_t>(config.runs));
  for (int r = 0; r < config.runs; ++r) {
    run_arrivals.push_back(sample_arrivals(
        nominal.arrivals, er.cap, config.noise_frac,
        derive_seed(config.seed, 100 + static_cast<uint64_t>(r))));
  }

  const int n_scales = static_cast<int>(config.renewable_scale.size());
  const int n_jobs = n_scales * config.runs;
  std::vector<std::vector<EpochRecord>> job_rows(static_cast<std::size_t>(n_jobs));
  std::vector<std::exception_ptr> job_err(static_cast<std::size_t>(n_jobs));

  auto run_job = [&](int job) {
    const int scale_idx = job / config.runs;
    const int r = job % config.runs;
    const double scale = config.renewable_scale[static_cast<std::size_t>(scale_idx)];

    Scenario s = nominal;
    for (DataCenter& dc : s.data_centers) {
      for (double& rp : dc.renewable_kw) rp *= scale;
    }
    s.arrivals = run_arrivals[static_cast<std::size_t>(r)];

    std::vector<EpochRecord>& rows = job_rows[static_cast<std::size_t>(job)];
    for (std::size_t si = 0; si < config.solvers.size(); ++si) {
      const Solver solver = config.solvers[si];
      EpochState st = fresh_month_state(s.num_dcs());
      for (int day = 0; day < config.days; ++day) {
        if (day > 0 && day % s.billing_days == 0) {
          st = fresh_month_state(s.num_dcs());  // new billing month
        }
        const uint64_t day_seed = derive_seed(
            config.seed,
            1'000'000 + ((static_cast<uint64_t>(job) * config.solvers.size() + si) *
                             static_cast<uint64_t>(config.days) +
                         static_cast<uint64_t>(day)));
        DayResult dr =
            run_day(s, er, solver, config.objective, day_seed, day, st, ctx);
        st = dr.final_state;
        for (int t = 0; t < s.epochs_per_day; ++t) {
          EpochRecord rec;
          rec.solver = solver;
          rec.scale = scale;
          rec.run = r;
          rec.day = day;
          rec.epoch = t;
          rec.ledger = std::move(dr.epochs[static_cast<std::size_t>(t)].ledger);
          rec.est_objective = dr.epochs[static_cast<std::size_t>(t)].est_objective;
          rec.iterations = dr.epochs[static_cast<std::size_t>(t)].iterations;
          rows.push_back(std::move(rec));
        }
      }
    }
  };

  const int threads = std::min(env_threads(), n_jobs);
  if (threads <= 1) {
    for (int job = 0; job < n_jobs; ++job) run_job(job);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int job = next.fetch_add(1);
        if (job >= n_jobs) return;
        try {
          run_job(job);
        } catch (...) {
          job_err[static_cast<std::size_t>(job)] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> crew;
    for (int t = 0; t < threads; ++t) crew.emplace_back(worker);
    for (std::thread& t : crew) t.join();
    for (const std::exception_ptr& e : job_err) {
      if (e) std::rethrow_exception(e);
    }
  }

  ExperimentResult result;
  result.config = config;
  for (auto& rows : job_rows) {
    for (EpochRecord& rec : rows) result.epochs.push_back(std::move(rec));
  }

  // Aggregate daily totals per (solver, scale) over runs and days.
  for (const Solver solver : config.solvers) {
    for (const double scale : config.renewable_scale) {
      std::vector<DailyTotals> daily(
          static_cast<std::size_t>(config.runs * config.days));
      double iter_sum = 0.0;
      long epoch_count = 0;
      for (const EpochRecord& rec : result.epochs) {
        if (rec.solver != solver || rec.scale != scale) continue;
        DailyTotals& d =
            daily[static_cast<std::size_t>(rec.run * config.days + rec.day)];
        d.carbon += rec.ledger.cloud_carbon_kg;
        d.cost += rec.ledger.cloud_cost_usd;
        d.est += rec.est_objective;
        iter_sum += static_cast<double>(rec.iterations);
        ++epoch_count;
      }
      SolverScaleSummary sum;
      sum.solver = solver;
      sum.scale = scale;
      sum.samples = static_cast<int>(daily.size());
      const double n = static_cast<double>(daily.size());
      for (const DailyTotals& d : daily) {
        sum.mean_daily_carbon_kg += d.carbon / n;
        sum.mean_daily_cost_usd += d.cost / n;
        sum.mean_daily_est_objective += d.est / n;
      }
      if (daily.size() > 1) {
        double vc = 0.0, vz = 0.0;
        for (const DailyTotals& d : daily) {
          vc += (d.carbon - sum.mean_daily_carbon_kg) *
                (d.carbon - sum.mean_daily_carbon_kg);
          vz += (d.cost - sum.mean_daily_cost_usd) *
                (d.cost - sum.mean_daily_cost_usd);
        }
        const double denom = n * (n - 1.0);
        sum.se_daily_carbon_kg = std::sqrt(vc / denom);
        sum.se_daily_cost_usd = std::sqrt(vz / denom);
      }
      if (epoch_count > 0) {
        sum.mean_iterations_per_epoch = iter_sum / static_cast<double>(epoch_count);
      }
      result.summary.push_back(sum);
    }
  }

  // Pairwise reduction table on the objective metric, at scale 1.0 when the
  // sweep includes it (first scale otherwise).
  result.reduction_scale = config.renewable_scale.front();
  for (double sc : config.renewable_scale) {
    if (sc == 1.0) {
      result.reduction_scale = 1.0;
      break;
    }
  }
  std::vector<double> metric(config.solvers.size(), 0.0);
  for (const SolverScaleSummary& sum : result.summary) {
    if (sum.scale != result.reduction_scale) continue;
    for (std::size_t si = 0; si < config.solvers.size(); ++si) {
      if (config.solvers[si] == sum.solver) {
        metric[si] = config.objective == Objective::Carbon
                         ? sum.mean_daily_carbon_kg
                         : sum.mean_daily_cost_usd;
      }
    }
  }
  result.reductions.assign(config.solvers.size(),
                           std::vector<double>(config.solvers.size(), 0.0));
  for (std::size_t a = 0; a < config.solvers.size(); ++a) {
    for (std::size_t b = 0; b < config.solvers.size(); ++b) {
      if (a == b || std::abs(metric[b]) < 1e-30) continue;
      result.reductions[a][b] = (metric[b] - metric[a]) / metric[b] * 100.0;
    }
  }
  return result;
}

void write_results(const ExperimentResult& result, const std::string& dir) {
  const fs::path base(dir);
  std::error_code ec;
  fs::create_directories(base / "plotdata", ec);
  if (ec) throw IoError("cannot create output directory " + base.string());

  {
    std::ostringstream csv;
    csv << "solver,run,day,epoch,dc_id,net_kw,carbon_kg,energy_cost_usd,"
           "peak_delta_usd,network_cost_usd,total_cost_usd,scale,est_objective\n";
    for (const EpochRecord& rec : result.epochs) {
      for (const DcLedgerRow& row : rec.ledger.dc) {
        csv << solver_name(rec.solver) << ',' << rec.run << ',' << rec.day << ','
            << rec.epoch << ',' << row.dc_id << ',' << fmt(row.power.net_kw)
            << ',' << fmt(row.carbon_kg) << ',' << fmt(row.energy_cost_usd)
            << ',' << fmt(row.peak_delta_usd) << ',' << fmt(row.network_cost_usd)
            << ',' << fmt(row.total_cost_usd) << ',' << fmt(rec.scale) << ','
            << fmt(rec.est_objective) << '\n';
      }
    }
    write_text_file(base / "epochs.csv", csv.str());
  }

  {
    std::ostringstream csv;
    csv << "solver,scale,samples,mean_daily_carbon_kg,se_daily_carbon_kg,"
           "mean_daily_cost_usd,se_daily_cost_usd,mean_daily_est_objective,"
           "mean_iterations_per_epoch,norm_carbon,norm_cost\n";
    for (const SolverScaleSummary& sum : result.summary) {
      double max_carbon = 0.0, max_cost = 0.0;
      for (const SolverScaleSummary& other : result.summary) {
        if (other.scale != sum.scale) continue;
        max_carbon = std::max(max_carbon, std::abs(other.mean_daily_carbon_kg));
        max_cost = std::max(max_cost, std::abs(other.mean_daily_cost_usd));
      }
      const double nc = max_carbon > 0 ? sum.mean_daily_carbon_kg / max_carbon : 0.0;
      const double nz = max_cost > 0 ? sum.mean_daily_cost_usd / max_cost : 0.0;
      csv << solver_name(sum.solver) << ',' << fmt(sum.scale) << ','
          << sum.samples << ',' << fmt(sum.mean_daily_carbon_kg) << ','
          << fmt(sum.se_daily_carbon_kg) << ',' << fmt(sum.mean_daily_cost_usd)
          << ',' << fmt(sum.se_daily_cost_usd) << ','
          << fmt(sum.mean_daily_est_objective) << ','
          << fmt(sum.mean_iterations_per_epoch) << ',' << fmt(nc) << ','
          << fmt(nz) << '\n';
    }
    write_text_file(base / "summary.csv", csv.str());
  }

  {
    std::ostringstream csv;
    csv << "solver";
    for (const Solver s : result.config.solvers) csv << ',' << solver_name(s);
    csv << '\n';
    for (std::size_t a = 0; a < result.reductions.size(); ++a) {
      csv << solver_name(result.config.solvers[a]);
      for (double v : result.reductions[a]) csv << ',' << fmt(v);
      csv << '\n';
    }
    write_text_file(base / "reductions.csv", csv.str());
  }

  {
    json j;
    json cfg;
    cfg["scenario"] = result.config.scenario_path;
    json solvers = json::array();
    for (const Solver s : result.config.solvers) solvers.push_back(solver_name(s));
    cfg["solvers"] = solvers;
    cfg["objective"] = objective_name(result.config.objective);
    cfg["pattern"] = result.config.pattern;
    cfg["runs"] = result.config.runs;
    cfg["seed"] = result.config.seed;
    cfg["days"] = result.config.days;
    cfg["renewable_scale"] = result.config.renewable_scale;
    cfg["noise_frac"] = result.config.noise_frac;
    cfg["train_episodes"] = result.config.train_episodes;
    cfg["oracle_resolution"] = result.config.oracle_resolution;
    cfg["iter_budget_per_hour"] = result.config.iter_budget_per_hour;
    j["config"] = cfg;

    json summary = json::array();
    for (const SolverScaleSummary& sum : result.summary) {
      json row;
      row["solver"] = solver_name(sum.solver);
      row["scale"] = sum.scale;
      row["samples"] = sum.samples;
      row["mean_daily_carbon_kg"] = sum.mean_daily_carbon_kg;
      row["se_daily_carbon_kg"] = sum.se_daily_carbon_kg;
      row["mean_daily_cost_usd"] = sum.mean_daily_cost_usd;
      row["se_daily_cost_usd"] = sum.se_daily_cost_usd;
      row["mean_daily_est_objective"] = sum.mean_daily_est_objective;
      row["mean_iterations_per_epoch"] = sum.mean_iterations_per_epoch;
      summary.push_back(row);
    }
    j["summary"] = summary;
    j["reduction_scale"] = result.reduction_scale;
    j["reductions"] = result.reductions;

    json epochs = json::array();
    for (const EpochRecord& rec : result.epochs) {
      json e;
      e["solver"] = solver_name(rec.solver);
      e["scale"] = rec.scale;
      e["run"] = rec.run;
      e["day"] = rec.day;
      e["epoch"] = rec.epoch;
      e["est_objective"] = rec.est_objective;
      e["iterations"] = rec.iterations;
      e["cloud_carbon_kg"] = rec.ledger.cloud_carbon_kg;
      e["cloud_cost_usd"] = rec.ledger.cloud_cost_usd;
      json dcs = json::array();
      for (const DcLedgerRow& row : rec.ledger.dc) {
        json d;
        d["dc_id"] = row.dc_id;
        d["ar_total"] = row.ar_total;
        d["net_kw"] = row.power.net_kw;
        d["carbon_kg"] = row.carbon_kg;
        d["energy_cost_usd"] = row.energy_cost_usd;
        d["peak_delta_usd"] = row.peak_delta_usd;
        d["network_cost_usd"] = row.network_cost_usd;
        d["total_cost_usd"] = row.total_cost_usd;
        dcs.push_back(d);
      }
      e["dc"] = dcs;
      epochs.push_back(e);
    }
    j["epochs"] = epochs;
    write_text_file(base / "result.json", j.dump(2));
  }

  {
    std::ostringstream csv;
    csv << "solver,scale,run,day,epoch,cloud_carbon_kg,cloud_cost_usd,"
           "est_objective\n";
    for (const EpochRecord& rec : result.epochs) {
      csv << solver_name(rec.solver) << ',' << fmt(rec.scale) << ',' << rec.run
          << ',' << rec.day << ',' << rec.epoch << ','
          << fmt(rec.ledger.cloud_carbon_kg) << ','
          << fmt(rec.ledger.cloud_cost_usd) << ',' << fmt(rec.est_objective)
          << '\n';
    }
    write_text_file(base / "plotdata" / "daily_series.csv", csv.str());
  }

  {
    std::ostringstream csv;
    csv << "solver,scale,mean_daily_carbon_kg,se_daily_carbon_kg,"
           "mean_daily_cost_usd,se_daily_cost_usd\n";
    for (const SolverScaleSummary& sum : result.summary) {
      csv << solver_name(sum.solver) << ',' << fmt(sum.scale) << ','
          << fmt(sum.mean_daily_carbon_kg) << ',' << fmt(sum.se_daily_carbon_kg)
          << ',' << fmt(sum.mean_daily_cost_usd) << ','
          << fmt(sum.se_daily_cost_usd) << '\n';
    }
    write_text_file(base / "plotdata" / "renewable_sweep.csv", csv.str());
  }

  {
    std::ostringstream csv;
    csv << "solver,scale,mean_iterations_per_epoch,mean_daily_est_objective\n";
    for (const SolverScaleSummary& sum : result.summary) {
      csv << solver_name(sum.solver) << ',' << fmt(sum.scale) << ','
          << fmt(sum.mean_iterations_per_epoch) << ','
          << fmt(sum.mean_daily_est_objective) << '\n';
    }
    write_text_file(base / "plotdata" / "scalability_bars.csv", csv.str());
  }
}

}  // namespace geosched
