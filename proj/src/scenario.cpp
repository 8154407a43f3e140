#include "geosched/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "geosched/colocation.hpp"
#include "geosched/rng.hpp"
#include "json.hpp"

namespace geosched {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

int DataCenter::total_nodes() const {
  int n = 0;
  for (const auto& [id, count] : node_counts) n += count;
  return n;
}

const NodeType& Scenario::node_type_by_id(int id) const {
  for (const auto& nt : node_types) {
    if (nt.id == id) return nt;
  }
  throw MalformedConfig("unknown node type id " + std::to_string(id));
}

const ColocCoeffs& Scenario::coeffs_for(int node_type_id,
                                        const std::string& mem_class) const {
  for (const auto& c : coloc_coeffs) {
    if (c.node_type_id == node_type_id && c.mem_class == mem_class) return c;
  }
  throw MissingCoeffs("no colocation coefficients for node type " +
                      std::to_string(node_type_id) + ", mem class '" +
                      mem_class + "'");
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw MalformedConfig(msg); }

const json& need(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) bad(where + ": missing field '" + key + "'");
  return *it;
}

double need_num(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number()) bad(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

int need_int(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number_integer()) bad(where + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

std::string opt_str(const json& j, const char* key) {
  auto it = j.find(key);
  return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
}

std::vector<double> num_array(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) bad(where + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

// Keys of id-keyed maps ("1", "2", ...) arrive as strings in JSON.
int parse_id_key(const std::string& key, const std::string& where) {
  try {
    size_t pos = 0;
    int v = std::stoi(key, &pos);
    if (pos != key.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    bad(where + ": key '" + key + "' is not an integer id");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingTrace("trace file not found: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) bad("trace file is empty: " + path);
  return rows;
}

double parse_num(const std::string& cell, const std::string& where) {
  try {
    size_t pos = 0;
    double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    bad(where + ": bad numeric cell '" + cell + "'");
  }
}

void load_dc_trace_csv(DataCenter& dc, const std::string& path, int epochs) {
  auto rows = read_csv(path);
  const auto& head = rows[0];
  if (head.size() < 3 || head[0] != "epoch" ||
      head[1] != "elec_price_usd_per_kwh" || head[2] != "renewable_kw") {
    bad(path + ": expected header epoch,elec_price_usd_per_kwh,renewable_kw"
               "[,carbon_factor_kg_per_kwh]");
  }
  bool has_carbon = head.size() >= 4 && head[3] == "carbon_factor_kg_per_kwh";
  if (static_cast<int>(rows.size()) - 1 != epochs) {
    bad(path + ": expected " + std::to_string(epochs) + " data rows, found " +
        std::to_string(rows.size() - 1));
  }
  for (int t = 0; t < epochs; ++t) {
    const auto& row = rows[static_cast<size_t>(t) + 1];
    if (static_cast<int>(row.size()) < (has_carbon ? 4 : 3)) bad(path + ": short row");
    if (parse_num(row[0], path) != t) bad(path + ": epoch column must run 0.." +
                                          std::to_string(epochs - 1) + " in order");
    dc.elec_price.push_back(parse_num(row[1], path));
    dc.renewable_kw.push_back(parse_num(row[2], path));
    if (has_carbon) dc.carbon_override.push_back(parse_num(row[3], path));
  }
}

std::vector<std::vector<double>> load_arrivals_csv(const std::string& path,
                                                   int num_tasks, int epochs) {
  auto rows = read_csv(path);
  const auto& head = rows[0];
  if (static_cast<int>(head.size()) != num_tasks + 1 || head[0] != "epoch") {
    bad(path + ": expected header epoch,task_1,...,task_" + std::to_string(num_tasks));
  }
  for (int i = 0; i < num_tasks; ++i) {
    if (head[static_cast<size_t>(i) + 1] != "task_" + std::to_string(i + 1)) {
      bad(path + ": column " + std::to_string(i + 1) + " must be task_" +
          std::to_string(i + 1));
    }
  }
  if (static_cast<int>(rows.size()) - 1 != epochs) {
    bad(path + ": expected " + std::to_string(epochs) + " data rows");
  }
  std::vector<std::vector<double>> trace(
      static_cast<size_t>(num_tasks),
      std::vector<double>(static_cast<size_t>(epochs), 0.0));
  for (int t = 0; t < epochs; ++t) {
    const auto& row = rows[static_cast<size_t>(t) + 1];
    if (static_cast<int>(row.size()) != num_tasks + 1) bad(path + ": short row");
    if (parse_num(row[0], path) != t) bad(path + ": epoch column out of order");
    for (int i = 0; i < num_tasks; ++i) {
      trace[static_cast<size_t>(i)][static_cast<size_t>(t)] =
          parse_num(row[static_cast<size_t>(i) + 1], path);
    }
  }
  return trace;
}

ArrivalPattern parse_pattern(const std::string& s) {
  if (s == "flat") return ArrivalPattern::Flat;
  if (s == "sinusoidal") return ArrivalPattern::Sinusoidal;
  if (s == "trace") return ArrivalPattern::Trace;
  bad("unknown arrival pattern '" + s + "'");
}

const char* pattern_name(ArrivalPattern p) {
  switch (p) {
    case ArrivalPattern::Flat: return "flat";
    case ArrivalPattern::Sinusoidal: return "sinusoidal";
    default: return "trace";
  }
}

void check_ids_contiguous(const std::vector<int>& ids, const std::string& what) {
  for (size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] != static_cast<int>(k) + 1) {
      bad(what + " ids must be contiguous starting at 1 (found " +
          std::to_string(ids[k]) + " at position " + std::to_string(k) + ")");
    }
  }
}

}  // namespace

std::vector<std::vector<double>> generate_arrivals(ArrivalPattern pattern,
                                                   const std::vector<double>& base,
                                                   double amplitude, double phase_h,
                                                   int epochs_per_day) {
  if (pattern == ArrivalPattern::Trace) bad("generate_arrivals needs flat or sinusoidal");
  if (amplitude < 0.0 || amplitude >= 1.0) {
    throw BadAmplitude("amplitude must lie in [0, 1), got " + std::to_string(amplitude));
  }
  if (epochs_per_day < 1) bad("epochs_per_day must be >= 1");
  std::vector<std::vector<double>> out;
  out.reserve(base.size());
  const double two_pi = 6.283185307179586476925286766559;
  for (double b : base) {
    if (!(b > 0.0)) bad("arrival base rates must be positive");
    std::vector<double> row(static_cast<size_t>(epochs_per_day), b);
    if (pattern == ArrivalPattern::Sinusoidal) {
      for (int t = 0; t < epochs_per_day; ++t) {
        double angle = two_pi * (t - phase_h) / epochs_per_day;
        row[static_cast<size_t>(t)] = b * (1.0 + amplitude * std::sin(angle));
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<double>> sample_arrivals(
    const std::vector<std::vector<double>>& trace,
    const std::vector<double>& task_caps, double sd_frac, uint64_t seed) {
  if (sd_frac < 0.0) bad("sd_frac must be >= 0");
  if (task_caps.size() != trace.size()) bad("task_caps size mismatch");
  Rng rng(seed);
  std::vector<std::vector<double>> out = trace;
  for (size_t i = 0; i < trace.size(); ++i) {
    double cap = task_caps[i];
    for (size_t t = 0; t < trace[i].size(); ++t) {
      double mean = trace[i][t];
      if (sd_frac == 0.0 || mean == 0.0) continue;
      double draw = 0.0;
      for (int attempt = 0; attempt < 100; ++attempt) {
        draw = std::max(0.0, rng.gaussian(mean, sd_frac * mean));
        if (draw <= cap) break;
      }
      out[i][t] = std::min(draw, cap);
    }
  }
  return out;
}

void validate_scenario(const Scenario& s) {
  const std::string top = "scenario";
  if (!(s.epoch_hours > 0.0)) bad("epoch_hours must be > 0");
  if (s.epochs_per_day < 1) bad("epochs_per_day must be >= 1");
  if (s.billing_days < 1) bad("billing_days must be >= 1");
  if (s.network_price < 0.0) bad("network_price must be >= 0");
  if (s.node_types.empty()) bad("at least one node type required");
  if (s.task_types.empty()) bad("at least one task type required");
  if (s.data_centers.empty()) bad("at least one data center required");

  {
    std::vector<int> ids;
    for (const auto& nt : s.node_types) ids.push_back(nt.id);
    check_ids_contiguous(ids, "node type");
  }
  for (const auto& nt : s.node_types) {
    std::string where = "node type " + std::to_string(nt.id);
    if (nt.cores < 1) bad(where + ": cores must be >= 1");
    if (nt.p_idle_kw < 0.0) bad(where + ": p_idle_kw must be >= 0");
    if (!(nt.p_peak_dyn_kw > 0.0)) bad(where + ": p_peak_dyn_kw must be > 0");
    if (nt.p_states.empty()) bad(where + ": p_states must be non-empty");
    for (const auto& ps : nt.p_states) {
      if (!(ps.freq_scale > 0.0) || !(ps.power_scale > 0.0)) {
        bad(where + ": p-state scales must be > 0");
      }
    }
    if (nt.fixed_p_state < 0 ||
        nt.fixed_p_state >= static_cast<int>(nt.p_states.size())) {
      bad(where + ": fixed_p_state out of range");
    }
  }

  {
    std::vector<int> ids;
    for (const auto& tt : s.task_types) ids.push_back(tt.id);
    check_ids_contiguous(ids, "task type");
  }
  for (const auto& tt : s.task_types) {
    std::string where = "task type " + std::to_string(tt.id);
    if (!(tt.size_gb > 0.0)) bad(where + ": size_gb must be > 0");
    if (tt.mem_intensity < 0.0 || tt.mem_intensity > 1.0) {
      bad(where + ": mem_intensity must lie in [0, 1]");
    }
    if (tt.mem_class.empty()) bad(where + ": mem_class required");
    for (const auto& [ntid, rates] : tt.base_rate) {
      const NodeType& nt = s.node_type_by_id(ntid);
      if (rates.size() != nt.p_states.size()) {
        bad(where + ": base_exec_rate for node type " + std::to_string(ntid) +
            " must list one rate per p-state");
      }
      for (double r : rates) {
        if (!(r > 0.0)) bad(where + ": base_exec_rate values must be > 0");
      }
    }
  }

  for (const auto& c : s.coloc_coeffs) {
    if (c.beta.size() != 5) {
      bad("coloc_coeffs for node type " + std::to_string(c.node_type_id) +
          ": beta must have exactly 5 entries");
    }
    s.node_type_by_id(c.node_type_id);
  }

  {
    std::vector<int> ids;
    for (const auto& dc : s.data_centers) ids.push_back(dc.id);
    check_ids_contiguous(ids, "data center");
  }
  for (const auto& dc : s.data_centers) {
    std::string where = "data center " + std::to_string(dc.id);
    if (dc.total_nodes() <= 0) bad(where + ": must contain at least one node");
    for (const auto& [ntid, count] : dc.node_counts) {
      s.node_type_by_id(ntid);
      if (count < 0) bad(where + ": node counts must be >= 0");
    }
    if (dc.num_crac < 0) bad(where + ": num_crac must be >= 0");
    if (dc.crac_max_kw < 0.0) bad(where + ": crac_max_kw must be >= 0");
    if (!(dc.crac_cop > 0.0)) bad(where + ": crac_cop must be > 0");
    if (dc.eff < 1.0) bad(where + ": eff must be >= 1");
    if (dc.carbon_factor < 0.0) bad(where + ": carbon_factor must be >= 0");
    if (dc.net_meter < 0.0 || dc.net_meter > 1.0) {
      bad(where + ": net_meter must lie in [0, 1]");
    }
    if (dc.peak_price < 0.0) bad(where + ": peak_price must be >= 0");
    size_t e = static_cast<size_t>(s.epochs_per_day);
    if (dc.elec_price.size() != e || dc.renewable_kw.size() != e) {
      bad(where + ": price and renewable traces must have " +
          std::to_string(s.epochs_per_day) + " entries");
    }
    if (!dc.carbon_override.empty() && dc.carbon_override.size() != e) {
      bad(where + ": carbon factor trace must have " +
          std::to_string(s.epochs_per_day) + " entries");
    }
    for (double p : dc.elec_price) {
      if (p < 0.0) bad(where + ": electricity prices must be >= 0");
    }
    for (double r : dc.renewable_kw) {
      if (r < 0.0) bad(where + ": renewable power must be >= 0");
    }
    for (double c : dc.carbon_override) {
      if (c < 0.0) bad(where + ": carbon factors must be >= 0");
    }
  }

  // Coefficient coverage: every node type deployed somewhere must have a row
  // for every task memory class, otherwise rate math cannot proceed.
  std::set<int> deployed;
  for (const auto& dc : s.data_centers) {
    for (const auto& [ntid, count] : dc.node_counts) {
      if (count > 0) deployed.insert(ntid);
    }
  }
  for (int ntid : deployed) {
    const NodeType& nt = s.node_type_by_id(ntid);
    for (const auto& tt : s.task_types) {
      s.coeffs_for(ntid, tt.mem_class);  // throws MissingCoeffs
      auto it = tt.base_rate.find(ntid);
      if (it == tt.base_rate.end()) {
        bad("task type " + std::to_string(tt.id) +
            ": missing base_exec_rate for deployed node type " +
            std::to_string(ntid));
      }
      (void)nt;
    }
  }

  // Corner-point check: predicted execution time must stay positive over the
  // reachable feature box (the model is linear, so extrema sit on corners).
  double mem_lo = 1.0, mem_hi = 0.0;
  for (const auto& tt : s.task_types) {
    mem_lo = std::min(mem_lo, tt.mem_intensity);
    mem_hi = std::max(mem_hi, tt.mem_intensity);
  }
  for (int ntid : deployed) {
    const NodeType& nt = s.node_type_by_id(ntid);
    double clk_lo = nt.p_states[0].freq_scale, clk_hi = clk_lo;
    for (const auto& ps : nt.p_states) {
      clk_lo = std::min(clk_lo, ps.freq_scale);
      clk_hi = std::max(clk_hi, ps.freq_scale);
    }
    for (const auto& tt : s.task_types) {
      const ColocCoeffs& cc = s.coeffs_for(ntid, tt.mem_class);
      const auto& rates = tt.base_rate.at(ntid);
      double bt_lo = 1.0 / rates[0], bt_hi = bt_lo;
      for (double r : rates) {
        bt_lo = std::min(bt_lo, 1.0 / r);
        bt_hi = std::max(bt_hi, 1.0 / r);
      }
      double n_hi = static_cast<double>(nt.cores - 1);
      for (int mask = 0; mask < 32; ++mask) {
        double f0 = (mask & 1) ? n_hi : 0.0;
        double f1 = (mask & 2) ? bt_hi : bt_lo;
        double f2 = (mask & 4) ? clk_hi : clk_lo;
        double f3 = (mask & 8) ? mem_hi : mem_lo;
        double f4 = (mask & 16) ? mem_hi : mem_lo;
        double t = cc.beta[0] * f0 + cc.beta[1] * f1 + cc.beta[2] * f2 +
                   cc.beta[3] * f3 + cc.beta[4] * f4;
        if (!(t > 0.0)) {
          bad("coloc_coeffs for node type " + std::to_string(ntid) +
              ", mem class '" + tt.mem_class +
              "' admit a non-positive execution time at a feature corner");
        }
      }
    }
  }

  // Arrival trace shape and sign.
  if (s.arrivals.size() != static_cast<size_t>(s.num_tasks())) {
    bad("arrival trace must cover every task type");
  }
  for (const auto& row : s.arrivals) {
    if (row.size() != static_cast<size_t>(s.epochs_per_day)) {
      bad("arrival trace rows must have epochs_per_day entries");
    }
    for (double v : row) {
      if (v < 0.0 || !std::isfinite(v)) bad("arrival rates must be finite and >= 0");
    }
  }

  if (s.origin_frac.size() != static_cast<size_t>(s.num_tasks())) {
    bad("origin fractions must cover every task type");
  }
  for (size_t i = 0; i < s.origin_frac.size(); ++i) {
    const auto& row = s.origin_frac[i];
    if (row.size() != static_cast<size_t>(s.num_dcs())) {
      bad("origin fraction rows must have one entry per data center");
    }
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0) bad("origin fractions must be >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      bad("origin fractions for task " + std::to_string(i + 1) +
          " must sum to 1");
    }
  }

  // Under-subscription: the cloud must be able to absorb every task's
  // arrival rate at every epoch.
  ExecRateTable er = build_exec_rates(s);
  for (int i = 0; i < s.num_tasks(); ++i) {
    for (int t = 0; t < s.epochs_per_day; ++t) {
      double car = s.arrivals[static_cast<size_t>(i)][static_cast<size_t>(t)];
      if (car > er.cap[static_cast<size_t>(i)]) {
        throw InfeasibleScenario(
            "arrival rate " + std::to_string(car) + " for task " +
                std::to_string(i + 1) + " at epoch " + std::to_string(t) +
                " exceeds cloud execution capacity " +
                std::to_string(er.cap[static_cast<size_t>(i)]),
            i + 1, t);
      }
    }
  }
}

namespace {

Scenario parse_scenario(const json& j, const std::string& base_dir) {
  if (!j.is_object()) bad("top-level config must be a JSON object");
  Scenario s;
  s.epoch_hours = j.value("epoch_hours", 1.0);
  s.epochs_per_day = j.value("epochs_per_day", 24);
  s.billing_days = j.value("billing_days", 30);
  s.network_price = need_num(j, "network_price_usd_per_gb", "scenario");
  s.prorate_peak = j.value("prorate_peak", false);

  for (const auto& nj : need(j, "node_types", "scenario")) {
    NodeType nt;
    std::string where = "node_types entry";
    nt.id = need_int(nj, "id", where);
    where = "node type " + std::to_string(nt.id);
    nt.name = opt_str(nj, "name");
    nt.cores = need_int(nj, "cores", where);
    nt.p_idle_kw = need_num(nj, "p_idle_kw", where);
    nt.p_peak_dyn_kw = need_num(nj, "p_peak_dyn_kw", where);
    for (const auto& pj : need(nj, "p_states", where)) {
      PState ps;
      ps.freq_scale = need_num(pj, "freq_scale", where + " p_states");
      ps.power_scale = need_num(pj, "power_scale", where + " p_states");
      nt.p_states.push_back(ps);
    }
    nt.fixed_p_state = nj.value("fixed_p_state", 0);
    s.node_types.push_back(std::move(nt));
  }

  for (const auto& tj : need(j, "task_types", "scenario")) {
    TaskType tt;
    tt.id = need_int(tj, "id", "task_types entry");
    std::string where = "task type " + std::to_string(tt.id);
    tt.name = opt_str(tj, "name");
    tt.size_gb = need_num(tj, "size_gb", where);
    tt.mem_class = need(tj, "mem_class", where).get<std::string>();
    tt.mem_intensity = need_num(tj, "mem_intensity", where);
    const json& br = need(tj, "base_exec_rate", where);
    if (!br.is_object()) bad(where + ": base_exec_rate must map node type ids to arrays");
    for (auto it = br.begin(); it != br.end(); ++it) {
      int ntid = parse_id_key(it.key(), where);
      tt.base_rate[ntid] = num_array(it.value(), where + " base_exec_rate");
    }
    s.task_types.push_back(std::move(tt));
  }

  for (const auto& cj : need(j, "coloc_coeffs", "scenario")) {
    ColocCoeffs cc;
    cc.node_type_id = need_int(cj, "node_type", "coloc_coeffs entry");
    cc.mem_class = need(cj, "mem_class", "coloc_coeffs entry").get<std::string>();
    cc.beta = num_array(need(cj, "beta", "coloc_coeffs entry"), "coloc_coeffs beta");
    s.coloc_coeffs.push_back(std::move(cc));
  }

  for (const auto& dj : need(j, "data_centers", "scenario")) {
    DataCenter dc;
    dc.id = need_int(dj, "id", "data_centers entry");
    std::string where = "data center " + std::to_string(dc.id);
    dc.name = opt_str(dj, "name");
    const json& counts = need(dj, "node_counts", where);
    if (!counts.is_object()) bad(where + ": node_counts must be an object");
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (!it.value().is_number_integer()) bad(where + ": node counts must be integers");
      dc.node_counts[parse_id_key(it.key(), where)] = it.value().get<int>();
    }
    dc.num_crac = need_int(dj, "num_crac", where);
    dc.crac_max_kw = need_num(dj, "crac_max_kw", where);
    dc.crac_cop = need_num(dj, "crac_cop", where);
    dc.eff = need_num(dj, "eff", where);
    dc.carbon_factor = need_num(dj, "carbon_factor_kg_per_kwh", where);
    dc.net_meter = need_num(dj, "net_meter", where);
    dc.peak_price = need_num(dj, "peak_price_usd_per_kw", where);
    std::string csv = opt_str(dj, "trace_csv");
    if (!csv.empty()) {
      fs::path p = fs::path(csv);
      if (p.is_relative()) p = fs::path(base_dir) / p;
      load_dc_trace_csv(dc, p.string(), s.epochs_per_day);
    } else {
      dc.elec_price = num_array(need(dj, "elec_price_trace", where), where);
      dc.renewable_kw = num_array(need(dj, "renewable_trace", where), where);
      if (dj.contains("carbon_factor_trace")) {
        dc.carbon_override = num_array(dj["carbon_factor_trace"], where);
      }
    }
    s.data_centers.push_back(std::move(dc));
  }

  int num_tasks = static_cast<int>(s.task_types.size());
  const json& aj = need(j, "arrivals", "scenario");
  std::string pat = need(aj, "pattern", "arrivals").get<std::string>();
  s.arrival_spec.pattern = parse_pattern(pat);
  if (s.arrival_spec.pattern == ArrivalPattern::Trace) {
    if (aj.contains("csv")) {
      fs::path p = fs::path(aj["csv"].get<std::string>());
      if (p.is_relative()) p = fs::path(base_dir) / p;
      s.arrivals = load_arrivals_csv(p.string(), num_tasks, s.epochs_per_day);
    } else {
      const json& tr = need(aj, "trace", "arrivals");
      if (!tr.is_object()) bad("arrivals.trace must map task ids to arrays");
      s.arrivals.assign(static_cast<size_t>(num_tasks), {});
      for (auto it = tr.begin(); it != tr.end(); ++it) {
        int tid = parse_id_key(it.key(), "arrivals.trace");
        if (tid < 1 || tid > num_tasks) bad("arrivals.trace: unknown task id " + it.key());
        s.arrivals[static_cast<size_t>(tid) - 1] =
            num_array(it.value(), "arrivals.trace");
      }
      for (size_t i = 0; i < s.arrivals.size(); ++i) {
        if (s.arrivals[i].empty()) {
          bad("arrivals.trace: missing task " + std::to_string(i + 1));
        }
      }
    }
  } else {
    const json& bj = need(aj, "base", "arrivals");
    if (!bj.is_object()) bad("arrivals.base must map task ids to numbers");
    s.arrival_spec.base.assign(static_cast<size_t>(num_tasks), 0.0);
    for (auto it = bj.begin(); it != bj.end(); ++it) {
      int tid = parse_id_key(it.key(), "arrivals.base");
      if (tid < 1 || tid > num_tasks) bad("arrivals.base: unknown task id " + it.key());
      if (!it.value().is_number()) bad("arrivals.base values must be numbers");
      s.arrival_spec.base[static_cast<size_t>(tid) - 1] = it.value().get<double>();
    }
    s.arrival_spec.amplitude = aj.value("amplitude", 0.0);
    s.arrival_spec.phase_h = aj.value("phase_h", 0.0);
    s.arrivals = generate_arrivals(s.arrival_spec.pattern, s.arrival_spec.base,
                                   s.arrival_spec.amplitude, s.arrival_spec.phase_h,
                                   s.epochs_per_day);
  }

  if (j.contains("origin_map")) {
    const json& om = j["origin_map"];
    if (!om.is_object()) bad("origin_map must be an object keyed by task id");
    int num_dcs = static_cast<int>(s.data_centers.size());
    s.origin_frac.assign(static_cast<size_t>(num_tasks),
                         std::vector<double>(static_cast<size_t>(num_dcs), 0.0));
    for (auto it = om.begin(); it != om.end(); ++it) {
      int tid = parse_id_key(it.key(), "origin_map");
      if (tid < 1 || tid > num_tasks) bad("origin_map: unknown task id " + it.key());
      if (!it.value().is_object()) bad("origin_map entries must map dc ids to fractions");
      for (auto dit = it.value().begin(); dit != it.value().end(); ++dit) {
        int did = parse_id_key(dit.key(), "origin_map");
        if (did < 1 || did > num_dcs) bad("origin_map: unknown dc id " + dit.key());
        if (!dit.value().is_number()) bad("origin_map fractions must be numbers");
        s.origin_frac[static_cast<size_t>(tid) - 1][static_cast<size_t>(did) - 1] =
            dit.value().get<double>();
      }
    }
  } else {
    int num_dcs = static_cast<int>(s.data_centers.size());
    double u = num_dcs > 0 ? 1.0 / num_dcs : 0.0;
    s.origin_frac.assign(static_cast<size_t>(num_tasks),
                         std::vector<double>(static_cast<size_t>(num_dcs), u));
  }

  validate_scenario(s);
  return s;
}

}  // namespace

Scenario load_scenario_json(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_scenario(j, base_dir);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedConfig("cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_scenario_json(buf.str(), fs::path(path).parent_path().string());
}

void save_scenario(const Scenario& s, const std::string& path) {
  ordered_json j;
  j["epoch_hours"] = s.epoch_hours;
  j["epochs_per_day"] = s.epochs_per_day;
  j["billing_days"] = s.billing_days;
  j["network_price_usd_per_gb"] = s.network_price;
  j["prorate_peak"] = s.prorate_peak;
  j["node_types"] = ordered_json::array();
  for (const auto& nt : s.node_types) {
    ordered_json nj;
    nj["id"] = nt.id;
    nj["name"] = nt.name;
    nj["cores"] = nt.cores;
    nj["p_idle_kw"] = nt.p_idle_kw;
    nj["p_peak_dyn_kw"] = nt.p_peak_dyn_kw;
    nj["p_states"] = ordered_json::array();
    for (const auto& ps : nt.p_states) {
      nj["p_states"].push_back({{"freq_scale", ps.freq_scale},
                                {"power_scale", ps.power_scale}});
    }
    nj["fixed_p_state"] = nt.fixed_p_state;
    j["node_types"].push_back(std::move(nj));
  }
  j["task_types"] = ordered_json::array();
  for (const auto& tt : s.task_types) {
    ordered_json tj;
    tj["id"] = tt.id;
    tj["name"] = tt.name;
    tj["size_gb"] = tt.size_gb;
    tj["mem_class"] = tt.mem_class;
    tj["mem_intensity"] = tt.mem_intensity;
    ordered_json br;
    for (const auto& [ntid, rates] : tt.base_rate) {
      br[std::to_string(ntid)] = rates;
    }
    tj["base_exec_rate"] = std::move(br);
    j["task_types"].push_back(std::move(tj));
  }
  j["coloc_coeffs"] = ordered_json::array();
  for (const auto& cc : s.coloc_coeffs) {
    j["coloc_coeffs"].push_back({{"node_type", cc.node_type_id},
                                 {"mem_class", cc.mem_class},
                                 {"beta", cc.beta}});
  }
  j["data_centers"] = ordered_json::array();
  for (const auto& dc : s.data_centers) {
    ordered_json dj;
    dj["id"] = dc.id;
    dj["name"] = dc.name;
    ordered_json counts;
    for (const auto& [ntid, count] : dc.node_counts) {
      counts[std::to_string(ntid)] = count;
    }
    dj["node_counts"] = std::move(counts);
    dj["num_crac"] = dc.num_crac;
    dj["crac_max_kw"] = dc.crac_max_kw;
    dj["crac_cop"] = dc.crac_cop;
    dj["eff"] = dc.eff;
    dj["carbon_factor_kg_per_kwh"] = dc.carbon_factor;
    dj["net_meter"] = dc.net_meter;
    dj["peak_price_usd_per_kw"] = dc.peak_price;
    dj["elec_price_trace"] = dc.elec_price;
    dj["renewable_trace"] = dc.renewable_kw;
    if (!dc.carbon_override.empty()) dj["carbon_factor_trace"] = dc.carbon_override;
    j["data_centers"].push_back(std::move(dj));
  }
  ordered_json aj;
  aj["pattern"] = pattern_name(s.arrival_spec.pattern);
  if (s.arrival_spec.pattern == ArrivalPattern::Trace) {
    ordered_json tr;
    for (size_t i = 0; i < s.arrivals.size(); ++i) {
      tr[std::to_string(i + 1)] = s.arrivals[i];
    }
    aj["trace"] = std::move(tr);
  } else {
    ordered_json base;
    for (size_t i = 0; i < s.arrival_spec.base.size(); ++i) {
      base[std::to_string(i + 1)] = s.arrival_spec.base[i];
    }
    aj["base"] = std::move(base);
    aj["amplitude"] = s.arrival_spec.amplitude;
    aj["phase_h"] = s.arrival_spec.phase_h;
  }
  j["arrivals"] = std::move(aj);
  ordered_json om;
  for (size_t i = 0; i < s.origin_frac.size(); ++i) {
    ordered_json row;
    for (size_t d = 0; d < s.origin_frac[i].size(); ++d) {
      row[std::to_string(d + 1)] = s.origin_frac[i][d];
    }
    om[std::to_string(i + 1)] = std::move(row);
  }
  j["origin_map"] = std::move(om);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write scenario file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace geosched
