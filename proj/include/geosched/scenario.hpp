#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "geosched/errors.hpp"

namespace geosched {

// A processor p-state: frequency scale feeds the colocation regression as
// the clock feature; power scale is carried as config data only (p-state
// selection below the fixed index is out of scope).
struct PState {
  double freq_scale = 1.0;
  double power_scale = 1.0;
  bool operator==(const PState&) const = default;
};

struct NodeType {
  int id = 0;  // 1-based, contiguous
  std::string name;
  int cores = 1;
  double p_idle_kw = 0.0;
  double p_peak_dyn_kw = 0.0;  // average peak dynamic power of the node
  std::vector<PState> p_states;
  int fixed_p_state = 0;  // index into p_states used for all rate math
  bool operator==(const NodeType&) const = default;
};

struct TaskType {
  int id = 0;  // 1-based, contiguous
  std::string name;
  double size_gb = 0.0;
  std::string mem_class;
  double mem_intensity = 0.0;  // in [0, 1]
  // node_type id -> tasks/hour of a single core running alone, per p-state.
  std::map<int, std::vector<double>> base_rate;
  bool operator==(const TaskType&) const = default;
};

// Linear colocation model for one (node type, memory class) pair. Feature
// order: co-resident count, base execution time (hours), clock frequency
// scale, average memory intensity on the processor, target task's memory
// intensity. Predicted execution time = beta . features.
struct ColocCoeffs {
  int node_type_id = 0;
  std::string mem_class;
  std::vector<double> beta;  // exactly 5 entries
  bool operator==(const ColocCoeffs&) const = default;
};

struct DataCenter {
  int id = 0;  // 1-based, contiguous
  std::string name;
  std::map<int, int> node_counts;  // node_type id -> count
  int num_crac = 0;
  double crac_max_kw = 0.0;
  double crac_cop = 1.0;
  double eff = 1.0;  // power overhead multiplier, >= 1
  double carbon_factor = 0.0;  // kg CO2 per kWh
  double net_meter = 1.0;      // alpha_d in [0, 1]
  double peak_price = 0.0;     // $/kW on monthly peak increase
  std::vector<double> elec_price;       // $/kWh per epoch of day
  std::vector<double> renewable_kw;     // kW per epoch of day
  std::vector<double> carbon_override;  // optional per-epoch factor; may be empty

  double price_at(int hour) const { return elec_price[static_cast<size_t>(hour)]; }
  double renewable_at(int hour) const { return renewable_kw[static_cast<size_t>(hour)]; }
  double carbon_at(int hour) const {
    return carbon_override.empty() ? carbon_factor
                                   : carbon_override[static_cast<size_t>(hour)];
  }
  int total_nodes() const;
  bool operator==(const DataCenter&) const = default;
};

enum class ArrivalPattern { Flat, Sinusoidal, Trace };

// How the arrival trace was produced. Kept so save/load round-trips and so
// the harness can regenerate arrivals under a different pattern.
struct ArrivalSpec {
  ArrivalPattern pattern = ArrivalPattern::Trace;
  std::vector<double> base;  // per task mean rate (Flat/Sinusoidal)
  double amplitude = 0.0;
  double phase_h = 0.0;
  bool operator==(const ArrivalSpec&) const = default;
};

struct Scenario {
  double epoch_hours = 1.0;
  int epochs_per_day = 24;
  int billing_days = 30;
  double network_price = 0.0;  // $/GB, uniform across DCs
  bool prorate_peak = false;   // split estimated peak charge across players
  std::vector<NodeType> node_types;
  std::vector<TaskType> task_types;
  std::vector<ColocCoeffs> coloc_coeffs;
  std::vector<DataCenter> data_centers;
  ArrivalSpec arrival_spec;
  // arrivals[task][epoch-of-day] = CAR_i(tau) in tasks/hour
  std::vector<std::vector<double>> arrivals;
  // origin_frac[task][dc] = fraction of the task's requests arriving at that
  // DC's front door; only tasks running away from their origin pay network
  // cost in the realized ledger. Defaults to uniform.
  std::vector<std::vector<double>> origin_frac;

  int num_tasks() const { return static_cast<int>(task_types.size()); }
  int num_dcs() const { return static_cast<int>(data_centers.size()); }
  int hour_of(int tau) const { return tau % epochs_per_day; }
  double arrival_at(int task_idx, int tau) const {
    return arrivals[static_cast<size_t>(task_idx)][static_cast<size_t>(hour_of(tau))];
  }
  const NodeType& node_type_by_id(int id) const;
  const ColocCoeffs& coeffs_for(int node_type_id, const std::string& mem_class) const;
  bool operator==(const Scenario&) const = default;
};

// Loads and fully validates a scenario. Trace CSVs referenced by the config
// are resolved relative to the config file's directory. Throws
// MalformedConfig, MissingTrace, MissingCoeffs, or InfeasibleScenario.
Scenario load_scenario(const std::string& path);

// Parses a scenario from a JSON string (no file access; inline traces only).
Scenario load_scenario_json(const std::string& text, const std::string& base_dir);

// Writes the scenario back out as a single self-contained JSON document
// (traces inlined). load_scenario(save_scenario(s)) == s.
void save_scenario(const Scenario& s, const std::string& path);

// Structural + feasibility validation of an in-memory scenario. Same error
// types as load_scenario.
void validate_scenario(const Scenario& s);

// CAR_i(tau) = base_i * (1 + amplitude * sin(2*pi*(tau - phase_h)/epochs))
// for the sinusoidal pattern; constant base_i for flat.
std::vector<std::vector<double>> generate_arrivals(ArrivalPattern pattern,
                                                   const std::vector<double>& base,
                                                   double amplitude, double phase_h,
                                                   int epochs_per_day);

// Per-entry Normal(mean, sd_frac * mean) draw, truncated below at zero.
// Entries that exceed the cloud-wide capacity cap for their task are redrawn
// up to 100 times and finally clamped, so the result is always feasible.
// task_caps[i] = sum over DCs of ER_{i,d}.
std::vector<std::vector<double>> sample_arrivals(
    const std::vector<std::vector<double>>& trace,
    const std::vector<double>& task_caps, double sd_frac, uint64_t seed);

}  // namespace geosched
