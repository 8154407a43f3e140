#pragma once

// In-memory scenario builders shared by the unit tests. Construction lives
// here so each test states only what it varies.

#include <string>
#include <vector>

#include "geosched/scenario.hpp"

namespace geosched::test {

// Per-DC knobs for make_scenario. Scalars expand to flat traces covering the
// whole day unless an explicit trace is supplied.
struct DcSpec {
  int nodes = 1;
  double carbon = 0.4;        // kg/kWh
  double price = 0.1;         // $/kWh
  double renewable = 0.0;     // kW
  double peak_price = 0.0;    // $/kW
  double net_meter = 1.0;
  double eff = 1.0;
  std::vector<double> price_trace;
  std::vector<double> renewable_trace;
  std::vector<double> carbon_trace;
};

// Builds a scenario with one 4-core node type (0.05 kW idle, 0.1 kW peak
// dynamic, single p-state) and identity colocation coefficients
// (beta = [0,1,0,0,0], so predicted time equals solo time and a core's rate
// is exactly its base rate). base_rates[i] is task i's solo per-core rate in
// tasks/hour, so ER_{i,d} = nodes_d * 4 * base_rates[i]. arrival_base[i] is
// task i's flat cloud arrival rate.
inline Scenario make_scenario(const std::vector<DcSpec>& dcs,
                              const std::vector<double>& base_rates,
                              const std::vector<double>& arrival_base) {
  Scenario s;
  s.network_price = 0.0;

  NodeType nt;
  nt.id = 1;
  nt.name = "quad";
  nt.cores = 4;
  nt.p_idle_kw = 0.05;
  nt.p_peak_dyn_kw = 0.1;
  nt.p_states = {PState{1.0, 1.0}};
  s.node_types.push_back(std::move(nt));

  for (size_t i = 0; i < base_rates.size(); ++i) {
    TaskType tt;
    tt.id = static_cast<int>(i) + 1;
    tt.name = "task" + std::to_string(tt.id);
    tt.size_gb = 1.0;
    tt.mem_class = "ddr";
    tt.mem_intensity = 0.5;
    tt.base_rate[1] = {base_rates[i]};
    s.task_types.push_back(std::move(tt));
  }

  ColocCoeffs cc;
  cc.node_type_id = 1;
  cc.mem_class = "ddr";
  cc.beta = {0.0, 1.0, 0.0, 0.0, 0.0};
  s.coloc_coeffs.push_back(std::move(cc));

  const size_t e = static_cast<size_t>(s.epochs_per_day);
  for (size_t d = 0; d < dcs.size(); ++d) {
    const DcSpec& spec = dcs[d];
    DataCenter dc;
    dc.id = static_cast<int>(d) + 1;
    dc.name = "dc" + std::to_string(dc.id);
    dc.node_counts[1] = spec.nodes;
    dc.num_crac = 1;
    dc.crac_max_kw = 1e6;
    dc.crac_cop = 4.0;
    dc.eff = spec.eff;
    dc.carbon_factor = spec.carbon;
    dc.net_meter = spec.net_meter;
    dc.peak_price = spec.peak_price;
    dc.elec_price = spec.price_trace.empty()
                        ? std::vector<double>(e, spec.price)
                        : spec.price_trace;
    dc.renewable_kw = spec.renewable_trace.empty()
                          ? std::vector<double>(e, spec.renewable)
                          : spec.renewable_trace;
    dc.carbon_override = spec.carbon_trace;
    s.data_centers.push_back(std::move(dc));
  }

  s.arrival_spec.pattern = ArrivalPattern::Flat;
  s.arrival_spec.base = arrival_base;
  s.arrivals = generate_arrivals(ArrivalPattern::Flat, arrival_base, 0.0, 0.0,
                                 s.epochs_per_day);

  const double u = 1.0 / static_cast<double>(dcs.size());
  s.origin_frac.assign(arrival_base.size(),
                       std::vector<double>(dcs.size(), u));
  return s;
}

// Swaps the flat arrivals for a sinusoidal day with the given amplitude.
inline void set_sinusoidal(Scenario& s, double amplitude, double phase_h = 0.0) {
  s.arrival_spec.pattern = ArrivalPattern::Sinusoidal;
  s.arrival_spec.amplitude = amplitude;
  s.arrival_spec.phase_h = phase_h;
  s.arrivals = generate_arrivals(ArrivalPattern::Sinusoidal, s.arrival_spec.base,
                                 amplitude, phase_h, s.epochs_per_day);
}

}  // namespace geosched::test
