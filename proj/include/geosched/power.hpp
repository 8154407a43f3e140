#pragma once

#include <span>

#include "geosched/colocation.hpp"
#include "geosched/scenario.hpp"

namespace geosched {

struct PowerBreakdown {
  double it_kw = 0.0;         // sum of node power
  double cooling_kw = 0.0;    // sum of CRAC power
  double gross_kw = 0.0;      // (it + cooling) * eff
  double renewable_kw = 0.0;  // RP_d(tau)
  double net_kw = 0.0;        // gross - renewable, may be negative
};

// Affine utilization model for one node: p_idle + util * p_peak_dyn.
double node_power_kw(const NodeType& nt, double util);

// Electrical power drawn by the CRAC units to remove it_kw of heat.
// Throws CoolingCapacityExceeded when the load is beyond num_crac * crac_max.
double crac_power_kw(const DataCenter& dc, double it_kw);

// Realized power of one DC for an epoch. ar holds the per-task arrival rates
// assigned to this DC; every node runs at the same utilization, the sum of
// per-task ER fractions capped at 1.
PowerBreakdown dc_power(const Scenario& s, const ExecRateTable& er, int dc_idx,
                        std::span<const double> ar, int tau);

// Estimate-side peak power: (num_crac * crac_max + sum_j count_j * p_peak_dyn_j)
// * eff - RP(tau). Deliberately ignores idle power; can be negative when
// renewables are large.
double dc_power_max_kw(const Scenario& s, int dc_idx, int tau);

// Same expression before subtracting renewables (static per DC).
double dc_gross_max_kw(const Scenario& s, int dc_idx);

// Per-task estimated power: dc_power_max * ar / ER_{i,d}. Throws
// InfeasibleRate when ar is negative or exceeds the execution rate.
double est_dc_power_kw(const Scenario& s, const ExecRateTable& er, int task_idx,
                       int dc_idx, double ar, int tau);

}  // namespace geosched
