#include "geosched/power.hpp"

#include <algorithm>
#include <string>

namespace geosched {

double node_power_kw(const NodeType& nt, double util) {
  if (!(util >= 0.0) || util > 1.0) {
    throw BadUtil("utilization must lie in [0, 1], got " + std::to_string(util));
  }
  return nt.p_idle_kw + util * nt.p_peak_dyn_kw;
}

double crac_power_kw(const DataCenter& dc, double it_kw) {
  if (it_kw < 0.0) throw BadUtil("IT power must be >= 0");
  double draw = it_kw / dc.crac_cop;
  double capacity = static_cast<double>(dc.num_crac) * dc.crac_max_kw;
  if (draw > capacity) {
    throw CoolingCapacityExceeded(
        "CRAC load " + std::to_string(draw) + " kW exceeds capacity " +
        std::to_string(capacity) + " kW at data center " + std::to_string(dc.id));
  }
  return draw;
}

PowerBreakdown dc_power(const Scenario& s, const ExecRateTable& er, int dc_idx,
                        std::span<const double> ar, int tau) {
  const DataCenter& dc = s.data_centers[static_cast<size_t>(dc_idx)];
  double util = 0.0;
  for (int i = 0; i < er.tasks; ++i) {
    double rate = ar[static_cast<size_t>(i)];
    if (rate < 0.0) throw BadUtil("negative arrival rate");
    util += std::min(1.0, rate / er.at(i, dc_idx));
  }
  util = std::min(1.0, util);

  PowerBreakdown pb;
  for (const auto& [ntid, count] : dc.node_counts) {
    if (count <= 0) continue;
    pb.it_kw += static_cast<double>(count) *
                node_power_kw(s.node_type_by_id(ntid), util);
  }
  pb.cooling_kw = crac_power_kw(dc, pb.it_kw);
  pb.gross_kw = (pb.it_kw + pb.cooling_kw) * dc.eff;
  pb.renewable_kw = dc.renewable_at(s.hour_of(tau));
  pb.net_kw = pb.gross_kw - pb.renewable_kw;
  return pb;
}

double dc_gross_max_kw(const Scenario& s, int dc_idx) {
  const DataCenter& dc = s.data_centers[static_cast<size_t>(dc_idx)];
  double sum = static_cast<double>(dc.num_crac) * dc.crac_max_kw;
  for (const auto& [ntid, count] : dc.node_counts) {
    if (count <= 0) continue;
    sum += static_cast<double>(count) * s.node_type_by_id(ntid).p_peak_dyn_kw;
  }
  return sum * dc.eff;
}

double dc_power_max_kw(const Scenario& s, int dc_idx, int tau) {
  const DataCenter& dc = s.data_centers[static_cast<size_t>(dc_idx)];
  return dc_gross_max_kw(s, dc_idx) - dc.renewable_at(s.hour_of(tau));
}

double est_dc_power_kw(const Scenario& s, const ExecRateTable& er, int task_idx,
                       int dc_idx, double ar, int tau) {
  double rate_cap = er.at(task_idx, dc_idx);
  if (ar < 0.0 || ar > rate_cap) {
    throw InfeasibleRate("arrival rate " + std::to_string(ar) +
                         " outside [0, ER=" + std::to_string(rate_cap) +
                         "] for task " + std::to_string(task_idx + 1) +
                         " at data center " + std::to_string(dc_idx + 1));
  }
  return dc_power_max_kw(s, dc_idx, tau) * ar / rate_cap;
}

}  // namespace geosched
