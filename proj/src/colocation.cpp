#include "geosched/colocation.hpp"

#include <string>

namespace geosched {

double core_coer(const Scenario& s, int task_idx, const CoreContext& ctx) {
  const TaskType& task = s.task_types[static_cast<size_t>(task_idx)];
  const NodeType& nt = s.node_type_by_id(ctx.node_type_id);
  if (ctx.p_state < 0 || ctx.p_state >= static_cast<int>(nt.p_states.size())) {
    throw MalformedConfig("p-state index out of range for node type " +
                          std::to_string(nt.id));
  }
  if (static_cast<int>(ctx.co_resident.size()) > nt.cores - 1) {
    throw MalformedConfig("more co-resident tasks than spare cores on node type " +
                          std::to_string(nt.id));
  }
  const ColocCoeffs& cc = s.coeffs_for(ctx.node_type_id, task.mem_class);

  auto it = task.base_rate.find(ctx.node_type_id);
  if (it == task.base_rate.end()) {
    throw MalformedConfig("task type " + std::to_string(task.id) +
                          " has no base rate for node type " +
                          std::to_string(ctx.node_type_id));
  }
  double base_rate = it->second[static_cast<size_t>(ctx.p_state)];

  // Feature vector of the linear interference model. The co-resident count
  // excludes the target; the average memory intensity includes it (the mean
  // over everything the processor is running).
  double n_coloc = static_cast<double>(ctx.co_resident.size());
  double base_time_h = 1.0 / base_rate;
  double clock = nt.p_states[static_cast<size_t>(ctx.p_state)].freq_scale;
  double mem_sum = task.mem_intensity;
  for (int other : ctx.co_resident) {
    mem_sum += s.task_types[static_cast<size_t>(other)].mem_intensity;
  }
  double avg_mem = mem_sum / (n_coloc + 1.0);
  double target_mem = task.mem_intensity;

  double predicted_time = cc.beta[0] * n_coloc + cc.beta[1] * base_time_h +
                          cc.beta[2] * clock + cc.beta[3] * avg_mem +
                          cc.beta[4] * target_mem;
  if (!(predicted_time > 0.0)) {
    throw MalformedConfig("colocation model predicted a non-positive execution "
                          "time for task type " + std::to_string(task.id) +
                          " on node type " + std::to_string(nt.id));
  }
  return 1.0 / predicted_time;
}

double dc_execution_rate(const Scenario& s, int task_idx, int dc_idx,
                         int p_state_override) {
  const DataCenter& dc = s.data_centers[static_cast<size_t>(dc_idx)];
  double er = 0.0;
  for (const auto& [ntid, count] : dc.node_counts) {
    if (count <= 0) continue;
    const NodeType& nt = s.node_type_by_id(ntid);
    CoreContext ctx;
    ctx.node_type_id = ntid;
    ctx.p_state = p_state_override >= 0 ? p_state_override : nt.fixed_p_state;
    ctx.co_resident.assign(static_cast<size_t>(nt.cores) - 1, task_idx);
    double per_core = core_coer(s, task_idx, ctx);
    er += static_cast<double>(count) * static_cast<double>(nt.cores) * per_core;
  }
  return er;
}

ExecRateTable build_exec_rates(const Scenario& s) {
  ExecRateTable t;
  t.tasks = s.num_tasks();
  t.dcs = s.num_dcs();
  t.er.resize(static_cast<size_t>(t.tasks) * static_cast<size_t>(t.dcs));
  t.cap.assign(static_cast<size_t>(t.tasks), 0.0);
  for (int i = 0; i < t.tasks; ++i) {
    for (int d = 0; d < t.dcs; ++d) {
      double er = dc_execution_rate(s, i, d);
      t.er[static_cast<size_t>(i) * static_cast<size_t>(t.dcs) +
           static_cast<size_t>(d)] = er;
      t.cap[static_cast<size_t>(i)] += er;
    }
  }
  return t;
}

}  // namespace geosched
