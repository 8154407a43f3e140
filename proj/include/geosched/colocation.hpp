#pragma once

#include <vector>

#include "geosched/scenario.hpp"

namespace geosched {

// Everything a core sees that affects one task's execution rate: which node
// type it sits on, the active p-state, and the task mix on the processor's
// other cores (task indices, 0-based, repetitions allowed).
struct CoreContext {
  int node_type_id = 0;
  int p_state = 0;
  std::vector<int> co_resident;
};

// Co-location-degraded execution rate (tasks/hour) of one core running
// task_idx under ctx. 1 / (beta . features); throws MissingCoeffs when no
// coefficient row exists for (node type, task's memory class).
double core_coer(const Scenario& s, int task_idx, const CoreContext& ctx);

// Data-center-wide maximum execution rate ER_{i,d}: every core of every node
// runs task_idx (homogeneous saturation), rates summed over all cores.
// p_state_override < 0 means each node type uses its configured fixed state.
double dc_execution_rate(const Scenario& s, int task_idx, int dc_idx,
                         int p_state_override = -1);

// Dense |I| x |D| table of ER values plus per-task cloud-wide capacity.
// ER does not vary with tau (fixed p-states, static coefficient table), so
// one table serves a whole experiment.
struct ExecRateTable {
  int tasks = 0;
  int dcs = 0;
  std::vector<double> er;   // tasks * dcs, row-major by task
  std::vector<double> cap;  // per task: sum over DCs

  double at(int task_idx, int dc_idx) const {
    return er[static_cast<size_t>(task_idx) * static_cast<size_t>(dcs) +
              static_cast<size_t>(dc_idx)];
  }
};

ExecRateTable build_exec_rates(const Scenario& s);

}  // namespace geosched
