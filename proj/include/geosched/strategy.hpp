#pragma once

#include <string>
#include <vector>

namespace geosched {

enum class Objective { Carbon, Cost };

inline const char* objective_name(Objective o) {
  return o == Objective::Carbon ? "carbon" : "cost";
}

// One player's (task type's) per-DC arrival rate split for one epoch.
// Invariants: rates >= 0, sum == CAR_i(tau) within 1e-9 relative, and
// rates[d] <= ER_{i,d} exactly.
struct Strategy {
  int player = 0;  // task index, 0-based
  std::vector<double> rates;
};

struct StrategyProfile {
  int tau = 0;
  std::vector<Strategy> strategies;  // one per task, in task order
};

// Billing-period state threaded through consecutive epochs: tau counts
// epochs since month start, prior_peak_kw[d] is the highest grid draw seen
// at DC d before the current epoch.
struct EpochState {
  int tau = 0;
  std::vector<double> prior_peak_kw;
};

inline EpochState fresh_month_state(int num_dcs) {
  return EpochState{0, std::vector<double>(static_cast<size_t>(num_dcs), 0.0)};
}

}  // namespace geosched
