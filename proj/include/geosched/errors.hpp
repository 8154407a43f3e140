#pragma once

#include <stdexcept>
#include <string>

namespace geosched {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario loading / validation
struct MalformedConfig : Error {
  using Error::Error;
};
struct MissingTrace : Error {
  using Error::Error;
};
struct InfeasibleScenario : Error {
  int task_id = -1;  // config-level (1-based) task id
  int tau = -1;
  InfeasibleScenario(const std::string& msg, int task, int epoch)
      : Error(msg), task_id(task), tau(epoch) {}
};
struct BadAmplitude : Error {
  using Error::Error;
};

// Colocation / power / accounting
struct MissingCoeffs : Error {
  using Error::Error;
};
struct BadUtil : Error {
  using Error::Error;
};
struct CoolingCapacityExceeded : Error {
  using Error::Error;
};
struct InfeasibleRate : Error {
  using Error::Error;
};
struct InfeasibleProfile : Error {
  using Error::Error;
};

// Game / solvers
struct NoFeasibleStrategy : Error {
  using Error::Error;
};
struct TooLarge : Error {
  using Error::Error;
};
struct SolverBudgetExceeded : Error {
  using Error::Error;
};

// DRL
struct NonFiniteParams : Error {
  using Error::Error;
};
struct MissingCheckpoint : Error {
  using Error::Error;
};

// Harness
struct IoError : Error {
  using Error::Error;
};

}  // namespace geosched
