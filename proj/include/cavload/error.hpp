#pragma once

#include <stdexcept>
#include <string>

namespace cavload {

// Raised when a numerical routine cannot meet its contract (step underflow,
// quadrature budget exhausted, flat objective).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class StepUnderflow : public NumericError {
 public:
  StepUnderflow(double t, double h)
      : NumericError("ODE step size underflow at t=" + std::to_string(t) +
                     " (h=" + std::to_string(h) + ")"),
        time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class DegenerateObjective : public NumericError {
 public:
  explicit DegenerateObjective(const std::string& what) : NumericError(what) {}
};

// Malformed user configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& why)
      : std::invalid_argument(field + ": " + why), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace cavload
