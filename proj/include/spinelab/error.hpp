#pragma once

#include <stdexcept>
#include <string>

namespace spinelab {

// Malformed model file or a model that violates its invariants.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iteration caps, step-size underflow, residual checks that fail.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A simulated path exceeded its event budget.
class EventCapError : public std::runtime_error {
 public:
  EventCapError(const std::string& what, double time_reached)
      : std::runtime_error(what), time_reached_(time_reached) {}
  double time_reached() const noexcept { return time_reached_; }

 private:
  double time_reached_;
};

}  // namespace spinelab
