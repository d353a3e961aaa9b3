#pragma once

#include <stdexcept>
#include <string>

namespace lkl {

// Violated precondition on caller-supplied data (bad constants, bad grids,
// out-of-range checkpoints). Maps to "invalid input" in the CLI.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical computation could not produce a trustworthy value
// (non-finite drift, underflowed target, too much excluded mass).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Explicit time step larger than the scheme admits.
class StabilityError : public std::runtime_error {
 public:
  StabilityError(double requested_dt, double max_dt);

  double requested_dt() const noexcept { return requested_dt_; }
  double max_dt() const noexcept { return max_dt_; }

 private:
  double requested_dt_;
  double max_dt_;
};

}  // namespace lkl
