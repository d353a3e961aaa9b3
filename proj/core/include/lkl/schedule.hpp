#pragma once

namespace lkl {

enum class Interpolation { kLinear, kSmoothstep };

// Maps time onto an interpolation weight u(t) in [0, 1]. Before `start` the
// weight is 0, after `end` it is 1; the derivative is zero outside the
// interval. Smoothstep (3s^2 - 2s^3) is C^1 across the endpoints, linear is
// only C^1 on the open interval.
class Schedule {
 public:
  Schedule() = default;
  Schedule(Interpolation kind, double start, double end);

  double weight(double t) const;
  double weight_rate(double t) const;

  Interpolation kind() const noexcept { return kind_; }
  double start() const noexcept { return start_; }
  double end() const noexcept { return end_; }

  // True when u is constant on [t0, t1], i.e. the interval does not
  // intersect the open ramp (start, end).
  bool constant_on(double t0, double t1) const noexcept;

 private:
  Interpolation kind_ = Interpolation::kSmoothstep;
  double start_ = 0.0;
  double end_ = 1.0;
};

}  // namespace lkl
