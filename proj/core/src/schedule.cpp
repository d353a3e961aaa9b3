#include "lkl/schedule.hpp"

#include <cmath>
#include <sstream>

#include "lkl/error.hpp"

namespace lkl {

StabilityError::StabilityError(double requested_dt, double max_dt)
    : std::runtime_error([&] {
        std::ostringstream os;
        os.precision(17);
        os << "time step " << requested_dt
           << " exceeds the stability bound; max admissible dt = " << max_dt;
        return os.str();
      }()),
      requested_dt_(requested_dt),
      max_dt_(max_dt) {}

Schedule::Schedule(Interpolation kind, double start, double end)
    : kind_(kind), start_(start), end_(end) {
  if (!(std::isfinite(start) && std::isfinite(end)) || !(end > start)) {
    throw InvalidArgument("schedule interval must satisfy start < end");
  }
}

double Schedule::weight(double t) const {
  if (t <= start_) return 0.0;
  if (t >= end_) return 1.0;
  const double s = (t - start_) / (end_ - start_);
  if (kind_ == Interpolation::kLinear) return s;
  return s * s * (3.0 - 2.0 * s);
}

double Schedule::weight_rate(double t) const {
  if (t < start_ || t > end_) return 0.0;
  const double span = end_ - start_;
  if (kind_ == Interpolation::kLinear) return 1.0 / span;
  const double s = (t - start_) / span;
  return 6.0 * s * (1.0 - s) / span;
}

bool Schedule::constant_on(double t0, double t1) const noexcept {
  return t1 <= start_ || t0 >= end_;
}

}  // namespace lkl
