#include "lkl/target_family.hpp"

#include <algorithm>
#include <cmath>

#include "lkl/error.hpp"

namespace lkl {

SupportHint SupportHint::merged(const SupportHint& other) const {
  if (center_lo.size() != other.center_lo.size()) {
    throw InvalidArgument("cannot merge support hints of different dimension");
  }
  SupportHint out = *this;
  for (std::size_t k = 0; k < center_lo.size(); ++k) {
    out.center_lo[k] = std::min(center_lo[k], other.center_lo[k]);
    out.center_hi[k] = std::max(center_hi[k], other.center_hi[k]);
  }
  out.max_scale = std::max(max_scale, other.max_scale);
  return out;
}

double TargetFamily::dt_density(double t, std::span<const double> x) const {
  const double dlog = dt_log_density(t, x);
  if (dlog == 0.0) return 0.0;
  return std::exp(log_density(t, x)) * dlog;
}

std::vector<double> TargetFamily::grad_log_density(
    double t, std::span<const double> x) const {
  std::vector<double> g(dimension());
  grad_log_density(t, x, g);
  return g;
}

double TargetFamily::density(double t, std::span<const double> x) const {
  return std::exp(log_density(t, x));
}

void FlippedScore::grad_log_density(double t, std::span<const double> x,
                                    std::span<double> out) const {
  inner_->grad_log_density(t, x, out);
  for (double& g : out) g = -g;
}

}  // namespace lkl
