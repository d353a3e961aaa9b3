#include <algorithm>
#include <cmath>
#include <numbers>

#include "lkl/error.hpp"
#include "lkl/target_family.hpp"

namespace lkl {

GaussianPath::GaussianPath(std::vector<double> mean_start,
                           std::vector<double> mean_end, double var_start,
                           double var_end, Schedule schedule)
    : mean_start_(std::move(mean_start)),
      mean_end_(std::move(mean_end)),
      var_start_(var_start),
      var_end_(var_end),
      schedule_(schedule) {
  if (mean_start_.empty()) {
    throw InvalidArgument("gaussian path needs dimension >= 1");
  }
  if (mean_start_.size() != mean_end_.size()) {
    throw InvalidArgument("gaussian path: start and end means differ in size");
  }
  if (!(var_start_ > 0.0) || !(var_end_ > 0.0) || !std::isfinite(var_start_) ||
      !std::isfinite(var_end_)) {
    throw InvalidArgument("gaussian path: variances must be positive");
  }
  for (std::size_t k = 0; k < mean_start_.size(); ++k) {
    if (!std::isfinite(mean_start_[k]) || !std::isfinite(mean_end_[k])) {
      throw InvalidArgument("gaussian path: means must be finite");
    }
  }
}

std::vector<double> GaussianPath::mean(double t) const {
  const double u = schedule_.weight(t);
  std::vector<double> m(mean_start_.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    m[k] = mean_start_[k] + (mean_end_[k] - mean_start_[k]) * u;
  }
  return m;
}

std::vector<double> GaussianPath::mean_rate(double t) const {
  const double du = schedule_.weight_rate(t);
  std::vector<double> m(mean_start_.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    m[k] = (mean_end_[k] - mean_start_[k]) * du;
  }
  return m;
}

double GaussianPath::variance(double t) const {
  return var_start_ + (var_end_ - var_start_) * schedule_.weight(t);
}

double GaussianPath::variance_rate(double t) const {
  return (var_end_ - var_start_) * schedule_.weight_rate(t);
}

bool GaussianPath::is_static() const {
  return var_start_ == var_end_ && mean_start_ == mean_end_;
}

bool GaussianPath::constant_on(double t0, double t1) const {
  return is_static() || schedule_.constant_on(t0, t1);
}

double GaussianPath::log_density(double t, std::span<const double> x) const {
  const double u = schedule_.weight(t);
  const double v = var_start_ + (var_end_ - var_start_) * u;
  double r2 = 0.0;
  for (std::size_t k = 0; k < mean_start_.size(); ++k) {
    const double dx = x[k] - (mean_start_[k] + (mean_end_[k] - mean_start_[k]) * u);
    r2 += dx * dx;
  }
  const double d = static_cast<double>(mean_start_.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * v) - 0.5 * r2 / v;
}

void GaussianPath::grad_log_density(double t, std::span<const double> x,
                                    std::span<double> out) const {
  const double u = schedule_.weight(t);
  const double v = var_start_ + (var_end_ - var_start_) * u;
  for (std::size_t k = 0; k < mean_start_.size(); ++k) {
    const double m = mean_start_[k] + (mean_end_[k] - mean_start_[k]) * u;
    out[k] = -(x[k] - m) / v;
  }
}

// d/dt log p = -d v'/(2v) + |x-m|^2 v'/(2v^2) + (x-m).m'/v
double GaussianPath::dt_log_density(double t,
                                    std::span<const double> x) const {
  const double u = schedule_.weight(t);
  const double du = schedule_.weight_rate(t);
  const double v = var_start_ + (var_end_ - var_start_) * u;
  const double dv = (var_end_ - var_start_) * du;
  double r2 = 0.0;
  double drift = 0.0;
  for (std::size_t k = 0; k < mean_start_.size(); ++k) {
    const double span = mean_end_[k] - mean_start_[k];
    const double dx = x[k] - (mean_start_[k] + span * u);
    r2 += dx * dx;
    drift += dx * span * du;
  }
  const double d = static_cast<double>(mean_start_.size());
  return -0.5 * d * dv / v + 0.5 * r2 * dv / (v * v) + drift / v;
}

SupportHint GaussianPath::support(double t0, double t1) const {
  // u is monotone, so extremes of m and s^2 sit at the interval ends.
  SupportHint hint;
  const auto a = mean(t0);
  const auto b = mean(t1);
  hint.center_lo.resize(a.size());
  hint.center_hi.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    hint.center_lo[k] = std::min(a[k], b[k]);
    hint.center_hi[k] = std::max(a[k], b[k]);
  }
  hint.max_scale = std::sqrt(std::max(variance(t0), variance(t1)));
  return hint;
}

std::shared_ptr<const GaussianPath> make_gaussian_path(
    std::vector<double> m0, std::vector<double> m1, double s0sq, double s1sq,
    Schedule schedule) {
  return std::make_shared<const GaussianPath>(std::move(m0), std::move(m1),
                                              s0sq, s1sq, schedule);
}

}  // namespace lkl
