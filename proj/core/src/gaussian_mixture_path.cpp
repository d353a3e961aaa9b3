#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lkl/error.hpp"
#include "lkl/target_family.hpp"

namespace lkl {

namespace {
constexpr double kWeightSumTolerance = 1e-12;
}

GaussianMixturePath::GaussianMixturePath(
    std::vector<MixtureComponent> components, double var)
    : components_(std::move(components)), var_(var), dimension_(0) {
  if (components_.empty()) {
    throw InvalidArgument("gaussian mixture path: empty component list");
  }
  if (!(var_ > 0.0) || !std::isfinite(var_)) {
    throw InvalidArgument("gaussian mixture path: variance must be positive");
  }
  dimension_ = components_.front().mean_start.size();
  if (dimension_ == 0) {
    throw InvalidArgument("gaussian mixture path: dimension must be >= 1");
  }
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) {
      throw InvalidArgument("gaussian mixture path: weights must be positive");
    }
    if (c.mean_start.size() != dimension_ || c.mean_end.size() != dimension_) {
      throw InvalidArgument(
          "gaussian mixture path: component means differ in dimension");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw InvalidArgument("gaussian mixture path: weights must sum to 1");
  }
}

void GaussianMixturePath::component_mean(const MixtureComponent& c, double t,
                                         std::span<double> out) const {
  const double u = c.schedule.weight(t);
  for (std::size_t k = 0; k < dimension_; ++k) {
    out[k] = c.mean_start[k] + (c.mean_end[k] - c.mean_start[k]) * u;
  }
}

void GaussianMixturePath::component_mean_rate(const MixtureComponent& c,
                                              double t,
                                              std::span<double> out) const {
  const double du = c.schedule.weight_rate(t);
  for (std::size_t k = 0; k < dimension_; ++k) {
    out[k] = (c.mean_end[k] - c.mean_start[k]) * du;
  }
}

double GaussianMixturePath::responsibilities(double t,
                                             std::span<const double> x,
                                             std::vector<double>& resp) const {
  const double d = static_cast<double>(dimension_);
  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi * var_);
  resp.resize(components_.size());
  std::vector<double> m(dimension_);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < components_.size(); ++j) {
    component_mean(components_[j], t, m);
    double r2 = 0.0;
    for (std::size_t k = 0; k < dimension_; ++k) {
      const double dx = x[k] - m[k];
      r2 += dx * dx;
    }
    resp[j] = std::log(components_[j].weight) + log_norm - 0.5 * r2 / var_;
    peak = std::max(peak, resp[j]);
  }
  double sum = 0.0;
  for (double& r : resp) {
    r = std::exp(r - peak);
    sum += r;
  }
  for (double& r : resp) r /= sum;
  return peak + std::log(sum);
}

double GaussianMixturePath::log_density(double t,
                                        std::span<const double> x) const {
  std::vector<double> resp;
  return responsibilities(t, x, resp);
}

void GaussianMixturePath::grad_log_density(double t,
                                           std::span<const double> x,
                                           std::span<double> out) const {
  std::vector<double> resp;
  responsibilities(t, x, resp);
  std::vector<double> m(dimension_);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < components_.size(); ++j) {
    component_mean(components_[j], t, m);
    for (std::size_t k = 0; k < dimension_; ++k) {
      out[k] -= resp[j] * (x[k] - m[k]) / var_;
    }
  }
}

double GaussianMixturePath::dt_log_density(double t,
                                           std::span<const double> x) const {
  std::vector<double> resp;
  responsibilities(t, x, resp);
  std::vector<double> m(dimension_);
  std::vector<double> dm(dimension_);
  double total = 0.0;
  for (std::size_t j = 0; j < components_.size(); ++j) {
    component_mean_rate(components_[j], t, dm);
    if (std::all_of(dm.begin(), dm.end(), [](double v) { return v == 0.0; })) {
      continue;
    }
    component_mean(components_[j], t, m);
    double dot = 0.0;
    for (std::size_t k = 0; k < dimension_; ++k) dot += (x[k] - m[k]) * dm[k];
    total += resp[j] * dot / var_;
  }
  return total;
}

SupportHint GaussianMixturePath::support(double t0, double t1) const {
  SupportHint hint;
  hint.center_lo.assign(dimension_, std::numeric_limits<double>::infinity());
  hint.center_hi.assign(dimension_, -std::numeric_limits<double>::infinity());
  std::vector<double> m(dimension_);
  for (const auto& c : components_) {
    for (double t : {t0, t1}) {
      component_mean(c, t, m);
      for (std::size_t k = 0; k < dimension_; ++k) {
        hint.center_lo[k] = std::min(hint.center_lo[k], m[k]);
        hint.center_hi[k] = std::max(hint.center_hi[k], m[k]);
      }
    }
  }
  hint.max_scale = std::sqrt(var_);
  return hint;
}

std::shared_ptr<const GaussianMixturePath> make_gaussian_mixture_path(
    std::vector<MixtureComponent> components, double s_sq) {
  return std::make_shared<const GaussianMixturePath>(std::move(components),
                                                     s_sq);
}

}  // namespace lkl
