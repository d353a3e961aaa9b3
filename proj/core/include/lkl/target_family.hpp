#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "lkl/schedule.hpp"

namespace lkl {

// Axis-aligned region that a family's mass effectively occupies over a time
// interval: the range swept by its location parameters plus a scale. Grids
// pad this region by a multiple of `max_scale`.
struct SupportHint {
  std::vector<double> center_lo;
  std::vector<double> center_hi;
  double max_scale = 1.0;

  // Smallest hint containing both.
  SupportHint merged(const SupportHint& other) const;
};

// Time-dependent target density p_t on R^d, given through its logarithm.
//
// Implementations must be pure: every method is a function of (t, x) only, so
// a single instance can be evaluated concurrently from many threads.
//
// dt_density (d/dt p_t) and dt_log_density (d/dt log p_t) are exposed
// separately: the growth condition bounds the former, the dissipation
// identity integrates the latter.
class TargetFamily {
 public:
  virtual ~TargetFamily() = default;

  virtual std::size_t dimension() const = 0;
  virtual double log_density(double t, std::span<const double> x) const = 0;
  virtual void grad_log_density(double t, std::span<const double> x,
                                std::span<double> out) const = 0;
  virtual double dt_log_density(double t, std::span<const double> x) const = 0;
  virtual double dt_density(double t, std::span<const double> x) const;

  virtual SupportHint support(double t0, double t1) const = 0;

  std::vector<double> grad_log_density(double t,
                                       std::span<const double> x) const;
  double density(double t, std::span<const double> x) const;
};

using FamilyPtr = std::shared_ptr<const TargetFamily>;

// Isotropic Gaussian path N(m(t), s^2(t) I) with
//   m(t)   = m0 + (m1 - m0) u(t)
//   s^2(t) = s0sq + (s1sq - s0sq) u(t)
// for a shared schedule u.
class GaussianPath final : public TargetFamily {
 public:
  GaussianPath(std::vector<double> mean_start, std::vector<double> mean_end,
               double var_start, double var_end, Schedule schedule);

  std::size_t dimension() const override { return mean_start_.size(); }
  double log_density(double t, std::span<const double> x) const override;
  void grad_log_density(double t, std::span<const double> x,
                        std::span<double> out) const override;
  double dt_log_density(double t, std::span<const double> x) const override;
  SupportHint support(double t0, double t1) const override;
  using TargetFamily::grad_log_density;

  std::vector<double> mean(double t) const;
  std::vector<double> mean_rate(double t) const;
  double variance(double t) const;
  double variance_rate(double t) const;

  // Neither mean nor variance changes on [t0, t1].
  bool constant_on(double t0, double t1) const;
  bool is_static() const;

  const std::vector<double>& mean_start() const { return mean_start_; }
  const std::vector<double>& mean_end() const { return mean_end_; }
  double var_start() const noexcept { return var_start_; }
  double var_end() const noexcept { return var_end_; }
  const Schedule& schedule() const noexcept { return schedule_; }

 private:
  std::vector<double> mean_start_;
  std::vector<double> mean_end_;
  double var_start_;
  double var_end_;
  Schedule schedule_;
};

std::shared_ptr<const GaussianPath> make_gaussian_path(
    std::vector<double> m0, std::vector<double> m1, double s0sq, double s1sq,
    Schedule schedule = Schedule{});

struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean_start;
  std::vector<double> mean_end;
  Schedule schedule;
};

// Equal-variance isotropic Gaussian mixture with moving component means.
class GaussianMixturePath final : public TargetFamily {
 public:
  GaussianMixturePath(std::vector<MixtureComponent> components, double var);

  std::size_t dimension() const override { return dimension_; }
  double log_density(double t, std::span<const double> x) const override;
  void grad_log_density(double t, std::span<const double> x,
                        std::span<double> out) const override;
  double dt_log_density(double t, std::span<const double> x) const override;
  SupportHint support(double t0, double t1) const override;
  using TargetFamily::grad_log_density;

  const std::vector<MixtureComponent>& components() const {
    return components_;
  }
  double variance() const noexcept { return var_; }

 private:
  // Fills per-component log weights + log kernels and returns log-sum-exp.
  double responsibilities(double t, std::span<const double> x,
                          std::vector<double>& resp) const;
  void component_mean(const MixtureComponent& c, double t,
                      std::span<double> out) const;
  void component_mean_rate(const MixtureComponent& c, double t,
                           std::span<double> out) const;

  std::vector<MixtureComponent> components_;
  double var_;
  std::size_t dimension_;
};

std::shared_ptr<const GaussianMixturePath> make_gaussian_mixture_path(
    std::vector<MixtureComponent> components, double s_sq);

// Wraps a family and negates its score while keeping log_density. This does
// not describe any density; it exists to exercise the assumption checkers'
// violation path.
class FlippedScore final : public TargetFamily {
 public:
  explicit FlippedScore(FamilyPtr inner) : inner_(std::move(inner)) {}

  std::size_t dimension() const override { return inner_->dimension(); }
  double log_density(double t, std::span<const double> x) const override {
    return inner_->log_density(t, x);
  }
  void grad_log_density(double t, std::span<const double> x,
                        std::span<double> out) const override;
  double dt_log_density(double t, std::span<const double> x) const override {
    return inner_->dt_log_density(t, x);
  }
  SupportHint support(double t0, double t1) const override {
    return inner_->support(t0, t1);
  }
  using TargetFamily::grad_log_density;

 private:
  FamilyPtr inner_;
};

}  // namespace lkl
