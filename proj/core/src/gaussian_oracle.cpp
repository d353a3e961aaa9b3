#include "lkl/gaussian_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "lkl/error.hpp"

namespace lkl {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

void refresh_target(GaussianState& s, const GaussianPath& path) {
  s.m = path.mean(s.t);
  s.s_sq = path.variance(s.t);
  s.m_dot = path.mean_rate(s.t);
  s.s_sq_dot = path.variance_rate(s.t);
}

struct Moments {
  std::vector<double> mu;
  double var;
};

Moments rhs(const GaussianPath& path, double t, const Moments& x) {
  const auto m = path.mean(t);
  const double v = path.variance(t);
  Moments d{std::vector<double>(x.mu.size()), 0.0};
  for (std::size_t k = 0; k < x.mu.size(); ++k) d.mu[k] = -(x.mu[k] - m[k]) / v;
  d.var = -2.0 * x.var / v + 2.0;
  return d;
}

Moments axpy(const Moments& x, double a, const Moments& dx) {
  Moments y = x;
  for (std::size_t k = 0; k < y.mu.size(); ++k) y.mu[k] += a * dx.mu[k];
  y.var += a * dx.var;
  return y;
}

void validate(const GaussianState& s) {
  if (s.mu.empty() || s.m.size() != s.mu.size()) {
    throw InvalidArgument("gaussian state: inconsistent dimensions");
  }
  if (!(s.sigma_sq > 0.0) || !(s.s_sq > 0.0)) {
    throw InvalidArgument("gaussian state: variances must be positive");
  }
}

void check_evolve_args(const GaussianState& state0, double t1, double dt_ode) {
  validate(state0);
  if (t1 < state0.t) throw InvalidArgument("evolve_moments: t1 < state.t");
  if (!(dt_ode > 0.0)) throw InvalidArgument("evolve_moments: dt_ode <= 0");
}

}  // namespace

GaussianState make_gaussian_state(const GaussianPath& path, double t,
                                  std::vector<double> mu, double sigma_sq) {
  if (mu.size() != path.dimension()) {
    throw InvalidArgument("gaussian state: mean dimension mismatch");
  }
  GaussianState s;
  s.t = t;
  s.mu = std::move(mu);
  s.sigma_sq = sigma_sq;
  refresh_target(s, path);
  validate(s);
  return s;
}

GaussianState evolve_moments_rk4(const GaussianState& state0,
                                 const GaussianPath& path, double t1,
                                 double dt_ode) {
  check_evolve_args(state0, t1, dt_ode);
  GaussianState out = state0;
  out.t = t1;
  const double span = t1 - state0.t;
  if (span > 0.0) {
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt_ode));
    const double h = span / static_cast<double>(steps);
    Moments x{state0.mu, state0.sigma_sq};
    for (std::size_t i = 0; i < steps; ++i) {
      const double t = state0.t + static_cast<double>(i) * h;
      const Moments k1 = rhs(path, t, x);
      const Moments k2 = rhs(path, t + 0.5 * h, axpy(x, 0.5 * h, k1));
      const Moments k3 = rhs(path, t + 0.5 * h, axpy(x, 0.5 * h, k2));
      const Moments k4 = rhs(path, t + h, axpy(x, h, k3));
      for (std::size_t k = 0; k < x.mu.size(); ++k) {
        x.mu[k] += h / 6.0 * (k1.mu[k] + 2 * k2.mu[k] + 2 * k3.mu[k] + k4.mu[k]);
      }
      x.var += h / 6.0 * (k1.var + 2 * k2.var + 2 * k3.var + k4.var);
    }
    out.mu = std::move(x.mu);
    out.sigma_sq = x.var;
  }
  refresh_target(out, path);
  return out;
}

GaussianState evolve_moments(const GaussianState& state0,
                             const GaussianPath& path, double t1,
                             double dt_ode) {
  check_evolve_args(state0, t1, dt_ode);
  if (!path.constant_on(state0.t, t1)) {
    return evolve_moments_rk4(state0, path, t1, dt_ode);
  }
  GaussianState out = state0;
  out.t = t1;
  const double span = t1 - state0.t;
  const auto m = path.mean(t1);
  const double v = path.variance(t1);
  const double decay = std::exp(-span / v);
  for (std::size_t k = 0; k < out.mu.size(); ++k) {
    out.mu[k] = m[k] + (state0.mu[k] - m[k]) * decay;
  }
  out.sigma_sq = v + (state0.sigma_sq - v) * decay * decay;
  refresh_target(out, path);
  return out;
}

double kl_gaussian(const GaussianState& s) {
  const double d = static_cast<double>(s.dimension());
  const double ratio = s.sigma_sq / s.s_sq;
  return 0.5 * d * (ratio - 1.0 - std::log(ratio)) +
         sq_dist(s.mu, s.m) / (2.0 * s.s_sq);
}

double fisher_gaussian(const GaussianState& s) {
  const double d = static_cast<double>(s.dimension());
  const double gap = 1.0 / s.s_sq - 1.0 / s.sigma_sq;
  return d * s.sigma_sq * gap * gap + sq_dist(s.mu, s.m) / (s.s_sq * s.s_sq);
}

double dt_term_gaussian(const GaussianState& s) {
  const double d = static_cast<double>(s.dimension());
  double drift = 0.0;
  for (std::size_t k = 0; k < s.mu.size(); ++k) {
    drift += (s.mu[k] - s.m[k]) * s.m_dot[k];
  }
  return -0.5 * d * s.s_sq_dot / s.s_sq +
         0.5 * s.s_sq_dot * (d * s.sigma_sq + sq_dist(s.mu, s.m)) /
             (s.s_sq * s.s_sq) +
         drift / s.s_sq;
}

// KL(mu, sigma^2, m, s^2) differentiated along
//   mu' = -(mu - m)/s^2, sigma^2' = -2 sigma^2/s^2 + 2, m', s^2' from the path.
double kl_rate_gaussian(const GaussianState& s) {
  const double d = static_cast<double>(s.dimension());
  const double v = s.s_sq;
  const double r2 = sq_dist(s.mu, s.m);
  double rate = 0.0;
  for (std::size_t k = 0; k < s.mu.size(); ++k) {
    const double delta = s.mu[k] - s.m[k];
    const double mu_dot = -delta / v;
    rate += delta / v * (mu_dot - s.m_dot[k]);
  }
  const double sigma_dot = -2.0 * s.sigma_sq / v + 2.0;
  rate += 0.5 * d * (1.0 / v - 1.0 / s.sigma_sq) * sigma_dot;
  rate += s.s_sq_dot *
          (0.5 * d * (1.0 / v - s.sigma_sq / (v * v)) - r2 / (2.0 * v * v));
  return rate;
}

std::vector<OracleSample> identity_residual_gaussian(
    const GaussianPath& path, const GaussianState& state0,
    std::span<const double> t_grid, double dt_ode, DerivativeMode mode) {
  if (t_grid.size() < 3) {
    throw InvalidArgument("identity_residual_gaussian: need >= 3 times");
  }
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) {
      throw InvalidArgument(
          "identity_residual_gaussian: times must be strictly increasing");
    }
  }
  if (t_grid.front() < state0.t) {
    throw InvalidArgument("identity_residual_gaussian: grid starts before state");
  }

  std::vector<OracleSample> out;
  out.reserve(t_grid.size());
  GaussianState s = state0;
  for (double t : t_grid) {
    // Evolving from state0 each time keeps exact-mode values free of
    // accumulated rounding.
    s = path.constant_on(state0.t, t) ? evolve_moments(state0, path, t, dt_ode)
                                      : evolve_moments(s, path, t, dt_ode);
    OracleSample o;
    o.t = t;
    o.kl = kl_gaussian(s);
    o.fisher = fisher_gaussian(s);
    o.dt_term = dt_term_gaussian(s);
    if (mode == DerivativeMode::kChainRule) {
      o.kl_rate = kl_rate_gaussian(s);
      o.residual = *o.kl_rate + o.fisher + o.dt_term;
    }
    out.push_back(o);
  }
  if (mode == DerivativeMode::kFiniteDifference) {
    for (std::size_t i = 1; i + 1 < out.size(); ++i) {
      out[i].kl_rate = (out[i + 1].kl - out[i - 1].kl) / (out[i + 1].t - out[i - 1].t);
      out[i].residual = *out[i].kl_rate + out[i].fisher + out[i].dt_term;
    }
  }
  return out;
}

double max_abs_residual(const std::vector<OracleSample>& samples) {
  double m = 0.0;
  for (const auto& s : samples) {
    if (s.residual) m = std::max(m, std::abs(*s.residual));
  }
  return m;
}

}  // namespace lkl
