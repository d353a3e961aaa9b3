#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lkl/target_family.hpp"

namespace lkl {

// Closed-form ground truth for Gaussian flows. With target
// p_t = N(m(t), s^2(t) I) and q_0 = N(mu_0, sigma_0^2 I) the Fokker-Planck
// flow keeps q_t = N(mu(t), sigma^2(t) I) with
//
//   mu'      = -(mu - m) / s^2
//   sigma^2' = -2 sigma^2 / s^2 + 2
//
// and every term of the dissipation identity is an elementary function of
// (mu, sigma^2, m, s^2, m', s^2').
struct GaussianState {
  double t = 0.0;
  std::vector<double> mu;
  double sigma_sq = 1.0;
  std::vector<double> m;
  double s_sq = 1.0;
  std::vector<double> m_dot;
  double s_sq_dot = 0.0;

  std::size_t dimension() const { return mu.size(); }
};

// Pairs the law N(mu, sigma_sq I) at time t with the path's target fields.
GaussianState make_gaussian_state(const GaussianPath& path, double t,
                                  std::vector<double> mu, double sigma_sq);

// Advances the moments to t1: exact exponential relaxation when the target
// is constant on [state0.t, t1], classical RK4 with steps <= dt_ode
// otherwise.
GaussianState evolve_moments(const GaussianState& state0,
                             const GaussianPath& path, double t1,
                             double dt_ode);

// RK4 regardless of whether the target moves.
GaussianState evolve_moments_rk4(const GaussianState& state0,
                                 const GaussianPath& path, double t1,
                                 double dt_ode);

// d/2 (sigma^2/s^2 - 1 - log(sigma^2/s^2)) + |mu - m|^2 / (2 s^2)
double kl_gaussian(const GaussianState& s);
// d sigma^2 (1/s^2 - 1/sigma^2)^2 + |mu - m|^2 / s^4
double fisher_gaussian(const GaussianState& s);
// -d s^2'/(2 s^2) + s^2' (d sigma^2 + |mu - m|^2)/(2 s^4) + (mu - m).m'/s^2
double dt_term_gaussian(const GaussianState& s);
// d/dt KL by the chain rule through the moment ODE and the path rates.
double kl_rate_gaussian(const GaussianState& s);

enum class DerivativeMode { kFiniteDifference, kChainRule };

struct OracleSample {
  double t = 0.0;
  double kl = 0.0;
  double fisher = 0.0;
  double dt_term = 0.0;
  std::optional<double> kl_rate;   // d/dt KL (FD: interior points only)
  std::optional<double> residual;  // kl_rate + fisher + dt_term
};

// Evolves state0 through t_grid (strictly increasing, >= 3 points, starting
// at or after state0.t) and evaluates the identity at each point.
std::vector<OracleSample> identity_residual_gaussian(
    const GaussianPath& path, const GaussianState& state0,
    std::span<const double> t_grid, double dt_ode, DerivativeMode mode);

double max_abs_residual(const std::vector<OracleSample>& samples);

}  // namespace lkl
