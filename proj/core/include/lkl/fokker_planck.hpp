#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lkl/grid.hpp"
#include "lkl/target_family.hpp"

namespace lkl {

// Conservative finite-volume discretisation of
//
//   d/dt q = -div(q grad log p_t) + laplace(q)
//
// with exponentially fitted (Chang-Cooper / Scharfetter-Gummel) face fluxes.
// Along each axis the flux through the face between cells i and i+1 is
//
//   F = ( B(-z) q_i - B(z) q_{i+1} ) / h,   z = log p_t(x_{i+1}) - log p_t(x_i)
//
// with the Bernoulli function B(z) = z / (exp(z) - 1). The discrete steady
// state is q_i proportional to p_t(x_i), so a static target discretised at
// cell centres is an exact fixed point. Boundary faces carry zero flux and
// the update telescopes, conserving mass to roundoff. Time stepping is
// explicit Euler.

// Largest admissible explicit step at q.time: the minimum of h^2/(2d),
// h / max|score| over faces, and the bound that keeps every diagonal
// coefficient of the update nonnegative (positivity).
double stability_limit(const GridDensity& q, const TargetFamily& family);

// One explicit step from q.time to q.time + dt. Throws StabilityError when
// dt exceeds stability_limit.
GridDensity fp_step(const GridDensity& q, const TargetFamily& family,
                    double dt);

struct FpSolveOptions {
  // Fixed step; when unset each step uses safety * stability_limit.
  std::optional<double> dt;
  double safety = 0.9;
  // Output times within [t0, t1], nondecreasing. Empty means {t1}.
  std::vector<double> checkpoints;
  // Called after every step with the new state.
  std::function<void(const GridDensity&)> on_step;
};

// Integrates from t0 to the last checkpoint, shortening steps so that each
// checkpoint is hit exactly. Returns one density per checkpoint.
std::vector<GridDensity> fp_solve(const GridDensity& q0,
                                  const TargetFamily& family, double t0,
                                  double t1, const FpSolveOptions& options);

// Throws InvalidArgument unless checkpoints are nondecreasing inside
// [t0, t1]; returns {t1} for an empty list.
std::vector<double> validated_checkpoints(double t0, double t1,
                                          std::vector<double> checkpoints);

}  // namespace lkl
