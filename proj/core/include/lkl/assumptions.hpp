#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lkl/target_family.hpp"

namespace lkl {

// Runtime probes of the four regularity conditions on a target family:
// C^1 differentiability, Lipschitz gradient of p_t, quadratic growth of
// d/dt p_t and uniform dissipativity of the score.
//
// Every result is a statement about the probe set only. The conditions are
// global in (t, x) and no finite scan certifies them; the numbers here are
// estimates (Lipschitz constants are lower bounds on the true constant).

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dimension() const { return lo.size(); }
  static Box symmetric(std::size_t dimension, double half_width);
};

struct ProbeOptions {
  std::size_t lattice_per_axis = 32;
  std::size_t random_probes = 1000;
  std::uint64_t seed = 20250101;
  std::size_t workers = 1;
};

// Probe points, row-major (count x dimension).
struct ProbeSet {
  std::size_t dimension = 0;
  std::vector<double> points;

  std::size_t size() const { return dimension ? points.size() / dimension : 0; }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * dimension, dimension};
  }
};

// Cell-centred lattice (lattice_per_axis per axis) followed by seeded
// Halton points with a random rotation, all inside the box.
ProbeSet make_probes(const Box& box, const ProbeOptions& options = {});
ProbeSet probes_from_points(std::size_t dimension, std::vector<double> points);

struct ViolationWitness {
  double t = 0.0;
  std::vector<double> x;
  double lhs = 0.0;  // -x . grad log p_t(x)
  double rhs = 0.0;  // a |x|^2 - b_max
};

struct DissipativityReport {
  double a = 0.0;              // the requested rate
  double b = 0.0;              // smallest b >= 0 making the bound hold at a
  double b_max = 0.0;          // largest slack accepted
  double a_max = 0.0;          // largest a with smallest b <= b_max
  double a_zero_slack = 0.0;   // largest a that needs no slack (may be <= 0)
  std::optional<ViolationWitness> violation;
};

struct DissipativityOptions {
  double target_a = 1.0;
  // Unset: 0.5 * target_a * max |x|^2 over the probes.
  std::optional<double> b_max;
};

DissipativityReport check_dissipativity(const TargetFamily& family,
                                        const ProbeSet& probes,
                                        std::span<const double> times,
                                        const DissipativityOptions& options,
                                        std::size_t workers = 1);

// Re-evaluates the dissipativity inequality at a witness.
bool reproduces_violation(const TargetFamily& family,
                          const ViolationWitness& witness, double a,
                          double b_max);

// max over probe pairs (same t) of |grad p_t(x) - grad p_t(y)| / |x - y|,
// with grad p = p grad log p.
double check_lipschitz(const TargetFamily& family, const ProbeSet& probes,
                       std::span<const double> times,
                       std::size_t workers = 1);

// Same difference quotient for the score grad log p_t.
double check_score_lipschitz(const TargetFamily& family,
                             const ProbeSet& probes,
                             std::span<const double> times,
                             std::size_t workers = 1);

// Probes closer than this to the origin are excluded from the growth ratio.
inline constexpr double kGrowthExclusionRadius = 1e-3;

// max over probes of |d/dt p_t(x)| / |x|^2. Throws InvalidArgument if any
// probe lies within kGrowthExclusionRadius of the origin.
double check_growth(const TargetFamily& family, const ProbeSet& probes,
                    std::span<const double> times, std::size_t workers = 1);

// Drops probes inside the exclusion ball, then calls check_growth.
ProbeSet without_origin_ball(const ProbeSet& probes,
                             double radius = kGrowthExclusionRadius);

// max over times of |d/dt p_t(0)|. Nonzero means no finite growth constant
// exists at the origin.
double origin_time_sensitivity(const TargetFamily& family,
                               std::span<const double> times);

struct DifferentiabilityReport {
  double max_grad_error = 0.0;  // vs 5-point differences of log p
  double max_dt_error = 0.0;    // vs central differences in t
};

// Errors are |numeric - analytic| / max(1, |analytic|).
DifferentiabilityReport check_differentiability(
    const TargetFamily& family, const ProbeSet& probes,
    std::span<const double> times, double space_step = 1e-3,
    double time_step = 1e-5);

struct AssumptionReport {
  Box probe_box;
  std::vector<double> times;
  std::size_t probe_count = 0;

  double lipschitz_estimate = 0.0;
  double score_lipschitz_estimate = 0.0;
  double growth_constant = 0.0;
  double origin_dt_density = 0.0;
  DissipativityReport dissipativity;
  DifferentiabilityReport differentiability;

  bool has_violation() const { return dissipativity.violation.has_value(); }
};

AssumptionReport check_assumptions(const TargetFamily& family, const Box& box,
                                   std::span<const double> times,
                                   const DissipativityOptions& dissipativity,
                                   const ProbeOptions& probes = {});

}  // namespace lkl
