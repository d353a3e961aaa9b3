#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lkl/grid.hpp"
#include "lkl/target_family.hpp"

namespace lkl {

// Snapshot of N particles in R^d at a common time.
//
// Particle i draws its noise for step s from the Philox block addressed by
// key (seed, 0) and counter (s, stream_base + i, block, 0), so trajectories
// are a pure function of (seed, N, dt, schedule) and do not depend on how
// the particles are split across threads.
struct ParticleEnsemble {
  std::size_t dimension = 1;
  std::vector<double> positions;  // row-major, size() * dimension
  double time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_base = 0;
  std::uint64_t step = 0;  // counter of the next step to draw

  std::size_t size() const { return dimension ? positions.size() / dimension : 0; }
  std::span<const double> position(std::size_t i) const {
    return {positions.data() + i * dimension, dimension};
  }
};

// Draws N particles from N(mean, variance I) using counter step 0; the
// returned ensemble starts stepping at counter 1.
ParticleEnsemble sample_gaussian_ensemble(std::size_t count,
                                          std::span<const double> mean,
                                          double variance, std::uint64_t seed,
                                          double time,
                                          std::uint64_t stream_base = 0);

struct EmOptions {
  // D in dX = grad log p dt + sqrt(D) dW. D = 2 makes the law of X_t solve
  // the Fokker-Planck equation with unit Laplacian; D = 1 is the other
  // convention, kept for comparison.
  double diffusion_coefficient = 2.0;
  std::size_t workers = 1;
};

// x <- x + grad log p_t(x) dt + sqrt(D dt) xi. Throws NumericalError naming
// the particle when the drift is not finite.
ParticleEnsemble em_step(const ParticleEnsemble& e, const TargetFamily& family,
                         double dt, const EmOptions& options = {});

struct SimulateOptions {
  double dt = 1e-3;
  std::vector<double> checkpoints;  // empty means {t1}
  EmOptions em;
};

std::vector<ParticleEnsemble> simulate(const ParticleEnsemble& e0,
                                       const TargetFamily& family, double t0,
                                       double t1,
                                       const SimulateOptions& options);

struct Histogram {
  GridDensity density;
  std::size_t out_of_domain = 0;
  double out_of_domain_fraction = 0.0;
  bool flagged = false;  // out-of-domain fraction above 0.1%
  // Particle count per cell, same layout as density.values.
  std::vector<std::size_t> counts;
};

inline constexpr double kOutOfDomainFlag = 1e-3;

// Cell counts divided by N h^d; mass equals the in-domain fraction.
Histogram histogram_density(const ParticleEnsemble& e, const Grid& grid);

// Sample mean and its standard error along each axis.
struct MeanEstimate {
  std::vector<double> mean;
  std::vector<double> standard_error;
};
MeanEstimate ensemble_mean(const ParticleEnsemble& e);

}  // namespace lkl
