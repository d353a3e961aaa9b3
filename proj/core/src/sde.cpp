#include "lkl/sde.hpp"

#include <cmath>
#include <sstream>

#include "lkl/error.hpp"
#include "lkl/fokker_planck.hpp"
#include "lkl/parallel.hpp"
#include "lkl/philox.hpp"

namespace lkl {

namespace {

// Writes out.size() normals for (step, stream) into out. Normal j comes from
// block j / 4, word pair (j % 4) / 2; unused pairs are not transformed.
void draw_normals(std::uint64_t seed, std::uint64_t step, std::uint64_t stream,
                  std::span<double> out) {
  const Philox4x64::Key key{seed, 0};
  const std::size_t n = out.size();
  for (std::size_t block = 0; block * 4 < n; ++block) {
    const auto w = Philox4x64::generate({step, stream, block, 0}, key);
    for (std::size_t pair = 0; pair < 2 && block * 4 + pair * 2 < n; ++pair) {
      const auto z = box_muller(w[2 * pair], w[2 * pair + 1]);
      const std::size_t j = block * 4 + pair * 2;
      out[j] = z[0];
      if (j + 1 < n) out[j + 1] = z[1];
    }
  }
}

}  // namespace

ParticleEnsemble sample_gaussian_ensemble(std::size_t count,
                                          std::span<const double> mean,
                                          double variance, std::uint64_t seed,
                                          double time,
                                          std::uint64_t stream_base) {
  if (count == 0) throw InvalidArgument("ensemble needs at least one particle");
  if (mean.empty()) throw InvalidArgument("ensemble dimension must be >= 1");
  if (!(variance > 0.0)) throw InvalidArgument("ensemble variance must be > 0");
  ParticleEnsemble e;
  e.dimension = mean.size();
  e.positions.resize(count * e.dimension);
  e.time = time;
  e.seed = seed;
  e.stream_base = stream_base;
  e.step = 1;
  const double sd = std::sqrt(variance);
  for (std::size_t i = 0; i < count; ++i) {
    std::span<double> x(e.positions.data() + i * e.dimension, e.dimension);
    draw_normals(seed, 0, stream_base + i, x);
    for (std::size_t k = 0; k < e.dimension; ++k) x[k] = mean[k] + sd * x[k];
  }
  return e;
}

ParticleEnsemble em_step(const ParticleEnsemble& e, const TargetFamily& family,
                         double dt, const EmOptions& options) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("em_step: dt must be positive");
  }
  if (!(options.diffusion_coefficient > 0.0)) {
    throw InvalidArgument("em_step: diffusion coefficient must be positive");
  }
  if (family.dimension() != e.dimension) {
    throw InvalidArgument("em_step: family and ensemble dimension differ");
  }
  ParticleEnsemble next = e;
  next.time = e.time + dt;
  next.step = e.step + 1;
  const std::size_t d = e.dimension;
  const double noise_scale = std::sqrt(options.diffusion_coefficient * dt);

  parallel_for(e.size(), options.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> drift(d);
    std::vector<double> xi(d);
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = e.position(i);
      family.grad_log_density(e.time, x, drift);
      for (std::size_t k = 0; k < d; ++k) {
        if (!std::isfinite(drift[k])) {
          std::ostringstream os;
          os.precision(17);
          os << "em_step: non-finite drift at particle " << i << ", position (";
          for (std::size_t j = 0; j < d; ++j) os << (j ? ", " : "") << x[j];
          os << "), t=" << e.time;
          throw NumericalError(os.str());
        }
      }
      draw_normals(e.seed, e.step, e.stream_base + i, xi);
      double* out = next.positions.data() + i * d;
      for (std::size_t k = 0; k < d; ++k) {
        out[k] = x[k] + drift[k] * dt + noise_scale * xi[k];
      }
    }
  });
  return next;
}

std::vector<ParticleEnsemble> simulate(const ParticleEnsemble& e0,
                                       const TargetFamily& family, double t0,
                                       double t1,
                                       const SimulateOptions& options) {
  const auto checkpoints = validated_checkpoints(t0, t1, options.checkpoints);
  if (!(options.dt > 0.0)) throw InvalidArgument("simulate: dt must be positive");
  std::vector<ParticleEnsemble> out;
  out.reserve(checkpoints.size());
  ParticleEnsemble e = e0;
  e.time = t0;
  for (double target : checkpoints) {
    while (e.time < target) {
      double step = options.dt;
      bool lands = false;
      if (target - e.time <= step * (1.0 + 1e-9)) {
        step = target - e.time;
        lands = true;
      }
      e = em_step(e, family, step, options.em);
      if (lands) e.time = target;
    }
    out.push_back(e);
  }
  return out;
}

Histogram histogram_density(const ParticleEnsemble& e, const Grid& grid) {
  if (e.dimension != grid.dimension()) {
    throw InvalidArgument("histogram: ensemble and grid dimension differ");
  }
  const std::size_t n = e.size();
  std::vector<std::size_t> counts(grid.cell_count(), 0);
  std::size_t outside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = grid.locate(e.position(i));
    if (c == Grid::npos) {
      ++outside;
    } else {
      ++counts[c];
    }
  }
  std::vector<double> values(grid.cell_count());
  const double scale =
      n ? 1.0 / (static_cast<double>(n) * grid.cell_volume()) : 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    values[c] = static_cast<double>(counts[c]) * scale;
  }
  Histogram h{GridDensity(grid, std::move(values), e.time), outside,
              n ? static_cast<double>(outside) / static_cast<double>(n) : 0.0,
              false, std::move(counts)};
  h.flagged = h.out_of_domain_fraction > kOutOfDomainFlag;
  return h;
}

MeanEstimate ensemble_mean(const ParticleEnsemble& e) {
  const std::size_t n = e.size();
  const std::size_t d = e.dimension;
  MeanEstimate m{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  if (n == 0) return m;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) m.mean[k] += e.positions[i * d + k];
  }
  for (double& v : m.mean) v /= static_cast<double>(n);
  if (n < 2) return m;
  std::vector<double> ss(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double dx = e.positions[i * d + k] - m.mean[k];
      ss[k] += dx * dx;
    }
  }
  for (std::size_t k = 0; k < d; ++k) {
    m.standard_error[k] =
        std::sqrt(ss[k] / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return m;
}

}  // namespace lkl
