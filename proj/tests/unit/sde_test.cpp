#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "lkl/error.hpp"
#include "lkl/sde.hpp"
#include "test_families.hpp"

namespace lkl {
namespace {

double sample_variance(const ParticleEnsemble& e) {
  const auto m = ensemble_mean(e);
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double d = e.position(i)[0] - m.mean[0];
    s += d * d;
  }
  return s / static_cast<double>(e.size() - 1);
}

// Never finite beyond |x| > 3.
class NanBeyond final : public TargetFamily {
 public:
  std::size_t dimension() const override { return 1; }
  double log_density(double, std::span<const double> x) const override { return -0.5 * x[0] * x[0]; }
  void grad_log_density(double, std::span<const double> x, std::span<double> out) const override {
    out[0] = std::abs(x[0]) > 3.0 ? std::numeric_limits<double>::quiet_NaN() : -x[0];
  }
  double dt_log_density(double, std::span<const double>) const override { return 0.0; }
  SupportHint support(double, double) const override { return {{0.0}, {0.0}, 1.0}; }
  using TargetFamily::grad_log_density;
};

TEST(EmStep, OuStationaryVariance) {
  auto p = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const double dt = 1e-3;
  const double mean[] = {0.0};
  auto e = sample_gaussian_ensemble(100000, mean, 1.0, 2024, 0.0);
  SimulateOptions opts;
  opts.dt = dt;
  e = simulate(e, *p, 0.0, 0.5, opts).back();
  // x' = (1 - dt) x + sqrt(2 dt) xi has stationary variance 2 dt / (1 - (1 - dt)^2)
  const double stationary = 2.0 * dt / (1.0 - (1.0 - dt) * (1.0 - dt));
  EXPECT_NEAR(stationary, 1.0 / (1.0 - dt / 2.0), 1e-12);
  const double v = sample_variance(e);
  EXPECT_GE(v, 0.98);
  EXPECT_LE(v, 1.02);
  EXPECT_NEAR(v, stationary, 3.0 * std::sqrt(2.0 / e.size()) * stationary);
}

// Sum of squared increments over 2 D dt is chi^2 with N degrees of freedom.
TEST(EmStep, PureDiffusionIncrementVariance) {
  testing::ZeroDrift flat;
  const std::size_t n = 100000;
  const double dt = 1e-3;
  for (double diffusion : {2.0, 1.0}) {
    const double mean[] = {0.0};
    const auto e0 = sample_gaussian_ensemble(n, mean, 1.0, 5, 0.0);
    EmOptions em;
    em.diffusion_coefficient = diffusion;
    const auto e1 = em_step(e0, flat, dt, em);
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double inc = e1.position(i)[0] - e0.position(i)[0];
      chi2 += inc * inc / (diffusion * dt);
    }
    const double z = (chi2 - n) / std::sqrt(2.0 * n);
    EXPECT_LT(std::abs(z), 2.576) << "D=" << diffusion;
  }
}

TEST(EmStep, BitExactAcrossRunsAndWorkers) {
  auto p = make_gaussian_path({0.0, 1.0}, {1.0, -1.0}, 1.0, 0.5,
                              Schedule(Interpolation::kLinear, 0.0, 1.0));
  const double mean[] = {0.5, 0.5};
  const auto e0 = sample_gaussian_ensemble(5003, mean, 1.2, 77, 0.0);
  SimulateOptions a;
  a.dt = 1e-2;
  a.checkpoints = {0.3, 1.0};
  SimulateOptions b = a;
  b.em.workers = 3;
  const auto ra = simulate(e0, *p, 0.0, 1.0, a);
  const auto ra2 = simulate(e0, *p, 0.0, 1.0, a);
  const auto rb = simulate(e0, *p, 0.0, 1.0, b);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(ra[k].positions, ra2[k].positions);
    EXPECT_EQ(ra[k].positions, rb[k].positions);
    EXPECT_EQ(ra[k].step, rb[k].step);
  }
  EXPECT_EQ(ra[1].time, 1.0);
}

TEST(EmStep, StreamsAreAddressedByIndex) {
  const double mean[] = {0.0};
  const auto full = sample_gaussian_ensemble(10, mean, 1.0, 3, 0.0);
  const auto tail = sample_gaussian_ensemble(4, mean, 1.0, 3, 0.0, 6);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(full.position(6 + i)[0], tail.position(i)[0]);
}

TEST(EmStep, NonFiniteDriftNamesParticle) {
  NanBeyond fam;
  ParticleEnsemble e;
  e.positions = {0.0, 1.0, 4.5, -1.0};
  try {
    em_step(e, fam, 1e-3);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& err) {
    const std::string msg = err.what();
    EXPECT_NE(msg.find("particle 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("4.5"), std::string::npos) << msg;
  }
}

TEST(EmStep, Guards) {
  auto p = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const double mean[] = {0.0};
  const auto e = sample_gaussian_ensemble(3, mean, 1.0, 1, 0.0);
  EXPECT_THROW(em_step(e, *p, 0.0), InvalidArgument);
  EmOptions bad;
  bad.diffusion_coefficient = 0.0;
  EXPECT_THROW(em_step(e, *p, 1e-3, bad), InvalidArgument);
  EXPECT_THROW(sample_gaussian_ensemble(0, mean, 1.0, 1, 0.0), InvalidArgument);
  SimulateOptions so;
  so.checkpoints = {2.0};
  EXPECT_THROW(simulate(e, *p, 0.0, 1.0, so), InvalidArgument);
}

TEST(Simulate, ZeroLengthReturnsInitial) {
  auto p = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const double mean[] = {1.0};
  const auto e0 = sample_gaussian_ensemble(100, mean, 1.0, 9, 0.25);
  const auto out = simulate(e0, *p, 0.25, 0.25, {});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].positions, e0.positions);
}

TEST(Simulate, MovingMeanTracksMomentOde) {
  // m(t) = t on [0, 1], s^2 = 1, mu(0) = 0: mu(t) = t - 1 + exp(-t)
  auto p = make_gaussian_path({0.0}, {1.0}, 1.0, 1.0, Schedule(Interpolation::kLinear, 0.0, 1.0));
  const double mean[] = {0.0};
  const auto e0 = sample_gaussian_ensemble(20000, mean, 1.0, 31, 0.0);
  SimulateOptions opts;
  opts.dt = 1e-3;
  opts.checkpoints = {0.25, 0.5, 0.75, 1.0};
  const auto out = simulate(e0, *p, 0.0, 1.0, opts);
  for (const auto& e : out) {
    const auto m = ensemble_mean(e);
    const double expected = e.time - 1.0 + std::exp(-e.time);
    EXPECT_LE(std::abs(m.mean[0] - expected), 3.0 * m.standard_error[0]) << "t=" << e.time;
  }
}

TEST(Simulate, StandardErrorScaling) {
  const double mean[] = {0.0};
  const double se1 = ensemble_mean(sample_gaussian_ensemble(10000, mean, 1.0, 1, 0.0)).standard_error[0];
  const double se2 = ensemble_mean(sample_gaussian_ensemble(20000, mean, 1.0, 2, 0.0)).standard_error[0];
  const double se4 = ensemble_mean(sample_gaussian_ensemble(40000, mean, 1.0, 3, 0.0)).standard_error[0];
  EXPECT_NEAR(se4 / se1, 0.5, 0.1);
  EXPECT_NEAR(se2 / se1, 1.0 / std::sqrt(2.0), 0.2 / std::sqrt(2.0));
}

TEST(Histogram, SingleCell) {
  const Grid g({Axis{0.0, 1.0, 10}, Axis{0.0, 2.0, 8}});
  ParticleEnsemble e;
  e.dimension = 2;
  e.positions = {0.55, 1.1, 0.52, 1.05, 0.59, 1.2};
  const auto h = histogram_density(e, g);
  const std::size_t c = g.locate(e.position(0));
  EXPECT_DOUBLE_EQ(h.density.values[c], 1.0 / g.cell_volume());
  EXPECT_EQ(h.counts[c], 3u);
  EXPECT_NEAR(h.density.mass(), 1.0, 1e-15);
  EXPECT_FALSE(h.flagged);
}

TEST(Histogram, DisjointGridFlagsEverything) {
  const Grid g({Axis{10.0, 11.0, 8}});
  const double mean[] = {0.0};
  const auto h = histogram_density(sample_gaussian_ensemble(500, mean, 1.0, 4, 0.0), g);
  EXPECT_EQ(h.density.mass(), 0.0);
  EXPECT_EQ(h.out_of_domain, 500u);
  EXPECT_EQ(h.out_of_domain_fraction, 1.0);
  EXPECT_TRUE(h.flagged);
}

TEST(Histogram, MillionNormalsMatchGridWithinBinomialBudget) {
  auto p = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const Grid g = build_grid(*p, 0.0, 0.0, 8.0, 256);
  const std::size_t n = 1000000;
  const double mean[] = {0.0};
  const auto h = histogram_density(sample_gaussian_ensemble(n, mean, 1.0, 6, 0.0), g);
  const auto q = discretize(g, *p, 0.0);
  // E|count/N - p_i| ~ sqrt(2 p_i (1 - p_i) / (pi N)) per cell
  const double hx = g.axis(0).width();
  double expected = 0.0;
  for (std::size_t i = 0; i < g.cell_count(); ++i) {
    const double pi = testing::normal_cell_average(g.axis(0).lo + i * hx, g.axis(0).lo + (i + 1) * hx, 0.0, 1.0) * hx;
    expected += std::sqrt(2.0 * pi * (1.0 - pi) / (std::numbers::pi * n));
  }
  const double l1 = l1_distance(h.density, q);
  EXPECT_LT(expected, 0.01);
  EXPECT_LE(l1, 0.01);
  EXPECT_LE(l1, 1.5 * expected);
}

}  // namespace
}  // namespace lkl
