#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lkl/assumptions.hpp"
#include "lkl/error.hpp"
#include "test_families.hpp"

namespace lkl {
namespace {

const std::vector<double> kTimes = {0.0, 0.25, 0.5, 0.75, 1.0};

TEST(Probes, LatticePlusRotatedHalton) {
  const Box box = Box::symmetric(2, 3.0);
  const auto a = make_probes(box);
  const auto b = make_probes(box);
  EXPECT_EQ(a.size(), 32u * 32u + 1000u);
  EXPECT_EQ(a.points, b.points);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (double v : a.point(i)) {
      EXPECT_GE(v, -3.0);
      EXPECT_LE(v, 3.0);
    }
  }
  ProbeOptions other;
  other.seed = 99;
  EXPECT_NE(make_probes(box, other).points, a.points);
}

TEST(Probes, RejectsDegenerateBox) {
  EXPECT_THROW(make_probes(Box{{1.0}, {1.0}}), InvalidArgument);
  EXPECT_THROW(make_probes(Box{{}, {}}), InvalidArgument);
}

TEST(Dissipativity, StaticStandardNormalIsExact) {
  for (std::size_t d : {1u, 2u}) {
    auto p = make_gaussian_path(std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), 1.0, 1.0);
    const auto probes = make_probes(Box::symmetric(d, 5.0));
    const auto rep = check_dissipativity(*p, probes, kTimes, {});
    EXPECT_FALSE(rep.violation);
    EXPECT_DOUBLE_EQ(rep.a, 1.0);
    EXPECT_LE(rep.b, 1e-9);
    EXPECT_GE(rep.a_max, 1.0 - 1e-9);
    EXPECT_NEAR(rep.a_zero_slack, 1.0, 1e-9);
  }
}

TEST(Dissipativity, MovingPathSlackMatchesBruteForce) {
  // s^2 in [0.5, 2], mean sweeping 0 -> 2
  const Schedule sch(Interpolation::kLinear, 0.0, 1.0);
  auto p = make_gaussian_path({0.0}, {2.0}, 2.0, 0.5, sch);
  const auto probes = make_probes(Box::symmetric(1, 6.0));
  DissipativityOptions opts;
  opts.target_a = 0.5;
  opts.b_max = 100.0;
  const auto rep = check_dissipativity(*p, probes, kTimes, opts);
  ASSERT_FALSE(rep.violation);

  double b = 0.0;
  double a_max = std::numeric_limits<double>::infinity();
  for (double t : kTimes) {
    const double m = 2.0 * t;
    const double s2 = 2.0 - 1.5 * t;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const double x = probes.point(i)[0];
      const double lhs = (x - m) * x / s2;
      b = std::max(b, 0.5 * x * x - lhs);
      a_max = std::min(a_max, (100.0 + lhs) / (x * x));
    }
  }
  EXPECT_NEAR(rep.b, b, 1e-12);
  EXPECT_NEAR(rep.a_max, a_max, 1e-9);
  EXPECT_GT(rep.b, 0.0);
}

TEST(Dissipativity, FlippedSignYieldsReproducibleWitness) {
  auto inner = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  FlippedScore broken(inner);
  const auto probes = make_probes(Box::symmetric(1, 5.0));
  const auto rep = check_dissipativity(broken, probes, kTimes, {});
  ASSERT_TRUE(rep.violation);
  const auto& w = *rep.violation;
  EXPECT_NEAR(w.lhs, -w.x[0] * w.x[0], 1e-12);
  EXPECT_LT(w.lhs, w.rhs);
  EXPECT_TRUE(reproduces_violation(broken, w, rep.a, rep.b_max));
  EXPECT_FALSE(reproduces_violation(*inner, w, rep.a, rep.b_max));
}

TEST(Dissipativity, IndependentOfWorkerCount) {
  auto p = make_gaussian_mixture_path(
      {{0.4, {-1.0, 0.0}, {1.0, 1.0}, Schedule{}}, {0.6, {2.0, -1.0}, {0.0, 0.0}, Schedule{}}},
      0.9);
  const auto probes = make_probes(Box::symmetric(2, 4.0));
  const auto r1 = check_dissipativity(*p, probes, kTimes, {}, 1);
  const auto r3 = check_dissipativity(*p, probes, kTimes, {}, 3);
  EXPECT_EQ(r1.b, r3.b);
  EXPECT_EQ(r1.a_max, r3.a_max);
  EXPECT_EQ(r1.a_zero_slack, r3.a_zero_slack);
  EXPECT_EQ(check_lipschitz(*p, probes, kTimes, 1), check_lipschitz(*p, probes, kTimes, 3));
  EXPECT_EQ(check_growth(*p, without_origin_ball(probes), kTimes, 1),
            check_growth(*p, without_origin_ball(probes), kTimes, 3));
}

TEST(Lipschitz, StandardNormalApproachesMaxSecondDerivative) {
  auto p = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  double max_pdd = 0.0;
  for (int i = -50000; i <= 50000; ++i) {
    const double x = i * 1e-4;
    max_pdd = std::max(max_pdd, std::abs((x * x - 1.0) * testing::normal_pdf(x, 0.0, 1.0)));
  }
  EXPECT_NEAR(max_pdd, 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-12);

  const auto probes = make_probes(Box::symmetric(1, 5.0));
  const double est = check_lipschitz(*p, probes, kTimes);
  EXPECT_LE(est, max_pdd * (1.0 + 1e-12));
  EXPECT_GE(est, 0.9 * max_pdd);
}

TEST(Lipschitz, SingleProbeHasNoPairs) {
  auto p = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  EXPECT_EQ(check_lipschitz(*p, probes_from_points(1, {0.3}), kTimes), 0.0);
}

TEST(Lipschitz, ScalesWithDensity) {
  auto p = make_gaussian_path({0.0}, {1.0}, 1.0, 1.0);
  testing::ScaledDensity doubled(p, 2.0);
  const auto probes = make_probes(Box::symmetric(1, 4.0));
  const double base = check_lipschitz(*p, probes, kTimes);
  EXPECT_NEAR(check_lipschitz(doubled, probes, kTimes) / base, 2.0, 1e-12);
}

TEST(Lipschitz, ScoreEstimateIsInverseMinimumVariance) {
  auto p = make_gaussian_path({0.0}, {1.0}, 1.0, 0.5,
                              Schedule(Interpolation::kLinear, 0.0, 1.0));
  const auto probes = make_probes(Box::symmetric(1, 4.0));
  EXPECT_NEAR(check_score_lipschitz(*p, probes, kTimes), 2.0, 1e-10);
}

TEST(Growth, StaticFamilyIsExactlyZero) {
  auto p = make_gaussian_path({0.5}, {0.5}, 1.0, 1.0);
  const auto probes = without_origin_ball(make_probes(Box::symmetric(1, 5.0)));
  EXPECT_EQ(check_growth(*p, probes, kTimes), 0.0);
}

TEST(Growth, MovingMeanMatchesBruteForce) {
  const Schedule sch(Interpolation::kLinear, 0.0, 1.0);
  auto p = make_gaussian_path({0.0}, {1.0}, 1.0, 1.0, sch);
  const auto probes = without_origin_ball(make_probes(Box::symmetric(1, 5.0)));
  // d/dt p = p (x - m) m' with m(t) = t on [0, 1]
  double c = 0.0;
  for (double t : kTimes) {
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const double x = probes.point(i)[0];
      const double dp = testing::normal_pdf(x, t, 1.0) * (x - t);
      c = std::max(c, std::abs(dp) / (x * x));
    }
  }
  EXPECT_NEAR(check_growth(*p, probes, kTimes), c, 1e-12 * c);
  EXPECT_TRUE(std::isfinite(c));
  EXPECT_GT(origin_time_sensitivity(*p, kTimes), 0.0);
}

TEST(Growth, OriginProbeIsRejected) {
  auto p = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  EXPECT_THROW(check_growth(*p, probes_from_points(1, {1.0, 0.0}), kTimes), InvalidArgument);
  EXPECT_THROW(check_growth(*p, probes_from_points(1, {5e-4}), kTimes), InvalidArgument);
  EXPECT_EQ(without_origin_ball(probes_from_points(1, {1.0, 0.0, -2.0})).size(), 2u);
}

TEST(Differentiability, BuiltinFamiliesAreConsistent) {
  auto p = make_gaussian_mixture_path(
      {{0.5, {-1.0}, {-2.0}, Schedule{}}, {0.5, {1.0}, {0.0}, Schedule{}}}, 0.7);
  const auto probes = make_probes(Box::symmetric(1, 4.0));
  const std::vector<double> times = {0.1, 0.5, 0.9};
  const auto rep = check_differentiability(*p, probes, times);
  EXPECT_LE(rep.max_grad_error, 1e-6);
  EXPECT_LE(rep.max_dt_error, 1e-6);
  FlippedScore broken(p);
  EXPECT_GT(check_differentiability(broken, probes, times).max_grad_error, 0.1);
}

TEST(AssumptionReport, StaticStandardNormal) {
  auto p = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const auto rep = check_assumptions(*p, Box::symmetric(1, 5.0), kTimes, {});
  EXPECT_FALSE(rep.has_violation());
  EXPECT_EQ(rep.growth_constant, 0.0);
  EXPECT_EQ(rep.origin_dt_density, 0.0);
  EXPECT_GT(rep.probe_count, 1000u);
  EXPECT_NEAR(rep.score_lipschitz_estimate, 1.0, 1e-12);
}

}  // namespace
}  // namespace lkl
