#include "lkl/assumptions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "lkl/error.hpp"
#include "lkl/parallel.hpp"

namespace lkl {

namespace {

constexpr std::array<unsigned, 16> kHaltonBases = {
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

void validate(const TargetFamily& family, const ProbeSet& probes) {
  if (probes.dimension != family.dimension()) {
    throw InvalidArgument("probe dimension does not match the family");
  }
}

// Per-time gradient table: g[i*d + k] for probe i.
std::vector<double> gradient_table(const TargetFamily& family,
                                   const ProbeSet& probes, double t,
                                   bool of_density, std::size_t workers) {
  const std::size_t d = probes.dimension;
  std::vector<double> g(probes.points.size());
  parallel_for(probes.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::span<double> out(g.data() + i * d, d);
      family.grad_log_density(t, probes.point(i), out);
      if (of_density) {
        const double p = family.density(t, probes.point(i));
        for (double& v : out) v *= p;
      }
    }
  });
  return g;
}

double pairwise_lipschitz(const TargetFamily& family, const ProbeSet& probes,
                          std::span<const double> times, bool of_density,
                          std::size_t workers) {
  validate(family, probes);
  const std::size_t n = probes.size();
  const std::size_t d = probes.dimension;
  double best = 0.0;
  for (double t : times) {
    const auto g = gradient_table(family, probes, t, of_density, workers);
    std::vector<double> row_max(n, 0.0);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        double m = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
          double dx2 = 0.0;
          double dg2 = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double dx = probes.points[i * d + k] - probes.points[j * d + k];
            const double dg = g[i * d + k] - g[j * d + k];
            dx2 += dx * dx;
            dg2 += dg * dg;
          }
          if (dx2 > 0.0) m = std::max(m, std::sqrt(dg2 / dx2));
        }
        row_max[i] = m;
      }
    });
    for (double m : row_max) best = std::max(best, m);
  }
  return best;
}

}  // namespace

Box Box::symmetric(std::size_t dimension, double half_width) {
  return Box{std::vector<double>(dimension, -half_width),
             std::vector<double>(dimension, half_width)};
}

ProbeSet make_probes(const Box& box, const ProbeOptions& options) {
  const std::size_t d = box.dimension();
  if (d == 0 || box.hi.size() != d) {
    throw InvalidArgument("probe box must have matching lo/hi of dimension >= 1");
  }
  if (d > kHaltonBases.size()) {
    throw InvalidArgument("probe box dimension too large");
  }
  for (std::size_t k = 0; k < d; ++k) {
    if (!(box.hi[k] > box.lo[k])) {
      throw InvalidArgument("probe box must satisfy lo < hi on every axis");
    }
  }
  ProbeSet set;
  set.dimension = d;

  const std::size_t m = options.lattice_per_axis;
  if (m > 0) {
    std::size_t lattice = 1;
    for (std::size_t k = 0; k < d; ++k) lattice *= m;
    set.points.reserve((lattice + options.random_probes) * d);
    for (std::size_t idx = 0; idx < lattice; ++idx) {
      std::size_t rem = idx;
      std::vector<double> p(d);
      for (std::size_t k = d; k-- > 0;) {
        const std::size_t ik = rem % m;
        rem /= m;
        p[k] = box.lo[k] + (static_cast<double>(ik) + 0.5) *
                               (box.hi[k] - box.lo[k]) / static_cast<double>(m);
      }
      set.points.insert(set.points.end(), p.begin(), p.end());
    }
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> shift(d);
  for (double& s : shift) s = unit(rng);
  for (std::size_t i = 0; i < options.random_probes; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      double u = radical_inverse(i + 1, kHaltonBases[k]) + shift[k];
      u -= std::floor(u);
      set.points.push_back(box.lo[k] + u * (box.hi[k] - box.lo[k]));
    }
  }
  return set;
}

ProbeSet probes_from_points(std::size_t dimension, std::vector<double> points) {
  if (dimension == 0 || points.size() % dimension != 0) {
    throw InvalidArgument("probe points must be a multiple of the dimension");
  }
  return ProbeSet{dimension, std::move(points)};
}

DissipativityReport check_dissipativity(const TargetFamily& family,
                                        const ProbeSet& probes,
                                        std::span<const double> times,
                                        const DissipativityOptions& options,
                                        std::size_t workers) {
  validate(family, probes);
  if (!(options.target_a > 0.0)) {
    throw InvalidArgument("dissipativity target_a must be positive");
  }
  if (probes.size() == 0 || times.empty()) {
    throw InvalidArgument("dissipativity check needs probes and times");
  }
  const std::size_t n = probes.size();
  const std::size_t d = probes.dimension;

  double r2_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r2_max = std::max(r2_max, squared_norm(probes.point(i)));
  }

  DissipativityReport rep;
  rep.a = options.target_a;
  rep.b_max = options.b_max.value_or(0.5 * options.target_a * r2_max);

  // lhs[i] = -x . grad log p_t(x) for the current t.
  std::vector<double> lhs(n);
  double worst_gap = -std::numeric_limits<double>::infinity();
  double worst_t = times.front();
  std::size_t worst_i = 0;
  double worst_lhs = 0.0;
  double a_max = std::numeric_limits<double>::infinity();
  double a_zero = std::numeric_limits<double>::infinity();
  bool origin_needs_slack = false;

  for (double t : times) {
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
      std::vector<double> g(d);
      for (std::size_t i = begin; i < end; ++i) {
        const auto x = probes.point(i);
        family.grad_log_density(t, x, g);
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += x[k] * g[k];
        lhs[i] = -dot;
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      const double r2 = squared_norm(probes.point(i));
      const double gap = options.target_a * r2 - lhs[i];
      if (gap > worst_gap) {
        worst_gap = gap;
        worst_t = t;
        worst_i = i;
        worst_lhs = lhs[i];
      }
      if (r2 > 0.0) {
        a_max = std::min(a_max, (rep.b_max + lhs[i]) / r2);
        a_zero = std::min(a_zero, lhs[i] / r2);
      } else if (lhs[i] < 0.0) {
        origin_needs_slack = true;
      }
    }
  }

  rep.b = std::max(0.0, worst_gap);
  rep.a_max = a_max;
  rep.a_zero_slack = origin_needs_slack ? -std::numeric_limits<double>::infinity()
                                        : a_zero;
  if (rep.b > rep.b_max) {
    const auto x = probes.point(worst_i);
    rep.violation = ViolationWitness{
        worst_t, std::vector<double>(x.begin(), x.end()), worst_lhs,
        options.target_a * squared_norm(x) - rep.b_max};
  }
  return rep;
}

bool reproduces_violation(const TargetFamily& family,
                          const ViolationWitness& witness, double a,
                          double b_max) {
  const auto g = family.grad_log_density(witness.t, witness.x);
  double dot = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) dot += witness.x[k] * g[k];
  return -dot < a * squared_norm(witness.x) - b_max;
}

double check_lipschitz(const TargetFamily& family, const ProbeSet& probes,
                       std::span<const double> times, std::size_t workers) {
  return pairwise_lipschitz(family, probes, times, true, workers);
}

double check_score_lipschitz(const TargetFamily& family,
                             const ProbeSet& probes,
                             std::span<const double> times,
                             std::size_t workers) {
  return pairwise_lipschitz(family, probes, times, false, workers);
}

double check_growth(const TargetFamily& family, const ProbeSet& probes,
                    std::span<const double> times, std::size_t workers) {
  validate(family, probes);
  const std::size_t n = probes.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (squared_norm(probes.point(i)) <
        kGrowthExclusionRadius * kGrowthExclusionRadius) {
      throw InvalidArgument(
          "growth check: probe inside the origin exclusion ball (|x|^2 -> 0)");
    }
  }
  double c = 0.0;
  std::vector<double> ratio(n);
  for (double t : times) {
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto x = probes.point(i);
        ratio[i] = std::abs(family.dt_density(t, x)) / squared_norm(x);
      }
    });
    for (double r : ratio) c = std::max(c, r);
  }
  return c;
}

ProbeSet without_origin_ball(const ProbeSet& probes, double radius) {
  ProbeSet out;
  out.dimension = probes.dimension;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto x = probes.point(i);
    if (squared_norm(x) >= radius * radius) {
      out.points.insert(out.points.end(), x.begin(), x.end());
    }
  }
  return out;
}

double origin_time_sensitivity(const TargetFamily& family,
                               std::span<const double> times) {
  const std::vector<double> origin(family.dimension(), 0.0);
  double worst = 0.0;
  for (double t : times) {
    worst = std::max(worst, std::abs(family.dt_density(t, origin)));
  }
  return worst;
}

DifferentiabilityReport check_differentiability(const TargetFamily& family,
                                                const ProbeSet& probes,
                                                std::span<const double> times,
                                                double space_step,
                                                double time_step) {
  validate(family, probes);
  const std::size_t d = probes.dimension;
  DifferentiabilityReport rep;
  std::vector<double> x(d);
  std::vector<double> g(d);
  for (double t : times) {
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const auto p = probes.point(i);
      std::copy(p.begin(), p.end(), x.begin());
      family.grad_log_density(t, x, g);
      for (std::size_t k = 0; k < d; ++k) {
        const double x0 = x[k];
        auto at = [&](double offset) {
          x[k] = x0 + offset;
          return family.log_density(t, x);
        };
        const double fd = (-at(2 * space_step) + 8 * at(space_step) -
                           8 * at(-space_step) + at(-2 * space_step)) /
                          (12 * space_step);
        x[k] = x0;
        rep.max_grad_error = std::max(
            rep.max_grad_error,
            std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
      }
      const double fd_t = (family.log_density(t + time_step, x) -
                           family.log_density(t - time_step, x)) /
                          (2 * time_step);
      const double an_t = family.dt_log_density(t, x);
      rep.max_dt_error = std::max(
          rep.max_dt_error, std::abs(fd_t - an_t) / std::max(1.0, std::abs(an_t)));
    }
  }
  return rep;
}

AssumptionReport check_assumptions(const TargetFamily& family, const Box& box,
                                   std::span<const double> times,
                                   const DissipativityOptions& dissipativity,
                                   const ProbeOptions& options) {
  const ProbeSet probes = make_probes(box, options);
  AssumptionReport rep;
  rep.probe_box = box;
  rep.times.assign(times.begin(), times.end());
  rep.probe_count = probes.size();
  rep.dissipativity =
      check_dissipativity(family, probes, times, dissipativity, options.workers);
  rep.lipschitz_estimate = check_lipschitz(family, probes, times, options.workers);
  rep.score_lipschitz_estimate =
      check_score_lipschitz(family, probes, times, options.workers);
  rep.growth_constant =
      check_growth(family, without_origin_ball(probes), times, options.workers);
  rep.origin_dt_density = origin_time_sensitivity(family, times);
  rep.differentiability = check_differentiability(family, probes, times);
  return rep;
}

}  // namespace lkl
