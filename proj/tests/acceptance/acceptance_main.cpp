// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Reference values are computed here from closed forms and
// independent integrators; library outputs are only ever the thing checked.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "lkl/assumptions.hpp"
#include "lkl/diagnostics.hpp"
#include "lkl/fokker_planck.hpp"
#include "lkl/gaussian_oracle.hpp"
#include "lkl/grid.hpp"
#include "lkl/sde.hpp"
#include "lkl/target_family.hpp"

namespace {

using namespace lkl;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> time_grid(double start, double end, double step) {
  const auto n = static_cast<std::size_t>(std::llround((end - start) / step));
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = start + static_cast<double>(i) * step;
  t.back() = end;
  return t;
}

// Moving-Gaussian path shared by the grid and particle criteria:
// m(t) = t, s^2(t) = 1 - t/2 on [0, 1], from q0 = N(-0.5, 1.5).
constexpr double kMovingMean0 = -0.5;
constexpr double kMovingVar0 = 1.5;

std::shared_ptr<const GaussianPath> moving_path() {
  return make_gaussian_path({0.0}, {1.0}, 1.0, 0.5, Schedule(Interpolation::kLinear, 0.0, 1.0));
}

// Reference moments for the moving path: RK4 on
//   mu' = -(mu - t)/s^2,  v' = -2 v/s^2 + 2,  s^2 = 1 - t/2,
// with 1e5 steps per unit time.
struct RefMoments {
  double mu;
  double var;
};

RefMoments reference_moments(double t) {
  auto f = [](double s, double mu, double v, double& dmu, double& dv) {
    const double ss = 1.0 - 0.5 * std::min(s, 1.0);
    dmu = -(mu - std::min(s, 1.0)) / ss;
    dv = -2.0 * v / ss + 2.0;
  };
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t * 1e5)));
  const double h = t / static_cast<double>(n);
  double mu = kMovingMean0, v = kMovingVar0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) * h;
    double a1, b1, a2, b2, a3, b3, a4, b4;
    f(s, mu, v, a1, b1);
    f(s + h / 2, mu + h / 2 * a1, v + h / 2 * b1, a2, b2);
    f(s + h / 2, mu + h / 2 * a2, v + h / 2 * b2, a3, b3);
    f(s + h, mu + h * a3, v + h * b3, a4, b4);
    mu += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
    v += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4);
  }
  return {mu, v};
}

// Mass of N(mean, var) on [a, b], via erfc on the tail side so far cells do
// not cancel to zero.
double normal_mass(double a, double b, double mean, double var) {
  const double s = std::sqrt(2.0 * var);
  const double za = (a - mean) / s, zb = (b - mean) / s;
  if (za >= 0.0) return 0.5 * (std::erfc(za) - std::erfc(zb));
  if (zb <= 0.0) return 0.5 * (std::erfc(-zb) - std::erfc(-za));
  return 0.5 * (std::erf(zb) - std::erf(za));
}

double reference_kl(double mu, double var, double m, double ss) {
  const double r = var / ss;
  return 0.5 * (r - 1.0 - std::log(r)) + (mu - m) * (mu - m) / (2.0 * ss);
}

Grid moving_grid(std::size_t n) {
  const auto path = moving_path();
  SupportHint hint = path->support(0.0, 1.0);
  return build_grid(hint.merged({{kMovingMean0}, {kMovingMean0}, std::sqrt(kMovingVar0)}),
                    8.0, n);
}

// ---------------------------------------------------------------------------

Outcome chain_rule_ou() {
  const auto path = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const auto s0 = make_gaussian_state(*path, 0.0, {2.0}, 1.0);
  const auto t = time_grid(0.1, 2.0, 1e-3);
  const auto out = identity_residual_gaussian(*path, s0, t, 1e-4, DerivativeMode::kChainRule);
  double kl_dev = 0.0;
  for (const auto& o : out) kl_dev = std::max(kl_dev, std::abs(o.kl - 2.0 * std::exp(-2.0 * o.t)));
  const double res = max_abs_residual(out);
  return {res <= 1e-12 && kl_dev <= 1e-12,
          fmt("max |residual| %.3e (<= 1e-12) over %zu times in [0.1, 2]; "
              "|kl - 2e^-2t| <= %.1e",
              res, out.size(), kl_dev)};
}

Outcome finite_difference_benchmarks() {
  const auto t = time_grid(0.1, 2.0, 1e-3);

  const auto ou = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const auto ou_out = identity_residual_gaussian(
      *ou, make_gaussian_state(*ou, 0.0, {2.0}, 1.0), t, 1e-4, DerivativeMode::kFiniteDifference);

  // m(t) = t on the whole range; mu(t) = t - 1 + e^-t from mu(0) = 0.
  const auto mm = make_gaussian_path({0.0}, {3.0}, 1.0, 1.0, Schedule(Interpolation::kLinear, 0.0, 3.0));
  const auto mm_out = identity_residual_gaussian(
      *mm, make_gaussian_state(*mm, 0.0, {0.0}, 1.0), t, 1e-4, DerivativeMode::kFiniteDifference);
  double kl_dev = 0.0;
  for (const auto& o : mm_out) {
    const double gap = 1.0 - std::exp(-o.t);
    kl_dev = std::max(kl_dev, std::abs(o.kl - 0.5 * gap * gap));
  }

  const double r_ou = max_abs_residual(ou_out);
  const double r_mm = max_abs_residual(mm_out);
  return {r_ou <= 1e-6 && r_mm <= 1e-6 && kl_dev <= 1e-9,
          fmt("spacing 1e-3: OU max |residual| %.3e, moving-mean %.3e (each <= 1e-6); "
              "moving-mean |kl - closed form| <= %.1e",
              r_ou, r_mm, kl_dev)};
}

struct GridRun {
  std::vector<GridDensity> densities;
  IdentitySummary summary;
};

GridRun run_moving_grid(std::size_t n) {
  const auto path = moving_path();
  const Grid grid = moving_grid(n);
  const std::vector<double> mu0{kMovingMean0};
  const auto q0 = discretize_gaussian(grid, mu0, kMovingVar0, 0.0);
  FpSolveOptions opts;
  opts.checkpoints = time_grid(0.0, 1.0, 0.002);
  GridRun run;
  run.densities = fp_solve(q0, *path, 0.0, 1.0, opts);
  std::vector<DiagnosticsRecord> records;
  for (const auto& q : run.densities) records.push_back(compute_record(q, *path));
  kl_time_derivative_fd(records);
  run.summary = verify_identity(records);
  return run;
}

GridRun& fine_run() {
  static GridRun run = run_moving_grid(2048);
  return run;
}

Outcome grid_identity() {
  const GridRun& fine = fine_run();
  const GridRun coarse = run_moving_grid(1024);
  const double r = fine.summary.max_relative_residual;
  const double ratio = coarse.summary.max_relative_residual / r;
  return {r <= 5e-3 && ratio >= 3.0,
          fmt("n = 2048: max relative residual %.3e (<= 5e-3); n = 1024 -> 2048 ratio %.2f (>= 3)",
              r, ratio)};
}

Outcome solver_vs_oracle() {
  const auto path = moving_path();
  const GridRun& run = fine_run();
  double worst_l1 = 0.0, worst_kl = 0.0;
  for (const auto& q : run.densities) {
    const RefMoments ref = reference_moments(q.time);
    const Axis& ax = q.grid.axis(0);
    double l1 = 0.0;
    for (std::size_t i = 0; i < ax.cells; ++i) {
      const double lo = ax.lo + static_cast<double>(i) * ax.width();
      l1 += std::abs(q.values[i] * ax.width() - normal_mass(lo, lo + ax.width(), ref.mu, ref.var));
    }
    worst_l1 = std::max(worst_l1, l1);
    const double kl_ref = reference_kl(ref.mu, ref.var, std::min(q.time, 1.0), 1.0 - 0.5 * q.time);
    worst_kl = std::max(worst_kl, std::abs(kl_divergence(q, *path) - kl_ref));
  }
  return {worst_l1 <= 1e-3 && worst_kl <= 1e-4,
          fmt("n = 2048, %zu checkpoints: max L1 %.3e (<= 1e-3), max |KL - KL_ref| %.3e (<= 1e-4)",
              run.densities.size(), worst_l1, worst_kl)};
}

Outcome conservation() {
  const auto path = moving_path();
  GridDensity q = discretize_gaussian(moving_grid(512), std::vector<double>{kMovingMean0},
                                      kMovingVar0, 0.0);
  const double m0 = q.mass();
  double drift = 0.0, min_value = q.min_value();
  constexpr std::size_t kSteps = 100000;
  for (std::size_t k = 0; k < kSteps; ++k) {
    q = fp_step(q, *path, 0.9 * stability_limit(q, *path));
    drift = std::max(drift, std::abs(q.mass() - m0));
    min_value = std::min(min_value, q.min_value());
  }
  return {drift <= 1e-10 && min_value >= 0.0,
          fmt("%zu steps to t = %.3f: max mass drift %.3e (<= 1e-10), min density %.3e (>= 0)",
              kSteps, q.time, drift, min_value)};
}

Outcome monotone_dissipation() {
  const auto p = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const Grid grid = build_grid(p->support(0, 1).merged({{2.0}, {2.0}, 1.0}), 8.0, 1024);
  const auto q0 = discretize_gaussian(grid, std::vector<double>{2.0}, 1.0, 0.0);
  std::vector<double> kl{kl_divergence(q0, *p)};
  FpSolveOptions opts;
  opts.checkpoints = {2.0};
  opts.on_step = [&](const GridDensity& q) { kl.push_back(kl_divergence(q, *p)); };
  fp_solve(q0, *p, 0.0, 2.0, opts);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < kl.size(); ++i) worst = std::max(worst, kl[i] - kl[i - 1]);
  return {worst <= 1e-8,
          fmt("%zu steps, KL %.4f -> %.4e; largest per-step change %.3e (<= 1e-8)",
              kl.size() - 1, kl.front(), kl.back(), worst)};
}

// Particle/grid KL on a 64-cell coarse grid. The histogram estimator uses
// the Miller-Madow correction (occupied - 1) / 2N; its standard error is
// sd(log(qhat/p)) / sqrt(N) over particles.
struct KlCompare {
  double grid = 0.0;
  double particles = 0.0;
  double se = 0.0;
};

KlCompare compare_kl(const GridDensity& fine, const ParticleEnsemble& e, std::size_t factor) {
  const Axis& fa = fine.grid.axis(0);
  const std::size_t cells = fa.cells / factor;
  const double h = fa.width() * static_cast<double>(factor);
  const double t = fine.time;
  const double m = std::min(t, 1.0), ss = 1.0 - 0.5 * std::min(t, 1.0);

  std::vector<double> q(cells, 0.0), p(cells);
  double p_mass = 0.0;
  for (std::size_t i = 0; i < fa.cells; ++i) q[i / factor] += fine.values[i] * fa.width();
  for (std::size_t j = 0; j < cells; ++j) {
    const double lo = fa.lo + static_cast<double>(j) * h;
    p[j] = normal_mass(lo, lo + h, m, ss);
    p_mass += p[j];
  }
  for (double& v : p) v /= p_mass;

  std::vector<std::size_t> counts(cells, 0);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double x = e.position(i)[0];
    const double u = (x - fa.lo) / h;
    if (!(u >= 0.0) || u >= static_cast<double>(cells)) continue;
    ++counts[static_cast<std::size_t>(u)];
    ++inside;
  }

  KlCompare c;
  const double n = static_cast<double>(e.size());
  double s1 = 0.0, s2 = 0.0;
  std::size_t occupied = 0;
  for (std::size_t j = 0; j < cells; ++j) {
    if (q[j] > 0.0) c.grid += q[j] * std::log(q[j] / p[j]);
    if (counts[j] == 0) continue;
    ++occupied;
    const double w = static_cast<double>(counts[j]);
    const double lr = std::log(w / n / p[j]);
    c.particles += w / n * lr;
    s1 += w * lr;
    s2 += w * lr * lr;
  }
  c.particles -= static_cast<double>(occupied - 1) / (2.0 * n);
  const double in = static_cast<double>(inside);
  c.se = std::sqrt((s2 / in - (s1 / in) * (s1 / in)) / in);
  return c;
}

Outcome particle_consistency() {
  const auto path = moving_path();
  const std::vector<double> checkpoints{0.25, 0.5, 0.75, 1.0};
  const Grid grid = moving_grid(2048);
  FpSolveOptions fo;
  fo.checkpoints = checkpoints;
  const auto qs = fp_solve(discretize_gaussian(grid, std::vector<double>{kMovingMean0}, kMovingVar0, 0.0),
                           *path, 0.0, 1.0, fo);

  auto run = [&](std::size_t workers) {
    const auto e0 = sample_gaussian_ensemble(100000, std::vector<double>{kMovingMean0},
                                             kMovingVar0, 2024, 0.0);
    SimulateOptions so;
    so.dt = 5e-4;
    so.checkpoints = checkpoints;
    so.em.workers = workers;
    return simulate(e0, *path, 0.0, 1.0, so);
  };
  const auto a = run(4);
  const auto b = run(4);
  const auto c = run(1);
  bool identical = true;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (const auto* other : {&b[k], &c[k]}) {
      identical = identical && other->positions.size() == a[k].positions.size() &&
                  std::memcmp(other->positions.data(), a[k].positions.data(),
                              a[k].positions.size() * sizeof(double)) == 0;
    }
  }

  bool within = true;
  double worst_z = 0.0;
  for (std::size_t k = 0; k < qs.size(); ++k) {
    const KlCompare kc = compare_kl(qs[k], a[k], 32);
    const double z = std::abs(kc.particles - kc.grid) / kc.se;
    worst_z = std::max(worst_z, z);
    within = within && z <= 3.0;
  }
  return {within && identical,
          fmt("N = 1e5, 4 checkpoints: worst |KL_particles - KL_grid| = %.2f SE (<= 3); "
              "bit-identical across runs and 1/4 workers: %s",
              worst_z, identical ? "yes" : "no")};
}

Outcome assumption_checkers() {
  const auto normal = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const ProbeSet probes = make_probes(Box::symmetric(1, 5.0));
  const std::vector<double> times{0.0, 0.5, 1.0};
  const auto d = check_dissipativity(*normal, probes, times, {1.0, std::nullopt});
  const double c = check_growth(*normal, without_origin_ball(probes), times);

  const auto broken = std::make_shared<FlippedScore>(normal);
  const auto bd = check_dissipativity(*broken, probes, times, {1.0, std::nullopt});
  bool witness_ok = false;
  if (bd.violation) {
    const auto& w = *bd.violation;
    const double x2 = w.x[0] * w.x[0];
    witness_ok = reproduces_violation(*broken, w, 1.0, bd.b_max) &&
                 std::abs(w.lhs + x2) <= 1e-12 && -x2 < x2 - bd.b_max;
  }
  const bool ok = std::abs(d.a_zero_slack - 1.0) <= 1e-9 && std::abs(d.b) <= 1e-9 &&
                  c == 0.0 && !d.violation && witness_ok;
  return {ok, fmt("N(0,1): a = %.12f, b = %.3e, c = %g; broken sign witness %s",
                  d.a_zero_slack, d.b, c,
                  bd.violation ? fmt("at x = %.4f confirmed: %s", bd.violation->x[0],
                                     witness_ok ? "yes" : "no").c_str()
                               : "missing")};
}

Outcome envelope() {
  const auto normal = make_gaussian_path({0.0}, {0.0}, 1.0, 1.0);
  const Grid grid({Axis{-8.0, 8.0, 2048}});
  const GridDensity q = discretize(grid, *normal, 0.0);
  const auto good = check_envelope(q, 1.0, 0.4);
  const auto bad = check_envelope(q, 1.0, 100.0);

  // Expected witness: the cell with the largest log excess over either bound.
  double best = 0.0, best_x = 0.0;
  bool best_lower = false;
  for (std::size_t i = 0; i < grid.axis(0).cells; ++i) {
    const double x = grid.axis(0).center(i);
    const double lq = std::log(q.values[i]);
    const double up = lq + 100.0 * x * x;
    const double lo = -(x * x + 1.0) - lq;
    if (up > best) best = up, best_x = x, best_lower = false;
    if (lo > best) best = lo, best_x = x, best_lower = true;
  }
  bool witness_ok = false;
  if (bad.worst_violation) {
    const auto& w = *bad.worst_violation;
    witness_ok = w.x[0] == best_x && w.lower == best_lower && w.q > w.bound &&
                 std::abs(w.bound - std::exp(-100.0 * best_x * best_x)) <=
                     1e-12 * w.bound;
  }
  return {good.satisfied && !bad.satisfied && witness_ok,
          fmt("(1, 0.4): %s; (1, 100): %s, witness x = %g on the %s side (expected %g): %s",
              good.satisfied ? "holds" : "violated", bad.satisfied ? "holds" : "violated",
              bad.worst_violation ? bad.worst_violation->x[0] : NAN,
              bad.worst_violation && bad.worst_violation->lower ? "lower" : "upper", best_x,
              witness_ok ? "correct" : "wrong")};
}

Outcome closed_form_agreement() {
  const auto moving = moving_path();
  const auto fixed = make_gaussian_path({0.5}, {0.5}, 2.0, 2.0);
  struct Case {
    std::shared_ptr<const GaussianPath> path;
    double t, mu, var;
  };
  const Case cases[] = {{fixed, 0.0, 0.5, 2.0},  {fixed, 0.0, 2.0, 1.0},
                        {moving, 0.3, -0.5, 1.5}, {moving, 0.6, 1.0, 0.7},
                        {moving, 0.9, 0.2, 0.45}};
  double worst = 0.0;
  for (const auto& c : cases) {
    SupportHint hint = c.path->support(0.0, 1.0).merged({{c.mu}, {c.mu}, std::sqrt(c.var)});
    const Grid grid = build_grid(hint, 8.0, 2048);
    const auto q = discretize_gaussian(grid, std::vector<double>{c.mu}, c.var, c.t);
    const auto r = compute_record(q, *c.path);
    const auto s = make_gaussian_state(*c.path, c.t, {c.mu}, c.var);
    worst = std::max({worst, std::abs(r.kl - kl_gaussian(s)),
                      std::abs(r.fisher - fisher_gaussian(s)),
                      std::abs(r.dt_term - dt_term_gaussian(s))});
  }
  return {worst <= 1e-5, fmt("%zu states, n = 2048: max |grid - closed form| %.3e (<= 1e-5)",
                             std::size(cases), worst)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"gaussian-identity-chain-rule", 1.0, chain_rule_ou},
      {"gaussian-identity-finite-difference", 5.0, finite_difference_benchmarks},
      {"grid-identity-convergence", 60.0, grid_identity},
      {"solver-vs-oracle-density", 0.0, solver_vs_oracle},
      {"conservation-positivity", 0.0, conservation},
      {"monotone-dissipation", 0.0, monotone_dissipation},
      {"particle-grid-consistency", 0.0, particle_consistency},
      {"assumption-checkers", 0.0, assumption_checkers},
      {"envelope-check", 0.0, envelope},
      {"closed-form-agreement", 0.0, closed_form_agreement},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.2f s", s);
    if (c.budget_s > 0.0) {
      timing += fmt(" (< %g s)", c.budget_s);
      o.pass = o.pass && s < c.budget_s;
    }
    std::printf("%s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed\n", std::size(criteria) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
