#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "lkl/assumptions.hpp"
#include "lkl/diagnostics.hpp"
#include "lkl/error.hpp"
#include "lkl/fokker_planck.hpp"
#include "lkl/gaussian_oracle.hpp"
#include "lkl/grid_io.hpp"
#include "lkl/sde.hpp"
#include "svg_plot.hpp"

namespace lkl::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

template <class... Args>
void say(const RunContext& ctx, const Args&... args) {
  if (!ctx.log) return;
  (*ctx.log << ... << args) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomic(path, [&](std::ostream& os) { os << text; });
}

void write_json(const fs::path& path, const ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

// Interprets NaN as JSON null so partial rows stay valid.
ordered_json num(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

ordered_json vec(std::span<const double> v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

Grid solver_grid(const ExperimentConfig& c) {
  SupportHint hint = c.family.family->support(c.t0, c.t1);
  SupportHint initial{c.initial.mean, c.initial.mean, std::sqrt(c.initial.variance)};
  return build_grid(hint.merged(initial), c.solver.padding_sigmas, c.solver.cells,
                    c.solver.cell_budget);
}

std::vector<GridDensity> run_solver(const ExperimentConfig& c, const Grid& grid) {
  const GridDensity q0 = discretize_gaussian(grid, c.initial.mean, c.initial.variance, c.t0);
  FpSolveOptions opts;
  opts.dt = c.solver.dt;
  opts.safety = c.solver.safety;
  opts.checkpoints = c.diagnostics.checkpoints;
  return fp_solve(q0, *c.family.family, c.t0, c.t1, opts);
}

std::vector<DiagnosticsRecord> records_for(const std::vector<GridDensity>& qs,
                                           const TargetFamily& family) {
  std::vector<DiagnosticsRecord> out;
  out.reserve(qs.size());
  for (const auto& q : qs) out.push_back(compute_record(q, family));
  return out;
}

std::vector<double> column(const std::vector<DiagnosticsRecord>& rs,
                           double DiagnosticsRecord::*field) {
  std::vector<double> out;
  for (const auto& r : rs) out.push_back(r.*field);
  return out;
}

std::vector<double> column(const std::vector<DiagnosticsRecord>& rs,
                           std::optional<double> DiagnosticsRecord::*field) {
  std::vector<double> out;
  for (const auto& r : rs) out.push_back((r.*field).value_or(std::nan("")));
  return out;
}

void plot_records(const fs::path& dir, const std::vector<DiagnosticsRecord>& rs) {
  const auto t = column(rs, &DiagnosticsRecord::t);
  write_text(dir / "terms.svg",
             render_line_plot("Dissipation identity terms", "t",
                              {{"kl", t, column(rs, &DiagnosticsRecord::kl)},
                               {"fisher", t, column(rs, &DiagnosticsRecord::fisher)},
                               {"dt_term", t, column(rs, &DiagnosticsRecord::dt_term)},
                               {"d/dt kl", t, column(rs, &DiagnosticsRecord::kl_fd)}}));
  write_text(dir / "residual.svg",
             render_line_plot("Identity residual", "t",
                              {{"residual", t, column(rs, &DiagnosticsRecord::residual)},
                               {"relative", t,
                                column(rs, &DiagnosticsRecord::relative_residual)}}));
}

void write_records(const fs::path& path, const std::vector<DiagnosticsRecord>& rs) {
  write_file_atomic(path, [&](std::ostream& os) { write_records_csv(os, rs); });
}

void write_density(const fs::path& dir, std::size_t index, const GridDensity& q,
                   bool binary) {
  std::ostringstream name;
  name << "density_" << index << (binary ? ".bin" : ".csv");
  write_file_atomic(
      dir / name.str(),
      [&](std::ostream& os) {
        binary ? write_density_binary(os, q) : write_density_csv(os, q);
      },
      binary);
}

void write_ensemble(const fs::path& dir, std::size_t index, const ParticleEnsemble& e,
                    bool binary) {
  std::ostringstream name;
  name << "particles_" << index << (binary ? ".bin" : ".csv");
  write_file_atomic(
      dir / name.str(),
      [&](std::ostream& os) {
        binary ? write_ensemble_binary(os, e) : write_ensemble_csv(os, e);
      },
      binary);
}

ordered_json envelope_json(const EnvelopeReport& r, double t) {
  ordered_json j{{"t", t}, {"c1", r.c1}, {"c2", r.c2}, {"satisfied", r.satisfied}};
  if (r.worst_violation) {
    const auto& v = *r.worst_violation;
    j["witness"] = {{"x", vec(v.x)},
                    {"q", v.q},
                    {"bound", v.bound},
                    {"side", v.lower ? "lower" : "upper"}};
  }
  return j;
}

const GaussianPath& require_gaussian(const ExperimentConfig& c) {
  if (!c.family.gaussian || c.family.flip_score_sign) {
    throw ConfigError("family.kind",
                      "the oracle needs an unmodified gaussian-path family");
  }
  return *c.family.gaussian;
}

// Histogram against grid solution on a common coarse grid.
struct Comparison {
  double t = 0.0;
  double l1 = 0.0;
  double l1_bar = 0.0;
  double kl_grid = 0.0;
  double kl_particles = 0.0;
  double kl_se = 0.0;
  double out_of_domain_fraction = 0.0;
  bool pass = false;
};

Comparison compare(const ParticleEnsemble& e, const GridDensity& q_fine,
                   const TargetFamily& family, std::size_t factor) {
  const GridDensity q = coarsen(q_fine, factor);
  const GridDensity p = coarsen(discretize(q_fine.grid, family, q_fine.time), factor);
  const Histogram hist = histogram_density(e, q.grid);
  const double vol = q.grid.cell_volume();
  const double n = static_cast<double>(e.size());

  Comparison c;
  c.t = q.time;
  c.out_of_domain_fraction = hist.out_of_domain_fraction;
  c.l1 = l1_distance(hist.density, q) + hist.out_of_domain_fraction;

  double mean_abs = 0.0;
  double var_abs = 0.0;
  double kl_hat = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  std::size_t occupied = 0;
  for (std::size_t i = 0; i < q.values.size(); ++i) {
    const double mass = std::clamp(q.values[i] * vol, 0.0, 1.0);
    const double sd = std::sqrt(mass * (1.0 - mass) / n);
    mean_abs += std::min(sd * std::sqrt(2.0 / std::numbers::pi), 2.0 * mass);
    var_abs += sd * sd * (1.0 - 2.0 / std::numbers::pi);
    if (q.values[i] >= kZeroDensityFloor && p.values[i] > 0.0) {
      c.kl_grid += q.values[i] * vol * std::log(q.values[i] / p.values[i]);
    }
    if (hist.counts[i] == 0) continue;
    ++occupied;
    const double qh = hist.density.values[i];
    const double lr = std::log(qh / p.values[i]);
    const double w = static_cast<double>(hist.counts[i]);
    kl_hat += qh * vol * lr;
    s1 += w * lr;
    s2 += w * lr * lr;
  }
  const double inside = n - static_cast<double>(hist.out_of_domain);
  c.l1_bar = mean_abs + 4.0 * std::sqrt(var_abs) + hist.out_of_domain_fraction;
  c.kl_particles =
      kl_hat - (occupied > 0 ? static_cast<double>(occupied - 1) / (2.0 * n) : 0.0);
  if (inside > 1.0) {
    const double mean = s1 / inside;
    const double var = std::max(0.0, (s2 - inside * mean * mean) / (inside - 1.0));
    c.kl_se = std::sqrt(var / inside);
  }
  c.pass = c.l1 <= c.l1_bar && std::abs(c.kl_particles - c.kl_grid) <= 3.0 * c.kl_se &&
           !hist.flagged;
  return c;
}

}  // namespace

fs::path resolve_out_dir(const std::string& flag, const ExperimentConfig& config) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return config.output.directory;
}

int cmd_verify_identity(const ExperimentConfig& c, const RunContext& ctx) {
  Stopwatch clock;
  const Grid grid = solver_grid(c);
  say(ctx, "grid: ", grid.cell_count(), " cells on [", grid.axis(0).lo, ", ",
      grid.axis(0).hi, "]", grid.dimension() == 2 ? " per axis" : "");
  const auto qs = run_solver(c, grid);
  auto records = records_for(qs, *c.family.family);
  kl_time_derivative_fd(records);
  const IdentitySummary summary = verify_identity(records);

  ordered_json envelopes = ordered_json::array();
  bool envelope_ok = true;
  if (c.diagnostics.envelope) {
    for (const auto& q : qs) {
      const auto rep = check_envelope(q, c.diagnostics.envelope->c1, c.diagnostics.envelope->c2);
      envelope_ok = envelope_ok && rep.satisfied;
      envelopes.push_back(envelope_json(rep, q.time));
    }
  }
  const bool identity_ok = summary.max_relative_residual <= c.diagnostics.tolerance;
  const bool ok = identity_ok && envelope_ok;

  if (c.output.csv) write_records(ctx.out_dir / "records.csv", records);
  if (c.output.plots) plot_records(ctx.out_dir, records);
  ordered_json j{{"command", "verify-identity"},
                 {"name", c.name},
                 {"cells", grid.cell_count()},
                 {"checkpoints", records.size()},
                 {"max_abs_residual", summary.max_abs_residual},
                 {"max_relative_residual", summary.max_relative_residual},
                 {"t_at_max_relative", summary.t_at_max_relative},
                 {"tolerance", c.diagnostics.tolerance},
                 {"max_excluded_mass",
                  std::ranges::max(column(records, &DiagnosticsRecord::excluded_mass))},
                 {"envelope", envelopes},
                 {"passed", ok},
                 {"seconds", clock.seconds()}};
  write_json(ctx.out_dir / "verify_identity.json", j);

  say(ctx, "max relative residual ", summary.max_relative_residual, " at t = ",
      summary.t_at_max_relative, " (tolerance ", c.diagnostics.tolerance, ")");
  if (c.diagnostics.envelope) say(ctx, "envelope ", envelope_ok ? "satisfied" : "violated");
  say(ctx, ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_oracle(const ExperimentConfig& c, const RunContext& ctx) {
  Stopwatch clock;
  const GaussianPath& path = require_gaussian(c);
  const GaussianState s0 = make_gaussian_state(path, c.t0, c.initial.mean, c.initial.variance);
  const auto& times = c.diagnostics.checkpoints;
  const auto chain = identity_residual_gaussian(path, s0, times, c.oracle.dt_ode,
                                                DerivativeMode::kChainRule);
  const auto fd = identity_residual_gaussian(path, s0, times, c.oracle.dt_ode,
                                             DerivativeMode::kFiniteDifference);
  const double chain_max = max_abs_residual(chain);
  const double fd_max = max_abs_residual(fd);
  const bool chain_ok = chain_max <= c.oracle.chain_rule_tolerance;
  const bool fd_ok = fd_max <= c.oracle.fd_tolerance;

  if (c.output.csv) {
    write_file_atomic(ctx.out_dir / "oracle.csv", [&](std::ostream& os) {
      os.precision(17);
      os << "t,kl,fisher,dt_term,kl_rate_chain,residual_chain,kl_rate_fd,residual_fd\n";
      auto opt = [&](const std::optional<double>& v) {
        if (v) os << *v;
      };
      for (std::size_t i = 0; i < chain.size(); ++i) {
        os << chain[i].t << ',' << chain[i].kl << ',' << chain[i].fisher << ','
           << chain[i].dt_term << ',';
        opt(chain[i].kl_rate);
        os << ',';
        opt(chain[i].residual);
        os << ',';
        opt(fd[i].kl_rate);
        os << ',';
        opt(fd[i].residual);
        os << '\n';
      }
    });
  }
  if (c.output.plots) {
    std::vector<double> t, kl, fi, dt, rc, rf;
    for (std::size_t i = 0; i < chain.size(); ++i) {
      t.push_back(chain[i].t);
      kl.push_back(chain[i].kl);
      fi.push_back(chain[i].fisher);
      dt.push_back(chain[i].dt_term);
      rc.push_back(chain[i].residual.value_or(std::nan("")));
      rf.push_back(fd[i].residual.value_or(std::nan("")));
    }
    write_text(ctx.out_dir / "oracle_terms.svg",
               render_line_plot("Gaussian oracle terms", "t",
                                {{"kl", t, kl}, {"fisher", t, fi}, {"dt_term", t, dt}}));
    write_text(ctx.out_dir / "oracle_residual.svg",
               render_line_plot("Gaussian oracle residual", "t",
                                {{"chain rule", t, rc}, {"finite difference", t, rf}}));
  }
  ordered_json j{{"command", "oracle"},
                 {"name", c.name},
                 {"points", times.size()},
                 {"chain_rule_max_abs_residual", chain_max},
                 {"chain_rule_tolerance", c.oracle.chain_rule_tolerance},
                 {"finite_difference_max_abs_residual", fd_max},
                 {"finite_difference_tolerance", c.oracle.fd_tolerance},
                 {"passed", chain_ok && fd_ok},
                 {"seconds", clock.seconds()}};
  write_json(ctx.out_dir / "oracle.json", j);

  say(ctx, "chain-rule max |residual| ", chain_max, " (tolerance ",
      c.oracle.chain_rule_tolerance, ")");
  say(ctx, "finite-difference max |residual| ", fd_max, " (tolerance ",
      c.oracle.fd_tolerance, ")");
  say(ctx, chain_ok && fd_ok ? "PASS" : "FAIL");
  return chain_ok && fd_ok ? kExitOk : kExitCheckFailed;
}

int cmd_check_assumptions(const ExperimentConfig& c, const RunContext& ctx) {
  Stopwatch clock;
  const auto& a = c.assumptions;
  const TargetFamily& family = *c.family.family;
  const Box box = Box::symmetric(family.dimension(), a.box_half_width);
  ProbeOptions probes;
  probes.lattice_per_axis = a.lattice_per_axis;
  probes.random_probes = a.random_probes;
  probes.seed = a.seed;
  probes.workers = a.workers;
  DissipativityOptions diss{a.target_a, a.b_max};
  const AssumptionReport r = check_assumptions(family, box, a.times, diss, probes);
  const auto& d = r.dissipativity;

  ordered_json j{{"command", "check-assumptions"},
                 {"name", c.name},
                 {"box_half_width", a.box_half_width},
                 {"times", vec(r.times)},
                 {"probes", r.probe_count},
                 {"differentiability",
                  {{"max_grad_error", r.differentiability.max_grad_error},
                   {"max_dt_error", r.differentiability.max_dt_error}}},
                 {"lipschitz_grad_p", r.lipschitz_estimate},
                 {"lipschitz_score", r.score_lipschitz_estimate},
                 {"growth_constant", r.growth_constant},
                 {"origin_dt_density", r.origin_dt_density},
                 {"dissipativity",
                  {{"a", d.a},
                   {"b", d.b},
                   {"b_max", d.b_max},
                   {"a_max", d.a_max},
                   {"a_zero_slack", d.a_zero_slack}}},
                 {"violation", nullptr},
                 {"seconds", clock.seconds()}};
  if (d.violation) {
    const auto& w = *d.violation;
    j["violation"] = {{"t", w.t}, {"x", vec(w.x)}, {"lhs", w.lhs}, {"rhs", w.rhs}};
  }
  write_json(ctx.out_dir / "assumptions.json", j);

  say(ctx, "probes            ", r.probe_count, " in [-", a.box_half_width, ", ",
      a.box_half_width, "]^", family.dimension(), " at ", r.times.size(), " times");
  say(ctx, "differentiability grad err ", r.differentiability.max_grad_error, ", dt err ",
      r.differentiability.max_dt_error);
  say(ctx, "lipschitz         grad p ", r.lipschitz_estimate, ", score ",
      r.score_lipschitz_estimate);
  say(ctx, "growth            c = ", r.growth_constant, " (|dt p(0)| = ",
      r.origin_dt_density, ")");
  say(ctx, "dissipativity     a = ", d.a, ", b = ", d.b, " (b_max ", d.b_max,
      ", a_max ", d.a_max, ", a with b = 0: ", d.a_zero_slack, ")");
  if (d.violation) {
    std::ostringstream x;
    for (std::size_t k = 0; k < d.violation->x.size(); ++k) {
      x << (k ? ", " : "") << d.violation->x[k];
    }
    say(ctx, "violation         t = ", d.violation->t, ", x = (", x.str(), "): ",
        d.violation->lhs, " < ", d.violation->rhs);
  }
  say(ctx, r.has_violation() ? "FAIL" : "PASS");
  return r.has_violation() ? kExitCheckFailed : kExitOk;
}

int cmd_simulate(const ExperimentConfig& c, const RunContext& ctx) {
  Stopwatch clock;
  const auto& s = c.simulation;
  const TargetFamily& family = *c.family.family;
  const bool binary = c.output.format == "binary";
  const ParticleEnsemble e0 =
      sample_gaussian_ensemble(s.particles, c.initial.mean, c.initial.variance, s.seed, c.t0);
  SimulateOptions opts;
  opts.dt = s.dt;
  opts.checkpoints = c.diagnostics.checkpoints;
  opts.em.diffusion_coefficient = s.diffusion_coefficient;
  opts.em.workers = s.workers;
  const auto ensembles = simulate(e0, family, c.t0, c.t1, opts);
  say(ctx, "simulated ", s.particles, " particles to t = ", c.t1, " in ",
      clock.seconds(), " s");

  if (s.snapshots) {
    for (std::size_t i = 0; i < ensembles.size(); ++i) {
      write_ensemble(ctx.out_dir / "snapshots", i, ensembles[i], binary);
    }
  }
  if (c.output.csv) {
    write_file_atomic(ctx.out_dir / "moments.csv", [&](std::ostream& os) {
      os.precision(17);
      const std::size_t d = family.dimension();
      os << "t";
      for (std::size_t k = 0; k < d; ++k) os << ",mean_" << k << ",se_" << k;
      os << '\n';
      for (const auto& e : ensembles) {
        const auto m = ensemble_mean(e);
        os << e.time;
        for (std::size_t k = 0; k < d; ++k) os << ',' << m.mean[k] << ',' << m.standard_error[k];
        os << '\n';
      }
    });
  }

  ordered_json j{{"command", "simulate"},
                 {"name", c.name},
                 {"particles", s.particles},
                 {"seed", s.seed},
                 {"dt", s.dt},
                 {"diffusion_coefficient", s.diffusion_coefficient},
                 {"checkpoints", ensembles.size()}};
  bool ok = true;
  if (s.compare_grid) {
    const Grid grid = solver_grid(c);
    const auto qs = run_solver(c, grid);
    std::vector<Comparison> rows;
    for (std::size_t i = 0; i < qs.size(); ++i) {
      rows.push_back(compare(ensembles[i], qs[i], family, s.histogram_coarsen));
      ok = ok && rows.back().pass;
    }
    if (c.output.csv) {
      write_file_atomic(ctx.out_dir / "comparison.csv", [&](std::ostream& os) {
        os.precision(17);
        os << "t,l1,l1_bar,kl_grid,kl_particles,kl_se,out_of_domain_fraction,pass\n";
        for (const auto& r : rows) {
          os << r.t << ',' << r.l1 << ',' << r.l1_bar << ',' << r.kl_grid << ','
             << r.kl_particles << ',' << r.kl_se << ',' << r.out_of_domain_fraction << ','
             << (r.pass ? 1 : 0) << '\n';
        }
      });
    }
    if (c.output.plots) {
      std::vector<double> t, kg, kp, l1, bar;
      for (const auto& r : rows) {
        t.push_back(r.t);
        kg.push_back(r.kl_grid);
        kp.push_back(r.kl_particles);
        l1.push_back(r.l1);
        bar.push_back(r.l1_bar);
      }
      write_text(ctx.out_dir / "comparison.svg",
                 render_line_plot("Particles vs grid", "t",
                                  {{"kl grid", t, kg},
                                   {"kl particles", t, kp},
                                   {"L1", t, l1},
                                   {"L1 bar", t, bar}}));
    }
    for (const auto& r : rows) {
      say(ctx, "t = ", r.t, ": L1 ", r.l1, " (bar ", r.l1_bar, "), KL grid ", r.kl_grid,
          ", particles ", r.kl_particles, " +- ", r.kl_se, r.pass ? "" : "  <- outside");
    }
    j["grid_cells"] = grid.cell_count();
    j["histogram_coarsen"] = s.histogram_coarsen;
    j["passed"] = ok;
  }
  j["seconds"] = clock.seconds();
  write_json(ctx.out_dir / "simulate.json", j);
  say(ctx, ok ? "PASS" : "FAIL");
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_fp_solve(const ExperimentConfig& c, const RunContext& ctx) {
  Stopwatch clock;
  const Grid grid = solver_grid(c);
  const auto qs = run_solver(c, grid);
  const bool binary = c.output.format == "binary";
  for (std::size_t i = 0; i < qs.size(); ++i) {
    write_density(ctx.out_dir / "densities", i, qs[i], binary);
  }
  auto records = records_for(qs, *c.family.family);
  if (records.size() >= 3) kl_time_derivative_fd(records);
  if (c.output.csv) write_records(ctx.out_dir / "records.csv", records);
  if (c.output.plots) plot_records(ctx.out_dir, records);

  ordered_json masses = ordered_json::array();
  for (const auto& q : qs) masses.push_back(q.mass());
  write_json(ctx.out_dir / "fp_solve.json",
             {{"command", "fp-solve"},
              {"name", c.name},
              {"cells", grid.cell_count()},
              {"checkpoints", qs.size()},
              {"mass", masses},
              {"seconds", clock.seconds()}});
  say(ctx, "wrote ", qs.size(), " densities on ", grid.cell_count(), " cells in ",
      clock.seconds(), " s");
  return kExitOk;
}

}  // namespace lkl::cli
