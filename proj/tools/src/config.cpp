#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lkl/error.hpp"
#include "lkl/fokker_planck.hpp"

namespace lkl::cli {

namespace {

using nlohmann::json;

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Object view that records which keys were read; finish() rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label(), "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(join(path_, key), "missing key");
    return j_.at(key);
  }

  Section sub(const std::string& key) { return Section(raw(key), join(path_, key)); }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(join(path_, key), "must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  double positive(const std::string& key, double fallback) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(join(path_, key), "must be > 0");
    return x;
  }

  std::uint64_t count(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(join(path_, key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) {
    return has(key) ? count(key) : fallback;
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  std::vector<double> vector(const std::string& key) {
    const json& v = raw(key);
    const std::string p = join(path_, key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array() || v.empty()) {
      throw ConfigError(p, "expected a number or a nonempty array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(p + "[" + std::to_string(i) + "]", "expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(join(path_, key), "unknown key");
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto rethrow_at(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
}

Schedule parse_schedule(Section& parent) {
  if (!parent.has("schedule")) return Schedule{};
  Section s = parent.sub("schedule");
  const std::string kind = s.text("kind", "smoothstep");
  Interpolation interp;
  if (kind == "linear") {
    interp = Interpolation::kLinear;
  } else if (kind == "smoothstep") {
    interp = Interpolation::kSmoothstep;
  } else {
    throw ConfigError(join(s.path(), "kind"), "expected 'linear' or 'smoothstep'");
  }
  const double start = s.number("start", 0.0);
  const double end = s.number("end", 1.0);
  s.finish();
  return rethrow_at(s.path(), [&] { return Schedule(interp, start, end); });
}

FamilySpec parse_family(Section f) {
  FamilySpec out;
  out.kind = f.text("kind");
  if (out.kind == "gaussian-path") {
    auto m0 = f.vector("mean_start");
    auto m1 = f.has("mean_end") ? f.vector("mean_end") : m0;
    const double v0 = f.positive("var_start", 1.0);
    const double v1 = f.positive("var_end", v0);
    const Schedule sched = parse_schedule(f);
    out.flip_score_sign = f.flag("flip_score_sign", false);
    f.finish();
    out.gaussian = rethrow_at(f.path(), [&] {
      return make_gaussian_path(std::move(m0), std::move(m1), v0, v1, sched);
    });
    out.family = out.gaussian;
  } else if (out.kind == "gaussian-mixture-path") {
    const double var = f.positive("variance", 1.0);
    const json& comps = f.raw("components");
    const std::string cpath = join(f.path(), "components");
    if (!comps.is_array() || comps.empty()) {
      throw ConfigError(cpath, "expected a nonempty array");
    }
    std::vector<MixtureComponent> components;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      Section c(comps[i], cpath + "[" + std::to_string(i) + "]");
      MixtureComponent mc;
      mc.weight = c.positive("weight", 1.0);
      mc.mean_start = c.vector("mean_start");
      mc.mean_end = c.has("mean_end") ? c.vector("mean_end") : mc.mean_start;
      mc.schedule = parse_schedule(c);
      c.finish();
      components.push_back(std::move(mc));
    }
    out.flip_score_sign = f.flag("flip_score_sign", false);
    f.finish();
    out.family = rethrow_at(f.path(), [&] {
      return make_gaussian_mixture_path(std::move(components), var);
    });
  } else {
    throw ConfigError(join(f.path(), "kind"),
                      "expected 'gaussian-path' or 'gaussian-mixture-path'");
  }
  if (out.family->dimension() > 2) {
    throw ConfigError(f.path(), "dimension must be 1 or 2");
  }
  if (out.flip_score_sign) {
    out.family = std::make_shared<FlippedScore>(out.family);
  }
  return out;
}

std::vector<double> parse_times(Section& parent, const std::string& key) {
  const json& v = parent.raw(key);
  const std::string p = join(parent.path(), key);
  if (v.is_object()) {
    Section r(v, p);
    const double start = r.number("start");
    const double end = r.number("end");
    const double step = r.positive("step", 1.0);
    r.finish();
    if (end < start) throw ConfigError(join(p, "end"), "must be >= start");
    const auto n = static_cast<std::size_t>(std::llround((end - start) / step));
    if (std::abs(start + static_cast<double>(n) * step - end) > 1e-9 * std::max(1.0, std::abs(end))) {
      throw ConfigError(join(p, "step"), "must divide end - start");
    }
    if (n > 10'000'000) throw ConfigError(join(p, "step"), "too many checkpoints");
    std::vector<double> out(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out[i] = start + static_cast<double>(i) * step;
    out.back() = end;
    return out;
  }
  return parent.vector(key);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  Section top(root, "");
  ExperimentConfig c;
  c.name = top.text("name", "experiment");
  c.family = parse_family(top.sub("family"));
  const std::size_t d = c.family.family->dimension();

  if (top.has("time")) {
    Section t = top.sub("time");
    c.t0 = t.number("start", 0.0);
    c.t1 = t.number("end", 1.0);
    t.finish();
    if (!(c.t1 > c.t0)) throw ConfigError("time.end", "must be > time.start");
  }

  {
    Section q = top.sub("initial");
    c.initial.mean = q.vector("mean");
    c.initial.variance = q.positive("variance", 1.0);
    q.finish();
    if (c.initial.mean.size() == 1 && d == 2) c.initial.mean.resize(2, c.initial.mean[0]);
    if (c.initial.mean.size() != d) {
      throw ConfigError("initial.mean", "dimension does not match the family");
    }
  }

  if (top.has("solver")) {
    Section s = top.sub("solver");
    c.solver.cells = s.count("cells", c.solver.cells);
    if (c.solver.cells < kMinCellsPerAxis) {
      throw ConfigError("solver.cells", "must be >= " + std::to_string(kMinCellsPerAxis));
    }
    c.solver.padding_sigmas = s.positive("padding_sigmas", c.solver.padding_sigmas);
    if (s.has("dt")) {
      const json& v = s.raw("dt");
      if (v.is_string() && v.get<std::string>() == "auto") {
        c.solver.dt.reset();
      } else if (v.is_number() && v.get<double>() > 0.0) {
        c.solver.dt = v.get<double>();
      } else {
        throw ConfigError("solver.dt", "expected \"auto\" or a positive number");
      }
    }
    c.solver.safety = s.positive("safety", c.solver.safety);
    if (c.solver.safety > 1.0) throw ConfigError("solver.safety", "must be <= 1");
    c.solver.cell_budget = s.count("cell_budget", c.solver.cell_budget);
    s.finish();
  }

  if (top.has("simulation")) {
    Section s = top.sub("simulation");
    c.simulation.particles = s.count("particles", c.simulation.particles);
    if (c.simulation.particles == 0) throw ConfigError("simulation.particles", "must be >= 1");
    c.simulation.seed = s.count("seed", c.simulation.seed);
    c.simulation.dt = s.positive("dt", c.simulation.dt);
    c.simulation.diffusion_coefficient =
        s.number("diffusion_coefficient", c.simulation.diffusion_coefficient);
    if (c.simulation.diffusion_coefficient != 1.0 &&
        c.simulation.diffusion_coefficient != 2.0) {
      throw ConfigError("simulation.diffusion_coefficient", "must be 1.0 or 2.0");
    }
    c.simulation.workers = s.count("workers", c.simulation.workers);
    if (c.simulation.workers == 0) throw ConfigError("simulation.workers", "must be >= 1");
    c.simulation.compare_grid = s.flag("compare_grid", c.simulation.compare_grid);
    c.simulation.histogram_coarsen = s.count("histogram_coarsen", c.simulation.histogram_coarsen);
    if (c.simulation.histogram_coarsen == 0 ||
        c.solver.cells % c.simulation.histogram_coarsen != 0) {
      throw ConfigError("simulation.histogram_coarsen", "must divide solver.cells");
    }
    c.simulation.snapshots = s.flag("write_snapshots", c.simulation.snapshots);
    s.finish();
  }

  if (top.has("diagnostics")) {
    Section s = top.sub("diagnostics");
    if (s.has("checkpoints")) c.diagnostics.checkpoints = parse_times(s, "checkpoints");
    c.diagnostics.tolerance = s.number("tolerance", c.diagnostics.tolerance);
    if (c.diagnostics.tolerance < 0.0) throw ConfigError("diagnostics.tolerance", "must be >= 0");
    if (s.has("envelope")) {
      Section e = s.sub("envelope");
      EnvelopeSpec env;
      env.c1 = e.positive("c1", env.c1);
      env.c2 = e.positive("c2", env.c2);
      e.finish();
      c.diagnostics.envelope = env;
    }
    s.finish();
  }
  c.diagnostics.checkpoints = rethrow_at("diagnostics.checkpoints", [&] {
    return validated_checkpoints(c.t0, c.t1, c.diagnostics.checkpoints);
  });

  if (top.has("oracle")) {
    Section s = top.sub("oracle");
    c.oracle.dt_ode = s.positive("dt_ode", c.oracle.dt_ode);
    c.oracle.chain_rule_tolerance = s.positive("chain_rule_tolerance", c.oracle.chain_rule_tolerance);
    c.oracle.fd_tolerance = s.positive("fd_tolerance", c.oracle.fd_tolerance);
    s.finish();
  }

  c.assumptions.times = {c.t0, 0.5 * (c.t0 + c.t1), c.t1};
  if (top.has("assumptions")) {
    Section s = top.sub("assumptions");
    c.assumptions.box_half_width = s.positive("box_half_width", c.assumptions.box_half_width);
    if (s.has("times")) c.assumptions.times = s.vector("times");
    c.assumptions.target_a = s.positive("target_a", c.assumptions.target_a);
    if (s.has("b_max")) {
      c.assumptions.b_max = s.number("b_max");
      if (*c.assumptions.b_max < 0.0) throw ConfigError("assumptions.b_max", "must be >= 0");
    }
    c.assumptions.lattice_per_axis = s.count("lattice_per_axis", c.assumptions.lattice_per_axis);
    c.assumptions.random_probes = s.count("random_probes", c.assumptions.random_probes);
    c.assumptions.seed = s.count("seed", c.assumptions.seed);
    c.assumptions.workers = s.count("workers", c.assumptions.workers);
    if (c.assumptions.workers == 0) throw ConfigError("assumptions.workers", "must be >= 1");
    s.finish();
  }

  if (top.has("output")) {
    Section s = top.sub("output");
    c.output.directory = s.text("directory", c.output.directory);
    c.output.csv = s.flag("csv", c.output.csv);
    c.output.plots = s.flag("plots", c.output.plots);
    c.output.format = s.text("format", c.output.format);
    if (c.output.format != "csv" && c.output.format != "binary") {
      throw ConfigError("output.format", "expected 'csv' or 'binary'");
    }
    s.finish();
  }

  top.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace lkl::cli
