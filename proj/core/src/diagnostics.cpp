#include "lkl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "lkl/error.hpp"

namespace lkl {

namespace {

// log of the smallest positive double; p_t below this underflows to zero.
const double kLogUnderflow = std::log(std::numeric_limits<double>::denorm_min());

void check_dimension(const GridDensity& q, const TargetFamily& family) {
  if (q.grid.dimension() != family.dimension()) {
    throw InvalidArgument("diagnostics: density and family dimension differ");
  }
}

}  // namespace

double kl_divergence(const GridDensity& q, const TargetFamily& family) {
  check_dimension(q, family);
  const Grid& grid = q.grid;
  std::vector<double> x(grid.dimension());
  double sum = 0.0;
  for (std::size_t c = 0; c < q.values.size(); ++c) {
    const double v = q.values[c];
    if (v < kZeroDensityFloor) continue;
    grid.center(c, x);
    const double log_p = family.log_density(q.time, x);
    if (!std::isfinite(log_p) || log_p < kLogUnderflow) {
      if (v > kFisherFloor) {
        std::ostringstream os;
        os << "kl_divergence: target underflows at cell " << c
           << " where q = " << v;
        throw NumericalError(os.str());
      }
      if (!std::isfinite(log_p)) continue;
    }
    sum += v * (std::log(v) - log_p);
  }
  return sum * grid.cell_volume();
}

FisherInformation relative_fisher_information(const GridDensity& q,
                                              const TargetFamily& family) {
  check_dimension(q, family);
  const Grid& grid = q.grid;
  const std::size_t d = grid.dimension();
  std::vector<double> x(d);
  std::vector<double> score(d);
  FisherInformation out;
  double sum = 0.0;
  double excluded = 0.0;

  auto positive = [&](std::size_t c) { return q.values[c] >= kZeroDensityFloor; };

  for (std::size_t c = 0; c < q.values.size(); ++c) {
    const double v = q.values[c];
    if (v < kFisherFloor) {
      excluded += v;
      continue;
    }
    grid.center(c, x);
    family.grad_log_density(q.time, x, score);
    const double log_v = std::log(v);
    double integrand = 0.0;
    bool usable = true;
    for (std::size_t k = 0; k < d; ++k) {
      const std::size_t s = grid.stride(k);
      const std::size_t i = (c / s) % grid.axis(k).cells;
      const double h = grid.axis(k).width();
      const bool has_lo = i > 0 && positive(c - s);
      const bool has_hi = i + 1 < grid.axis(k).cells && positive(c + s);
      double g = 0.0;
      if (has_lo && has_hi) {
        g = (std::log(q.values[c + s]) - std::log(q.values[c - s])) / (2.0 * h);
      } else if (has_hi) {
        g = (std::log(q.values[c + s]) - log_v) / h;
      } else if (has_lo) {
        g = (log_v - std::log(q.values[c - s])) / h;
      } else {
        usable = false;
        break;
      }
      const double diff = g - score[k];
      integrand += diff * diff;
    }
    if (!usable) {
      excluded += v;
      continue;
    }
    sum += v * integrand;
  }
  out.value = sum * grid.cell_volume();
  out.excluded_mass = excluded * grid.cell_volume();
  out.warning = out.excluded_mass > kExcludedMassWarning;
  if (out.excluded_mass > kExcludedMassError) {
    std::ostringstream os;
    os << "relative_fisher_information: excluded mass " << out.excluded_mass
       << " exceeds " << kExcludedMassError;
    throw NumericalError(os.str());
  }
  return out;
}

double expected_dt_log_p(const GridDensity& q, const TargetFamily& family) {
  check_dimension(q, family);
  const Grid& grid = q.grid;
  std::vector<double> x(grid.dimension());
  double sum = 0.0;
  for (std::size_t c = 0; c < q.values.size(); ++c) {
    const double v = q.values[c];
    if (v == 0.0) continue;
    grid.center(c, x);
    sum += v * family.dt_log_density(q.time, x);
  }
  return sum * grid.cell_volume();
}

DiagnosticsRecord compute_record(const GridDensity& q,
                                 const TargetFamily& family) {
  DiagnosticsRecord r;
  r.t = q.time;
  r.kl = kl_divergence(q, family);
  if (r.kl < -kNegativeKlTolerance) {
    r.kl = 0.0;
    r.kl_clamped = true;
  }
  const auto fisher = relative_fisher_information(q, family);
  r.fisher = fisher.value;
  r.excluded_mass = fisher.excluded_mass;
  r.dt_term = expected_dt_log_p(q, family);
  return r;
}

void kl_time_derivative_fd(std::vector<DiagnosticsRecord>& records) {
  if (records.size() < 3) {
    throw InvalidArgument("kl_time_derivative_fd: needs at least 3 records");
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (!(records[i].t > records[i - 1].t)) {
      throw InvalidArgument(
          "kl_time_derivative_fd: times must be strictly increasing (duplicate "
          "or unordered time)");
    }
  }
  records.front().kl_fd.reset();
  records.back().kl_fd.reset();
  for (std::size_t i = 1; i + 1 < records.size(); ++i) {
    records[i].kl_fd = (records[i + 1].kl - records[i - 1].kl) /
                       (records[i + 1].t - records[i - 1].t);
  }
}

IdentitySummary verify_identity(std::vector<DiagnosticsRecord>& records) {
  IdentitySummary s;
  for (auto& r : records) {
    if (!r.kl_fd) {
      r.residual.reset();
      r.relative_residual.reset();
      continue;
    }
    const double res = *r.kl_fd - (-r.fisher - r.dt_term);
    const double scale =
        std::max({r.fisher, std::abs(r.dt_term), kResidualScaleFloor});
    r.residual = res;
    r.relative_residual = std::abs(res) / scale;
    s.max_abs_residual = std::max(s.max_abs_residual, std::abs(res));
    if (s.evaluated == 0 || *r.relative_residual > s.max_relative_residual) {
      s.max_relative_residual = *r.relative_residual;
      s.t_at_max_relative = r.t;
    }
    ++s.evaluated;
  }
  return s;
}

EnvelopeReport check_envelope(const GridDensity& q, double c1, double c2) {
  if (!(c1 > 0.0) || !(c2 > 0.0)) {
    throw InvalidArgument("check_envelope: c1 and c2 must be positive");
  }
  EnvelopeReport rep;
  rep.c1 = c1;
  rep.c2 = c2;
  const Grid& grid = q.grid;
  std::vector<double> x(grid.dimension());
  double worst = 0.0;
  for (std::size_t c = 0; c < q.values.size(); ++c) {
    grid.center(c, x);
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double v = q.values[c];
    const double log_q =
        v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    const double log_upper = -c2 * r2;
    const double log_lower = -c1 * (r2 + 1.0);
    const double upper_excess = log_q - log_upper;
    const double lower_excess = log_lower - log_q;
    if (upper_excess > 0.0 && upper_excess > worst) {
      worst = upper_excess;
      rep.worst_violation = EnvelopeViolation{x, v, std::exp(log_upper), false};
    }
    if (lower_excess > 0.0 && lower_excess > worst) {
      worst = lower_excess;
      rep.worst_violation = EnvelopeViolation{x, v, std::exp(log_lower), true};
    }
  }
  rep.satisfied = !rep.worst_violation.has_value();
  return rep;
}

void write_records_csv(std::ostream& os,
                       const std::vector<DiagnosticsRecord>& records) {
  const auto old = os.precision(17);
  os << "t,kl,fisher,dt_term,kl_fd,residual,relative_residual,excluded_mass\n";
  auto opt = [&](const std::optional<double>& v) {
    if (v) os << *v;
  };
  for (const auto& r : records) {
    os << r.t << ',' << r.kl << ',' << r.fisher << ',' << r.dt_term << ',';
    opt(r.kl_fd);
    os << ',';
    opt(r.residual);
    os << ',';
    opt(r.relative_residual);
    os << ',' << r.excluded_mass << '\n';
  }
  os.precision(old);
}

std::vector<DiagnosticsRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) ||
      line != "t,kl,fisher,dt_term,kl_fd,residual,relative_residual,excluded_mass") {
    throw InvalidArgument("records csv: unexpected header");
  }
  std::vector<DiagnosticsRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 8) throw InvalidArgument("records csv: expected 8 fields");
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return std::stod(s);
    };
    DiagnosticsRecord r;
    r.t = std::stod(f[0]);
    r.kl = std::stod(f[1]);
    r.fisher = std::stod(f[2]);
    r.dt_term = std::stod(f[3]);
    r.kl_fd = opt(f[4]);
    r.residual = opt(f[5]);
    r.relative_residual = opt(f[6]);
    r.excluded_mass = std::stod(f[7]);
    out.push_back(r);
  }
  return out;
}

}  // namespace lkl
