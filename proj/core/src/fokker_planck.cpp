#include "lkl/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lkl/error.hpp"

namespace lkl {

namespace {

// Face coefficients for one time level. For axis k and the face on the high
// side of cell c (valid when c is not the last cell along k):
//   out[c] = B(-z) / h^2   (weight of q_c leaving through the face)
//   in[c]  = B(z)  / h^2   (weight of q_{c+stride} entering cell c)
struct FaceTable {
  std::vector<std::vector<double>> out;
  std::vector<std::vector<double>> in;
  double max_score = 0.0;
};

// Returns {B(z), B(-z)}.
inline std::pair<double, double> bernoulli_pair(double z) {
  if (std::abs(z) < 1e-10) return {1.0 - 0.5 * z, 1.0 + 0.5 * z};
  const double em = std::expm1(z);
  const double b = z / em;
  return {b, b + z};
}

FaceTable face_table(const Grid& grid, const TargetFamily& family, double t) {
  if (family.dimension() != grid.dimension()) {
    throw InvalidArgument("fokker-planck: family and grid dimension differ");
  }
  const std::size_t n = grid.cell_count();
  std::vector<double> phi(n);
  std::vector<double> x(grid.dimension());
  for (std::size_t c = 0; c < n; ++c) {
    grid.center(c, x);
    phi[c] = family.log_density(t, x);
    if (!std::isfinite(phi[c])) {
      std::ostringstream os;
      os << "fokker-planck: log p_t is not finite at cell " << c << " (t=" << t
         << ")";
      throw NumericalError(os.str());
    }
  }
  FaceTable table;
  table.out.assign(grid.dimension(), std::vector<double>(n, 0.0));
  table.in.assign(grid.dimension(), std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < grid.dimension(); ++k) {
    const std::size_t s = grid.stride(k);
    const std::size_t m = grid.axis(k).cells;
    const double h = grid.axis(k).width();
    const double inv_h2 = 1.0 / (h * h);
    for (std::size_t c = 0; c < n; ++c) {
      if ((c / s) % m == m - 1) continue;
      const double z = phi[c + s] - phi[c];
      const auto [bz, bmz] = bernoulli_pair(z);
      table.out[k][c] = bmz * inv_h2;
      table.in[k][c] = bz * inv_h2;
      table.max_score = std::max(table.max_score, std::abs(z) / h);
    }
  }
  return table;
}

double limit_from_table(const Grid& grid, const FaceTable& table) {
  const std::size_t n = grid.cell_count();
  const double d = static_cast<double>(grid.dimension());
  double h_min = std::numeric_limits<double>::infinity();
  for (const auto& a : grid.axes()) h_min = std::min(h_min, a.width());

  // Diagonal of the update is 1 - dt * leave[c].
  double leave_max = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double leave = 0.0;
    for (std::size_t k = 0; k < grid.dimension(); ++k) {
      const std::size_t s = grid.stride(k);
      leave += table.out[k][c];
      if ((c / s) % grid.axis(k).cells != 0) leave += table.in[k][c - s];
    }
    leave_max = std::max(leave_max, leave);
  }
  double limit = h_min * h_min / (2.0 * d);
  if (table.max_score > 0.0) limit = std::min(limit, h_min / table.max_score);
  if (leave_max > 0.0) limit = std::min(limit, 1.0 / leave_max);
  return limit;
}

void apply_step(const Grid& grid, const FaceTable& table,
                const std::vector<double>& q, std::vector<double>& next,
                double dt) {
  next = q;
  const std::size_t n = grid.cell_count();
  for (std::size_t k = 0; k < grid.dimension(); ++k) {
    const std::size_t s = grid.stride(k);
    const std::size_t m = grid.axis(k).cells;
    const auto& out = table.out[k];
    const auto& in = table.in[k];
    for (std::size_t c = 0; c < n; ++c) {
      if ((c / s) % m == m - 1) continue;
      // dt/h * F, F = (B(-z) q_c - B(z) q_{c+s}) / h
      const double transfer = dt * (out[c] * q[c] - in[c] * q[c + s]);
      next[c] -= transfer;
      next[c + s] += transfer;
    }
  }
}

void check_dt(double dt, double limit) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("fokker-planck: dt must be positive and finite");
  }
  if (dt > limit * (1.0 + 1e-12)) throw StabilityError(dt, limit);
}

}  // namespace

std::vector<double> validated_checkpoints(double t0, double t1,
                                          std::vector<double> checkpoints) {
  if (!std::isfinite(t0) || !std::isfinite(t1) || t1 < t0) {
    throw InvalidArgument("time interval must satisfy t0 <= t1");
  }
  if (checkpoints.empty()) return {t1};
  double prev = t0;
  for (double c : checkpoints) {
    if (!(c >= t0 && c <= t1)) {
      std::ostringstream os;
      os << "checkpoint " << c << " lies outside [" << t0 << ", " << t1 << "]";
      throw InvalidArgument(os.str());
    }
    if (c < prev) throw InvalidArgument("checkpoints must be nondecreasing");
    prev = c;
  }
  return checkpoints;
}

double stability_limit(const GridDensity& q, const TargetFamily& family) {
  return limit_from_table(q.grid, face_table(q.grid, family, q.time));
}

GridDensity fp_step(const GridDensity& q, const TargetFamily& family,
                    double dt) {
  const FaceTable table = face_table(q.grid, family, q.time);
  check_dt(dt, limit_from_table(q.grid, table));
  std::vector<double> next;
  apply_step(q.grid, table, q.values, next, dt);
  return GridDensity(q.grid, std::move(next), q.time + dt);
}

std::vector<GridDensity> fp_solve(const GridDensity& q0,
                                  const TargetFamily& family, double t0,
                                  double t1, const FpSolveOptions& options) {
  const auto checkpoints = validated_checkpoints(t0, t1, options.checkpoints);
  if (options.dt && !(*options.dt > 0.0)) {
    throw InvalidArgument("fp_solve: dt must be positive");
  }
  if (!(options.safety > 0.0 && options.safety <= 1.0)) {
    throw InvalidArgument("fp_solve: safety must lie in (0, 1]");
  }

  std::vector<GridDensity> result;
  result.reserve(checkpoints.size());
  const Grid& grid = q0.grid;
  std::vector<double> q = q0.values;
  std::vector<double> next;
  double t = t0;

  for (double target : checkpoints) {
    while (t < target) {
      const FaceTable table = face_table(grid, family, t);
      const double limit = limit_from_table(grid, table);
      double step = options.dt ? *options.dt : options.safety * limit;
      bool lands = false;
      if (target - t <= step * (1.0 + 1e-9)) {
        step = target - t;
        lands = true;
      }
      check_dt(step, limit);
      apply_step(grid, table, q, next, step);
      q.swap(next);
      t = lands ? target : t + step;
      if (options.on_step) options.on_step(GridDensity(grid, q, t));
    }
    result.emplace_back(grid, q, target);
  }
  return result;
}

}  // namespace lkl
