#include "lkl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "lkl/error.hpp"

namespace lkl {

Grid::Grid(std::vector<Axis> axes, std::size_t cell_budget)
    : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 2) {
    throw InvalidArgument("grid dimension must be 1 or 2");
  }
  cell_count_ = 1;
  cell_volume_ = 1.0;
  for (const auto& a : axes_) {
    if (a.cells < kMinCellsPerAxis) {
      throw InvalidArgument("grid needs at least 8 cells per axis");
    }
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || !(a.hi > a.lo)) {
      throw InvalidArgument("grid axis must satisfy lo < hi (degenerate domain)");
    }
    if (cell_count_ > cell_budget / a.cells) {
      std::ostringstream os;
      os << "grid exceeds the cell budget of " << cell_budget << " cells";
      throw InvalidArgument(os.str());
    }
    cell_count_ *= a.cells;
    cell_volume_ *= a.width();
  }
  if (cell_count_ > cell_budget) {
    std::ostringstream os;
    os << "grid exceeds the cell budget of " << cell_budget << " cells";
    throw InvalidArgument(os.str());
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t k = axes_.size() - 1; k-- > 0;) {
    strides_[k] = strides_[k + 1] * axes_[k + 1].cells;
  }
}

void Grid::center(std::size_t cell, std::span<double> out) const {
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const std::size_t i = (cell / strides_[k]) % axes_[k].cells;
    out[k] = axes_[k].center(i);
  }
}

std::vector<double> Grid::center(std::size_t cell) const {
  std::vector<double> x(axes_.size());
  center(cell, x);
  return x;
}

std::size_t Grid::locate(std::span<const double> x) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const auto& a = axes_[k];
    if (!(x[k] >= a.lo) || !(x[k] < a.hi)) return npos;
    auto i = static_cast<std::size_t>((x[k] - a.lo) / a.width());
    i = std::min(i, a.cells - 1);
    idx += i * strides_[k];
  }
  return idx;
}

bool Grid::operator==(const Grid& other) const {
  if (axes_.size() != other.axes_.size()) return false;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    if (axes_[k].lo != other.axes_[k].lo || axes_[k].hi != other.axes_[k].hi ||
        axes_[k].cells != other.axes_[k].cells) {
      return false;
    }
  }
  return true;
}

GridDensity::GridDensity(Grid g, std::vector<double> v, double t)
    : grid(std::move(g)), values(std::move(v)), time(t) {
  if (values.size() != grid.cell_count()) {
    throw InvalidArgument("grid density: value count does not match the grid");
  }
}

double GridDensity::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

double GridDensity::min_value() const {
  return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

Grid build_grid(const SupportHint& hint, double padding_sigmas,
                std::size_t cells_per_axis, std::size_t cell_budget) {
  if (!(padding_sigmas > 0.0) || !std::isfinite(padding_sigmas)) {
    throw InvalidArgument("build_grid: padding_sigmas must be positive");
  }
  if (!(hint.max_scale > 0.0)) {
    throw InvalidArgument("build_grid: support scale must be positive");
  }
  std::vector<Axis> axes;
  for (std::size_t k = 0; k < hint.center_lo.size(); ++k) {
    const double pad = padding_sigmas * hint.max_scale;
    axes.push_back(Axis{hint.center_lo[k] - pad, hint.center_hi[k] + pad,
                        cells_per_axis});
  }
  return Grid(std::move(axes), cell_budget);
}

Grid build_grid(const TargetFamily& family, double t0, double t1,
                double padding_sigmas, std::size_t cells_per_axis,
                std::size_t cell_budget) {
  if (t1 < t0) throw InvalidArgument("build_grid: t1 < t0");
  return build_grid(family.support(t0, t1), padding_sigmas, cells_per_axis,
                    cell_budget);
}

GridDensity discretize(
    const Grid& grid,
    const std::function<double(std::span<const double>)>& log_density,
    double t) {
  std::vector<double> logs(grid.cell_count());
  std::vector<double> x(grid.dimension());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < logs.size(); ++c) {
    grid.center(c, x);
    logs[c] = log_density(x);
    peak = std::max(peak, logs[c]);
  }
  if (!std::isfinite(peak)) {
    throw NumericalError("discretize: density vanishes on the whole grid");
  }
  double total = 0.0;
  for (double& v : logs) {
    v = std::exp(v - peak);
    total += v;
  }
  const double scale = 1.0 / (total * grid.cell_volume());
  for (double& v : logs) v *= scale;
  return GridDensity(grid, std::move(logs), t);
}

GridDensity discretize(const Grid& grid, const TargetFamily& family, double t) {
  return discretize(
      grid, [&](std::span<const double> x) { return family.log_density(t, x); },
      t);
}

GridDensity discretize_gaussian(const Grid& grid, std::span<const double> mean,
                                double variance, double t) {
  if (mean.size() != grid.dimension()) {
    throw InvalidArgument("discretize_gaussian: mean dimension mismatch");
  }
  if (!(variance > 0.0)) {
    throw InvalidArgument("discretize_gaussian: variance must be positive");
  }
  std::vector<double> m(mean.begin(), mean.end());
  return discretize(
      grid,
      [&](std::span<const double> x) {
        double r2 = 0.0;
        for (std::size_t k = 0; k < m.size(); ++k) {
          r2 += (x[k] - m[k]) * (x[k] - m[k]);
        }
        return -0.5 * r2 / variance;
      },
      t);
}

GridDensity coarsen(const GridDensity& q, std::size_t factor) {
  if (factor == 0) throw InvalidArgument("coarsen: factor must be >= 1");
  const Grid& fine = q.grid;
  std::vector<Axis> axes;
  for (const auto& a : fine.axes()) {
    if (a.cells % factor != 0) {
      throw InvalidArgument("coarsen: cell count not divisible by factor");
    }
    axes.push_back(Axis{a.lo, a.hi, a.cells / factor});
  }
  Grid coarse(std::move(axes), fine.cell_count());
  std::vector<double> values(coarse.cell_count(), 0.0);
  for (std::size_t c = 0; c < fine.cell_count(); ++c) {
    std::size_t target = 0;
    for (std::size_t k = 0; k < fine.dimension(); ++k) {
      const std::size_t i = (c / fine.stride(k)) % fine.axis(k).cells;
      target += (i / factor) * coarse.stride(k);
    }
    values[target] += q.values[c];
  }
  const double ratio = fine.cell_volume() / coarse.cell_volume();
  for (double& v : values) v *= ratio;
  return GridDensity(std::move(coarse), std::move(values), q.time);
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
  if (!(a.grid == b.grid)) throw InvalidArgument("l1_distance: grid mismatch");
  double s = 0.0;
  for (std::size_t c = 0; c < a.values.size(); ++c) {
    s += std::abs(a.values[c] - b.values[c]);
  }
  return s * a.grid.cell_volume();
}

}  // namespace lkl
