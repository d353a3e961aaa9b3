#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lkl/target_family.hpp"

namespace lkl {

inline constexpr std::size_t kDefaultCellBudget = std::size_t{1} << 22;
inline constexpr std::size_t kMinCellsPerAxis = 8;

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t cells = kMinCellsPerAxis;

  double width() const { return (hi - lo) / static_cast<double>(cells); }
  double center(std::size_t i) const {
    return lo + (static_cast<double>(i) + 0.5) * width();
  }
};

// Uniform tensor-product grid in one or two dimensions. Cells are stored
// row-major: the last axis varies fastest.
class Grid {
 public:
  explicit Grid(std::vector<Axis> axes,
                std::size_t cell_budget = kDefaultCellBudget);

  std::size_t dimension() const { return axes_.size(); }
  const std::vector<Axis>& axes() const { return axes_; }
  const Axis& axis(std::size_t k) const { return axes_[k]; }
  std::size_t cell_count() const { return cell_count_; }
  double cell_volume() const { return cell_volume_; }
  // Distance between neighbouring cells along axis k in the flat index.
  std::size_t stride(std::size_t k) const { return strides_[k]; }

  void center(std::size_t cell, std::span<double> out) const;
  std::vector<double> center(std::size_t cell) const;
  // Flat index of the cell containing x, or npos when outside.
  std::size_t locate(std::span<const double> x) const;

  bool operator==(const Grid& other) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t cell_count_ = 0;
  double cell_volume_ = 0.0;
};

// Cell-averaged density on a grid at time t.
struct GridDensity {
  Grid grid;
  std::vector<double> values;
  double time = 0.0;

  GridDensity(Grid g, std::vector<double> v, double t);

  double mass() const;
  double min_value() const;
};

// Grid covering the support hint of `family` over [t0, t1] padded by
// padding_sigmas * max scale on each side, with `cells_per_axis` cells.
Grid build_grid(const TargetFamily& family, double t0, double t1,
                double padding_sigmas, std::size_t cells_per_axis,
                std::size_t cell_budget = kDefaultCellBudget);
Grid build_grid(const SupportHint& hint, double padding_sigmas,
                std::size_t cells_per_axis,
                std::size_t cell_budget = kDefaultCellBudget);

// Evaluates a log-density at cell centres, exponentiates relative to the
// maximum and renormalises to unit mass.
GridDensity discretize(const Grid& grid,
                       const std::function<double(std::span<const double>)>&
                           log_density,
                       double t);
GridDensity discretize(const Grid& grid, const TargetFamily& family, double t);
GridDensity discretize_gaussian(const Grid& grid, std::span<const double> mean,
                                double variance, double t);

// Sums blocks of `factor` cells per axis into one coarse cell.
GridDensity coarsen(const GridDensity& q, std::size_t factor);

// Sum over cells of |a - b| * h^d. Grids must match.
double l1_distance(const GridDensity& a, const GridDensity& b);

}  // namespace lkl
