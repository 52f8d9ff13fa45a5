#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "cqm/fields.hpp"

namespace cqm {

/// A box chart of spacetime adapted to the time fibring.
///
/// `extent[a]` gives the walls of axis a. Grid nodes are strictly inside the
/// walls: node i sits at lo + (i + 1) * h with h = (hi - lo) / (points + 1),
/// so homogeneous Dirichlet data lives on the walls.
struct FibredChart {
  int n = 1;
  std::vector<std::pair<double, double>> extent;
  std::vector<int> points;
  double time_step = 1e-3;
  double t0 = 0.0;

  /// Throws StructuralError when the invariants fail.
  void check() const;
  bool contains(const Vec& x) const;
};

/// Flattened node indexing over a chart's spatial grid (last axis fastest).
class Grid {
 public:
  Grid() = default;
  explicit Grid(const FibredChart& chart);

  int dim() const { return dim_; }
  std::ptrdiff_t size() const { return size_; }
  int points(int axis) const { return points_[static_cast<std::size_t>(axis)]; }
  double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
  double lower(int axis) const { return lower_[static_cast<std::size_t>(axis)]; }
  double coordinate(int axis, int i) const { return lower(axis) + (i + 1) * spacing(axis); }
  double cell_volume() const;

  std::ptrdiff_t stride(int axis) const { return stride_[static_cast<std::size_t>(axis)]; }
  /// Multi-index of a flat node index.
  std::array<int, 3> unflatten(std::ptrdiff_t k) const;
  std::ptrdiff_t flatten(const std::array<int, 3>& idx) const;
  Vec point(std::ptrdiff_t k) const;
  /// Distance (in nodes) to the nearest wall.
  int wall_distance(std::ptrdiff_t k) const;

  bool same_as(const Grid& other) const;

 private:
  int dim_ = 0;
  std::ptrdiff_t size_ = 0;
  std::vector<int> points_;
  std::vector<double> spacing_;
  std::vector<double> lower_;
  std::vector<std::ptrdiff_t> stride_;
};

}  // namespace cqm
