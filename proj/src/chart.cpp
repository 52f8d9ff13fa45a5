#include "cqm/chart.hpp"

#include <algorithm>
#include <string>

#include "cqm/errors.hpp"

namespace cqm {

void FibredChart::check() const {
  if (n < 1 || n > 3) throw StructuralError("chart dimension must be 1, 2 or 3");
  if (static_cast<int>(extent.size()) != n || static_cast<int>(points.size()) != n)
    throw StructuralError("chart extent/points must have one entry per axis");
  for (int a = 0; a < n; ++a) {
    if (!(extent[static_cast<std::size_t>(a)].second > extent[static_cast<std::size_t>(a)].first))
      throw StructuralError("axis " + std::to_string(a + 1) + " has non-positive length");
    if (points[static_cast<std::size_t>(a)] < 4)
      throw StructuralError("axis " + std::to_string(a + 1) + " needs at least 4 grid points");
  }
  if (!(time_step > 0.0)) throw StructuralError("time_step must be positive");
}

bool FibredChart::contains(const Vec& x) const {
  for (int a = 0; a < n; ++a) {
    const auto& [lo, hi] = extent[static_cast<std::size_t>(a)];
    if (x[a] < lo || x[a] > hi) return false;
  }
  return true;
}

Grid::Grid(const FibredChart& chart) : dim_(chart.n) {
  chart.check();
  points_ = chart.points;
  for (int a = 0; a < dim_; ++a) {
    const auto& [lo, hi] = chart.extent[static_cast<std::size_t>(a)];
    lower_.push_back(lo);
    spacing_.push_back((hi - lo) / (points_[static_cast<std::size_t>(a)] + 1));
  }
  stride_.assign(static_cast<std::size_t>(dim_), 1);
  for (int a = dim_ - 2; a >= 0; --a)
    stride_[static_cast<std::size_t>(a)] = stride_[static_cast<std::size_t>(a + 1)] * points_[static_cast<std::size_t>(a + 1)];
  size_ = stride_[0] * points_[0];
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (double h : spacing_) v *= h;
  return v;
}

std::array<int, 3> Grid::unflatten(std::ptrdiff_t k) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(k / stride(a));
    k %= stride(a);
  }
  return idx;
}

std::ptrdiff_t Grid::flatten(const std::array<int, 3>& idx) const {
  std::ptrdiff_t k = 0;
  for (int a = 0; a < dim_; ++a) k += idx[static_cast<std::size_t>(a)] * stride(a);
  return k;
}

Vec Grid::point(std::ptrdiff_t k) const {
  const auto idx = unflatten(k);
  Vec x(dim_);
  for (int a = 0; a < dim_; ++a) x[a] = coordinate(a, idx[static_cast<std::size_t>(a)]);
  return x;
}

int Grid::wall_distance(std::ptrdiff_t k) const {
  const auto idx = unflatten(k);
  int d = 1 << 30;
  for (int a = 0; a < dim_; ++a)
    d = std::min({d, idx[static_cast<std::size_t>(a)] + 1, points(a) - idx[static_cast<std::size_t>(a)]});
  return d;
}

bool Grid::same_as(const Grid& o) const {
  return dim_ == o.dim_ && points_ == o.points_ && spacing_ == o.spacing_ && lower_ == o.lower_;
}

}  // namespace cqm
