#include "metaworld/grid.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

#include "metaworld/errors.hpp"

namespace metaworld {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

std::size_t Grid::memory_budget_cells() {
  double megabytes = 1024.0;
  if (const char* env = std::getenv("METAWORLD_MEMORY_MB"); env != nullptr) {
    char* end = nullptr;
    const double parsed = std::strtod(env, &end);
    if (end != env && parsed > 0.0) megabytes = parsed;
  }
  // two components of complex<double> per cell
  return static_cast<std::size_t>(megabytes * 1024.0 * 1024.0 / 32.0);
}

Grid::Grid(std::vector<Interval> extent, std::vector<std::size_t> points)
    : extent_(std::move(extent)), points_(std::move(points)) {
  if (extent_.empty()) throw InvalidArgument("grid needs at least one dimension");
  if (extent_.size() != points_.size()) {
    throw InvalidArgument("grid extent has " + std::to_string(extent_.size()) +
                          " intervals but points has " + std::to_string(points_.size()) +
                          " entries");
  }
  const std::size_t dims = extent_.size();
  spacing_.resize(dims);
  strides_.resize(dims);
  size_ = 1;
  cell_volume_ = 1.0;
  for (std::size_t d = 0; d < dims; ++d) {
    const std::size_t n = points_[d];
    if (n < 8 || !is_power_of_two(n)) {
      throw InvalidArgument("grid points[" + std::to_string(d) + "] = " + std::to_string(n) +
                            " is not a power of two >= 8");
    }
    const Interval& iv = extent_[d];
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || !(iv.hi > iv.lo)) {
      throw InvalidArgument("grid extent[" + std::to_string(d) + "] is empty or not finite");
    }
    spacing_[d] = iv.length() / static_cast<double>(n);
    cell_volume_ *= spacing_[d];
    if (size_ > memory_budget_cells() / n) {
      throw InvalidArgument("grid cell count exceeds memory budget (METAWORLD_MEMORY_MB)");
    }
    size_ *= n;
  }
  std::size_t stride = 1;
  for (std::size_t d = dims; d-- > 0;) {
    strides_[d] = stride;
    stride *= points_[d];
  }
}

std::vector<double> Grid::center(std::size_t flat) const {
  std::vector<double> q(dims());
  for (std::size_t d = 0; d < dims(); ++d) q[d] = coordinate(flat, d);
  return q;
}

std::size_t Grid::flatten(std::span<const std::size_t> index) const {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < dims(); ++d) flat += index[d] * strides_[d];
  return flat;
}

MultiIndex Grid::unflatten(std::size_t flat) const {
  MultiIndex idx(dims());
  for (std::size_t d = 0; d < dims(); ++d) idx[d] = (flat / strides_[d]) % points_[d];
  return idx;
}

std::vector<double> Grid::wavenumbers(std::size_t d) const {
  const std::size_t n = points_[d];
  const double scale = 2.0 * std::numbers::pi / extent_[d].length();
  std::vector<double> k(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto f = j < n / 2 ? static_cast<double>(j)
                             : static_cast<double>(j) - static_cast<double>(n);
    k[j] = scale * f;
  }
  return k;
}

std::vector<std::vector<double>> Grid::wavenumbers() const {
  std::vector<std::vector<double>> all;
  all.reserve(dims());
  for (std::size_t d = 0; d < dims(); ++d) all.push_back(wavenumbers(d));
  return all;
}

std::optional<MultiIndex> Grid::locate_cell(std::span<const double> q) const {
  if (q.size() != dims()) throw InvalidArgument("locate_cell: point has wrong dimension");
  MultiIndex idx(dims());
  for (std::size_t d = 0; d < dims(); ++d) {
    if (std::isnan(q[d])) throw InvalidArgument("locate_cell: NaN coordinate");
    const double offset = (q[d] - extent_[d].lo) / spacing_[d];
    if (!(offset >= 0.0) || q[d] >= extent_[d].hi) return std::nullopt;
    // guards rounding just below hi
    idx[d] = std::min(static_cast<std::size_t>(offset), points_[d] - 1);
  }
  return idx;
}

bool Grid::in_edge_shell(std::size_t flat, double fraction) const {
  for (std::size_t d = 0; d < dims(); ++d) {
    const double x = coordinate(flat, d);
    const double margin = fraction * extent_[d].length();
    if (x < extent_[d].lo + margin || x > extent_[d].hi - margin) return true;
  }
  return false;
}

Grid Grid::product(const Grid& other) const {
  std::vector<Interval> extent = extent_;
  std::vector<std::size_t> points = points_;
  extent.insert(extent.end(), other.extent_.begin(), other.extent_.end());
  points.insert(points.end(), other.points_.begin(), other.points_.end());
  return Grid(std::move(extent), std::move(points));
}

Grid make_grid(std::vector<Interval> extent, std::vector<std::size_t> points) {
  return Grid(std::move(extent), std::move(points));
}

}  // namespace metaworld
