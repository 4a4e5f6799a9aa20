#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace metaworld {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

using MultiIndex = std::vector<std::size_t>;

/// Uniform periodic discretization of a box in configuration space.
///
/// Cell i along dimension d has center lo_d + (i + 0.5) * dx_d and covers the
/// half-open interval [lo_d + i*dx_d, lo_d + (i+1)*dx_d). Flat storage is
/// row-major: the last dimension varies fastest.
///
/// Immutable after construction.
class Grid {
 public:
  /// Throws InvalidArgument on dimension mismatch, a point count that is not a
  /// power of two >= 8, an empty or inverted interval, or a cell count above
  /// memory_budget_cells().
  Grid(std::vector<Interval> extent, std::vector<std::size_t> points);

  std::size_t dims() const { return extent_.size(); }
  const std::vector<Interval>& extent() const { return extent_; }
  const Interval& extent(std::size_t d) const { return extent_[d]; }
  const std::vector<std::size_t>& points() const { return points_; }
  std::size_t points(std::size_t d) const { return points_[d]; }
  double spacing(std::size_t d) const { return spacing_[d]; }
  const std::vector<double>& spacing() const { return spacing_; }
  std::size_t size() const { return size_; }
  double cell_volume() const { return cell_volume_; }
  std::size_t stride(std::size_t d) const { return strides_[d]; }

  double center(std::size_t d, std::size_t i) const {
    return extent_[d].lo + (static_cast<double>(i) + 0.5) * spacing_[d];
  }
  /// Cell-center coordinates of flat cell `flat`.
  std::vector<double> center(std::size_t flat) const;
  /// Coordinate along dimension d of flat cell `flat`.
  double coordinate(std::size_t flat, std::size_t d) const {
    return center(d, (flat / strides_[d]) % points_[d]);
  }

  std::size_t flatten(std::span<const std::size_t> index) const;
  MultiIndex unflatten(std::size_t flat) const;

  /// Discrete Fourier wavenumbers for dimension d in transform layout:
  /// k_j = 2*pi*f_j / L with f = 0, 1, ..., n/2-1, -n/2, ..., -1. The Nyquist
  /// frequency appears once, with negative sign.
  std::vector<double> wavenumbers(std::size_t d) const;
  std::vector<std::vector<double>> wavenumbers() const;

  /// Cell containing q under the half-open convention, or nullopt when q lies
  /// outside the box. Throws InvalidArgument for NaN coordinates.
  std::optional<MultiIndex> locate_cell(std::span<const double> q) const;

  /// Fraction-of-box shell test used by the edge-mass diagnostic: true if any
  /// coordinate of the cell is within `fraction` of the extent from an edge.
  bool in_edge_shell(std::size_t flat, double fraction = 0.05) const;

  /// Cartesian product grid (this dims first, then other's).
  Grid product(const Grid& other) const;

  bool operator==(const Grid& other) const {
    return extent_ == other.extent_ && points_ == other.points_;
  }

  /// Upper bound on cells per grid. Read from METAWORLD_MEMORY_MB
  /// (megabytes of complex<double> storage for a two-component field);
  /// defaults to 1024 MB.
  static std::size_t memory_budget_cells();

 private:
  std::vector<Interval> extent_;
  std::vector<std::size_t> points_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  double cell_volume_ = 0.0;
};

Grid make_grid(std::vector<Interval> extent, std::vector<std::size_t> points);

}  // namespace metaworld
