#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "metaworld/grid.hpp"
#include "metaworld/spectral.hpp"

namespace metaworld {

/// Complex amplitude field over a Grid with one (scalar) or two (spinor)
/// components. Storage is component-major: all cells of component 0, then all
/// cells of component 1, each block row-major over the grid.
class Wavefunction {
 public:
  explicit Wavefunction(Grid grid, std::size_t components = 1, double time = 0.0);
  Wavefunction(Grid grid, std::size_t components, std::vector<cplx> values, double time = 0.0);

  /// Scalar field sampled at cell centers: f(point) -> amplitude.
  template <class F>
  static Wavefunction from_function(const Grid& grid, F&& f, double time = 0.0) {
    Wavefunction psi(grid, 1, time);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto q = grid.center(i);
      psi.values_[i] = f(std::span<const double>(q));
    }
    return psi;
  }

  const Grid& grid() const { return grid_; }
  std::size_t components() const { return components_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  std::span<cplx> component(std::size_t c) {
    return {values_.data() + c * grid_.size(), grid_.size()};
  }
  std::span<const cplx> component(std::size_t c) const {
    return {values_.data() + c * grid_.size(), grid_.size()};
  }
  std::span<cplx> values() { return values_; }
  std::span<const cplx> values() const { return values_; }

  /// Sum over cells and components of |value|^2 times the cell volume.
  double norm_squared() const;
  double norm() const;
  bool is_finite() const;

  Wavefunction& operator*=(cplx c);
  Wavefunction& operator+=(const Wavefunction& other);
  Wavefunction& operator-=(const Wavefunction& other);

  bool same_shape(const Wavefunction& other) const {
    return components_ == other.components_ && grid_ == other.grid_;
  }

 private:
  Grid grid_;
  std::size_t components_;
  std::vector<cplx> values_;
  double time_;
};

Wavefunction operator*(cplx c, Wavefunction psi);
Wavefunction operator+(Wavefunction a, const Wavefunction& b);
Wavefunction operator-(Wavefunction a, const Wavefunction& b);

/// Tensor product a(x) b(y) on a.grid() x b.grid(). Both scalar, or a spinor
/// and b scalar (each component multiplied by b).
Wavefunction tensor_product(const Wavefunction& a, const Wavefunction& b);

/// Measurable set of configuration space realized as a per-cell mask.
class Region {
 public:
  Region(Grid grid, std::vector<unsigned char> mask);

  static Region full(const Grid& grid);
  static Region empty(const Grid& grid);
  /// Cells whose centers satisfy pred(point).
  template <class Pred>
  static Region where(const Grid& grid, Pred&& pred) {
    std::vector<unsigned char> mask(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto q = grid.center(i);
      mask[i] = pred(std::span<const double>(q)) ? 1 : 0;
    }
    return Region(grid, std::move(mask));
  }
  /// Cells whose centers lie in interval `iv` along dimension d.
  static Region slab(const Grid& grid, std::size_t d, Interval iv);

  const Grid& grid() const { return grid_; }
  bool contains(std::size_t flat) const { return mask_[flat] != 0; }
  std::span<const unsigned char> mask() const { return mask_; }
  std::size_t count() const;
  bool disjoint(const Region& other) const;

  Region operator|(const Region& other) const;
  Region operator&(const Region& other) const;
  Region operator~() const;

 private:
  Grid grid_;
  std::vector<unsigned char> mask_;
};

struct RealField {
  Grid grid;
  std::vector<double> values;
};

struct VectorField {
  Grid grid;
  std::vector<std::vector<double>> components;  // [dimension][cell]
};

/// Per-coordinate masses and the reduced Planck constant. Defaults: all ones.
struct Inertia {
  std::vector<double> masses;
  double hbar = 1.0;

  static Inertia uniform(std::size_t dims, double mass = 1.0, double hbar = 1.0) {
    return Inertia{std::vector<double>(dims, mass), hbar};
  }
  /// Throws InvalidArgument unless there is one positive mass per dimension and hbar > 0.
  void validate(std::size_t dims) const;
};

/// rho = sum over components of |psi|^2, per cell.
RealField density(const Wavefunction& psi);

/// j_d = (hbar / m_d) Im(psi^* d_d psi), summed over components, with the
/// gradient evaluated spectrally.
VectorField current(const Wavefunction& psi, const Inertia& inertia);

/// Midpoint-rule integral of rho over the region.
double world_volume(const Wavefunction& psi, const Region& region);

/// world_volume(region) / world_volume(everything). Throws on zero total volume.
double probability(const Wavefunction& psi, const Region& region);

/// <a|b> = sum conj(a) b dV over cells and components.
cplx inner_product(const Wavefunction& a, const Wavefunction& b);

/// Fraction of the world volume in the outer `fraction` shell of the box.
double edge_mass(const Wavefunction& psi, double fraction = 0.05);

}  // namespace metaworld
