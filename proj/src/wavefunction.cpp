#include "metaworld/wavefunction.hpp"

#include <cmath>
#include <string>

#include "metaworld/errors.hpp"

namespace metaworld {

Wavefunction::Wavefunction(Grid grid, std::size_t components, double time)
    : grid_(std::move(grid)), components_(components), time_(time) {
  if (components_ != 1 && components_ != 2) {
    throw InvalidArgument("wavefunction must have 1 or 2 components");
  }
  values_.assign(components_ * grid_.size(), cplx{});
}

Wavefunction::Wavefunction(Grid grid, std::size_t components, std::vector<cplx> values,
                           double time)
    : grid_(std::move(grid)), components_(components), values_(std::move(values)), time_(time) {
  if (components_ != 1 && components_ != 2) {
    throw InvalidArgument("wavefunction must have 1 or 2 components");
  }
  if (values_.size() != components_ * grid_.size()) {
    throw InvalidArgument("wavefunction values have " + std::to_string(values_.size()) +
                          " entries, expected " + std::to_string(components_ * grid_.size()));
  }
}

double Wavefunction::norm_squared() const {
  double sum = 0.0;
  for (const auto& v : values_) sum += std::norm(v);
  return sum * grid_.cell_volume();
}

double Wavefunction::norm() const { return std::sqrt(norm_squared()); }

bool Wavefunction::is_finite() const {
  for (const auto& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

Wavefunction& Wavefunction::operator*=(cplx c) {
  for (auto& v : values_) v *= c;
  return *this;
}

Wavefunction& Wavefunction::operator+=(const Wavefunction& other) {
  if (!same_shape(other)) throw InvalidArgument("wavefunction sum: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Wavefunction& Wavefunction::operator-=(const Wavefunction& other) {
  if (!same_shape(other)) throw InvalidArgument("wavefunction difference: shape mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Wavefunction operator*(cplx c, Wavefunction psi) { return psi *= c; }
Wavefunction operator+(Wavefunction a, const Wavefunction& b) { return a += b; }
Wavefunction operator-(Wavefunction a, const Wavefunction& b) { return a -= b; }

Wavefunction tensor_product(const Wavefunction& a, const Wavefunction& b) {
  if (b.components() != 1) throw InvalidArgument("tensor_product: right factor must be scalar");
  Grid g = a.grid().product(b.grid());
  Wavefunction out(g, a.components(), a.time());
  const std::size_t nb = b.grid().size();
  const auto bv = b.component(0);
  for (std::size_t c = 0; c < a.components(); ++c) {
    const auto av = a.component(c);
    auto dst = out.component(c);
    for (std::size_t i = 0; i < av.size(); ++i) {
      for (std::size_t j = 0; j < nb; ++j) dst[i * nb + j] = av[i] * bv[j];
    }
  }
  return out;
}

Region::Region(Grid grid, std::vector<unsigned char> mask)
    : grid_(std::move(grid)), mask_(std::move(mask)) {
  if (mask_.size() != grid_.size()) throw InvalidArgument("region mask size != grid cell count");
}

Region Region::full(const Grid& grid) {
  return Region(grid, std::vector<unsigned char>(grid.size(), 1));
}

Region Region::empty(const Grid& grid) {
  return Region(grid, std::vector<unsigned char>(grid.size(), 0));
}

Region Region::slab(const Grid& grid, std::size_t d, Interval iv) {
  if (d >= grid.dims()) throw InvalidArgument("slab: dimension out of range");
  std::vector<unsigned char> mask(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.coordinate(i, d);
    mask[i] = (x >= iv.lo && x < iv.hi) ? 1 : 0;
  }
  return Region(grid, std::move(mask));
}

std::size_t Region::count() const {
  std::size_t n = 0;
  for (auto m : mask_) n += m != 0;
  return n;
}

bool Region::disjoint(const Region& other) const {
  if (!(grid_ == other.grid_)) throw InvalidArgument("region grid mismatch");
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i] && other.mask_[i]) return false;
  }
  return true;
}

Region Region::operator|(const Region& other) const {
  if (!(grid_ == other.grid_)) throw InvalidArgument("region grid mismatch");
  auto mask = mask_;
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] || other.mask_[i];
  return Region(grid_, std::move(mask));
}

Region Region::operator&(const Region& other) const {
  if (!(grid_ == other.grid_)) throw InvalidArgument("region grid mismatch");
  auto mask = mask_;
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] && other.mask_[i];
  return Region(grid_, std::move(mask));
}

Region Region::operator~() const {
  auto mask = mask_;
  for (auto& m : mask) m = !m;
  return Region(grid_, std::move(mask));
}

void Inertia::validate(std::size_t dims) const {
  if (masses.size() != dims) {
    throw InvalidArgument("expected " + std::to_string(dims) + " masses, got " +
                          std::to_string(masses.size()));
  }
  for (double m : masses) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("masses must be positive");
  }
  if (!(hbar > 0.0)) throw InvalidArgument("hbar must be positive");
}

RealField density(const Wavefunction& psi) {
  const Grid& g = psi.grid();
  RealField rho{g, std::vector<double>(g.size(), 0.0)};
  for (std::size_t c = 0; c < psi.components(); ++c) {
    const auto v = psi.component(c);
    for (std::size_t i = 0; i < g.size(); ++i) rho.values[i] += std::norm(v[i]);
  }
  return rho;
}

VectorField current(const Wavefunction& psi, const Inertia& inertia) {
  const Grid& g = psi.grid();
  inertia.validate(g.dims());
  VectorField j{g, std::vector<std::vector<double>>(g.dims(), std::vector<double>(g.size(), 0.0))};
  SpectralTransform transform(g);
  std::vector<cplx> grad(g.size());
  for (std::size_t c = 0; c < psi.components(); ++c) {
    const auto v = psi.component(c);
    for (std::size_t d = 0; d < g.dims(); ++d) {
      spectral_derivative(transform, v, d, grad);
      const double scale = inertia.hbar / inertia.masses[d];
      auto& jd = j.components[d];
      for (std::size_t i = 0; i < g.size(); ++i) {
        jd[i] += scale * (std::conj(v[i]) * grad[i]).imag();
      }
    }
  }
  return j;
}

double world_volume(const Wavefunction& psi, const Region& region) {
  if (!(psi.grid() == region.grid())) throw InvalidArgument("world_volume: grid mismatch");
  const std::size_t n = psi.grid().size();
  double sum = 0.0;
  for (std::size_t c = 0; c < psi.components(); ++c) {
    const auto v = psi.component(c);
    for (std::size_t i = 0; i < n; ++i) {
      if (region.contains(i)) sum += std::norm(v[i]);
    }
  }
  return sum * psi.grid().cell_volume();
}

double probability(const Wavefunction& psi, const Region& region) {
  const double total = world_volume(psi, Region::full(psi.grid()));
  if (!(total > 0.0)) throw InvalidArgument("probability: total world volume is zero");
  return world_volume(psi, region) / total;
}

cplx inner_product(const Wavefunction& a, const Wavefunction& b) {
  if (!a.same_shape(b)) throw InvalidArgument("inner_product: grid or component mismatch");
  cplx sum{};
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) sum += std::conj(av[i]) * bv[i];
  return sum * a.grid().cell_volume();
}

double edge_mass(const Wavefunction& psi, double fraction) {
  const Grid& g = psi.grid();
  const RealField rho = density(psi);
  double edge = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    total += rho.values[i];
    if (g.in_edge_shell(i, fraction)) edge += rho.values[i];
  }
  return total > 0.0 ? edge / total : 0.0;
}

}  // namespace metaworld
