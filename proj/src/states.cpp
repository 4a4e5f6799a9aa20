#include "metaworld/states.hpp"

#include <cmath>

#include "metaworld/errors.hpp"

namespace metaworld::states {

Wavefunction normalized(Wavefunction psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw InvalidArgument("cannot normalize a zero state");
  psi *= 1.0 / n;
  return psi;
}

Wavefunction gaussian(const Grid& grid, std::vector<double> center, std::vector<double> width,
                      std::vector<double> boost) {
  const std::size_t dims = grid.dims();
  if (boost.empty()) boost.assign(dims, 0.0);
  if (center.size() != dims || width.size() != dims || boost.size() != dims) {
    throw InvalidArgument("gaussian: center, width and boost need one entry per dimension");
  }
  for (double w : width) {
    if (!(w > 0.0)) throw InvalidArgument("gaussian: width must be positive");
  }
  auto psi = Wavefunction::from_function(grid, [&](std::span<const double> q) {
    double exponent = 0.0;
    double phase = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double u = (q[d] - center[d]) / width[d];
      exponent -= 0.5 * u * u;
      phase += boost[d] * q[d];
    }
    return std::polar(std::exp(exponent), phase);
  });
  return normalized(std::move(psi));
}

Wavefunction plane_wave(const Grid& grid, std::vector<double> k) {
  if (k.size() != grid.dims()) throw InvalidArgument("plane_wave: k needs one entry per dimension");
  return Wavefunction::from_function(grid, [&](std::span<const double> q) {
    double phase = 0.0;
    for (std::size_t d = 0; d < k.size(); ++d) phase += k[d] * q[d];
    return std::polar(1.0, phase);
  });
}

Wavefunction truncated_gaussian(const Grid& grid, double center, double width, Interval support,
                                double norm) {
  if (grid.dims() != 1) throw InvalidArgument("truncated_gaussian: 1D grid required");
  auto psi = Wavefunction::from_function(grid, [&](std::span<const double> q) {
    if (q[0] < support.lo || q[0] >= support.hi) return cplx{};
    const double u = (q[0] - center) / width;
    return cplx(std::exp(-0.5 * u * u), 0.0);
  });
  psi = normalized(std::move(psi));
  psi *= norm;
  return psi;
}

std::vector<Wavefunction> orthonormalize(std::vector<Wavefunction> states) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    // two passes of modified Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        const cplx overlap = inner_product(states[j], states[i]);
        Wavefunction proj = states[j];
        proj *= overlap;
        states[i] -= proj;
      }
    }
    const double n = states[i].norm();
    if (!(n > 1e-12)) throw InvalidArgument("orthonormalize: states are linearly dependent");
    states[i] *= 1.0 / n;
  }
  return states;
}

std::vector<Wavefunction> hermite_basis(const Grid& grid, std::size_t count, double center,
                                        double width) {
  if (grid.dims() != 1) throw InvalidArgument("hermite_basis: 1D grid required");
  std::vector<Wavefunction> basis;
  basis.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    basis.push_back(Wavefunction::from_function(grid, [&](std::span<const double> q) {
      const double u = (q[0] - center) / width;
      // physicists' Hermite recurrence, scaled to avoid overflow
      double h_prev = 1.0;
      double h = 2.0 * u;
      if (n == 0) h = 1.0;
      for (std::size_t m = 1; m < n; ++m) {
        const double next = 2.0 * u * h - 2.0 * static_cast<double>(m) * h_prev;
        h_prev = h;
        h = next;
      }
      return cplx(h * std::exp(-0.5 * u * u), 0.0);
    }));
  }
  return orthonormalize(std::move(basis));
}

Wavefunction spinor(const Wavefunction& chi, cplx alpha, cplx beta) {
  if (chi.components() != 1) throw InvalidArgument("spinor: chi must be scalar");
  Wavefunction out(chi.grid(), 2, chi.time());
  auto up = out.component(0);
  auto down = out.component(1);
  const auto v = chi.component(0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    up[i] = alpha * v[i];
    down[i] = beta * v[i];
  }
  return out;
}

}  // namespace metaworld::states
