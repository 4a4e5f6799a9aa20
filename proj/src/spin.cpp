#include "metaworld/spin.hpp"

#include <cmath>
#include <sstream>

#include "metaworld/errors.hpp"

namespace metaworld {

SpinSetup SpinSetup::disentangled(cplx alpha, cplx beta, const Wavefunction& chi,
                                  PointerDevice pointer) {
  return SpinSetup{chi.grid(), alpha * chi, beta * chi, std::move(pointer)};
}

SpinSetup SpinSetup::entangled(Wavefunction up, Wavefunction down, PointerDevice pointer) {
  Grid g = up.grid();
  return SpinSetup{std::move(g), std::move(up), std::move(down), std::move(pointer)};
}

void SpinSetup::validate() const {
  if (pointer.states.size() != 2) throw ModelViolation("spin pointer needs exactly two states");
  for (const auto* psi : {&psi_up, &psi_down}) {
    if (!(psi->grid() == system_grid) || psi->components() != 1) {
      throw InvalidArgument("spin components must be scalar fields on the system grid");
    }
  }
  if (!(psi_up.norm_squared() + psi_down.norm_squared() > 0.0)) {
    throw InvalidArgument("spin state is zero");
  }
  pointer.validate();
}

Wavefunction spin_premeasurement(const SpinSetup& setup) {
  setup.validate();
  const Wavefunction up = tensor_product(setup.psi_up, setup.pointer.initial);
  const Wavefunction down = tensor_product(setup.psi_down, setup.pointer.initial);
  Wavefunction out(up.grid(), 2);
  std::copy(up.values().begin(), up.values().end(), out.component(0).begin());
  std::copy(down.values().begin(), down.values().end(), out.component(1).begin());
  return out;
}

Wavefunction stern_gerlach_measure(const Wavefunction& psi, const SpinSetup& setup) {
  setup.validate();
  const Grid product = setup.product_grid();
  if (!(psi.grid() == product) || psi.components() != 2) {
    throw InvalidArgument("stern_gerlach_measure: expected a spinor field on X x Y");
  }
  const std::size_t nx = setup.system_grid.size();
  const std::size_t ny = setup.pointer.grid.size();
  const auto phi0 = setup.pointer.initial.component(0);
  const double dy = setup.pointer.grid.cell_volume();
  const double n0 = setup.pointer.initial.norm_squared();

  Wavefunction out(product, 2, psi.time());
  double residual2 = 0.0;
  for (std::size_t c = 0; c < 2; ++c) {
    const auto in = psi.component(c);
    const auto phi = setup.pointer.states[c].component(0);
    auto dst = out.component(c);
    for (std::size_t x = 0; x < nx; ++x) {
      cplx f{};
      for (std::size_t y = 0; y < ny; ++y) f += std::conj(phi0[y]) * in[x * ny + y];
      f *= dy / n0;
      for (std::size_t y = 0; y < ny; ++y) {
        residual2 += std::norm(in[x * ny + y] - f * phi0[y]);
        dst[x * ny + y] = f * phi[y];
      }
    }
  }
  const double residual = std::sqrt(residual2 * product.cell_volume());
  const double norm_in = psi.norm();
  if (residual > 1e-8 * norm_in) {
    std::ostringstream msg;
    msg << "spinor state is not of the form (f_up (x) phi_0, f_down (x) phi_0) (relative residual "
        << residual / norm_in << ")";
    throw ModelViolation(msg.str());
  }
  return out;
}

SpinProbabilities spin_probabilities(const Wavefunction& post, const SpinSetup& setup) {
  const Grid product = setup.product_grid();
  if (!(post.grid() == product)) throw InvalidArgument("spin_probabilities: grid mismatch");
  const std::size_t pointer_dim = product.dims() - 1;
  SpinProbabilities p;
  p.total_volume = world_volume(post, Region::full(product));
  if (!(p.total_volume > 0.0)) throw InvalidArgument("spin_probabilities: zero world volume");
  p.volume_up = world_volume(post, Region::slab(product, pointer_dim, setup.pointer.regions[SpinSetup::kUp]));
  p.volume_down =
      world_volume(post, Region::slab(product, pointer_dim, setup.pointer.regions[SpinSetup::kDown]));
  p.up = p.volume_up / p.total_volume;
  p.down = p.volume_down / p.total_volume;
  return p;
}

std::pair<double, double> spin_reference(const SpinSetup& setup) {
  const double up = setup.psi_up.norm_squared();
  const double down = setup.psi_down.norm_squared();
  if (!(up + down > 0.0)) throw InvalidArgument("spin_reference: zero state");
  return {up / (up + down), down / (up + down)};
}

std::optional<std::size_t> spin_readout(std::span<const double> world, const SpinSetup& setup) {
  if (world.size() != setup.system_grid.dims() + 1) {
    throw InvalidArgument("spin_readout: world has the wrong number of coordinates");
  }
  return setup.pointer.region_of(world.back());
}

}  // namespace metaworld
