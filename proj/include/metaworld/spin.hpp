#pragma once

#include <optional>
#include <span>

#include "metaworld/measurement.hpp"

namespace metaworld {

/// Spin-1/2 particle on X measured by a two-outcome pointer on Y.
/// pointer.states[0] / regions[0] record "up", index 1 records "down".
struct SpinSetup {
  Grid system_grid;
  Wavefunction psi_up;
  Wavefunction psi_down;
  PointerDevice pointer;

  static constexpr std::size_t kUp = 0;
  static constexpr std::size_t kDown = 1;

  /// (alpha chi, beta chi).
  static SpinSetup disentangled(cplx alpha, cplx beta, const Wavefunction& chi,
                                PointerDevice pointer);
  static SpinSetup entangled(Wavefunction up, Wavefunction down, PointerDevice pointer);

  Grid product_grid() const { return system_grid.product(pointer.grid); }
  /// Throws when the pointer has other than two states or a check fails.
  void validate() const;
};

/// (psi_up (x) phi_0, psi_down (x) phi_0).
Wavefunction spin_premeasurement(const SpinSetup& setup);

/// Component-wise pointer replacement phi_0 -> phi_up / phi_down. Throws
/// ModelViolation if a component is not of the form f(x) phi_0(y).
Wavefunction stern_gerlach_measure(const Wavefunction& psi, const SpinSetup& setup);

struct SpinProbabilities {
  double up = 0.0;
  double down = 0.0;
  double volume_up = 0.0;
  double volume_down = 0.0;
  double total_volume = 0.0;
};

/// Region-volume route over X x Y_up and X x Y_down with the summed-component density.
SpinProbabilities spin_probabilities(const Wavefunction& post, const SpinSetup& setup);

/// ||psi_up||^2 / (||psi_up||^2 + ||psi_down||^2) and the complement.
std::pair<double, double> spin_reference(const SpinSetup& setup);

/// kUp, kDown, or nullopt from the world's pointer coordinate.
std::optional<std::size_t> spin_readout(std::span<const double> world, const SpinSetup& setup);

}  // namespace metaworld
