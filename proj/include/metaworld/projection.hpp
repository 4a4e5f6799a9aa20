#pragma once

#include <vector>

#include "metaworld/wavefunction.hpp"

namespace metaworld {

/// Which particle and which physical axis each configuration coordinate
/// belongs to. Coordinates sharing an axis must have congruent grids.
struct ParticleLayout {
  struct Role {
    std::size_t particle = 0;
    std::size_t axis = 0;
  };
  std::vector<Role> roles;  // one per grid dimension

  /// N particles on one shared physical axis: coordinate k is particle k.
  static ParticleLayout one_dimensional(std::size_t particles);

  std::size_t particles() const;
  std::size_t axes() const;
  /// Throws InvalidArgument if some (particle, axis) pair is missing or
  /// repeated, or if coordinates of one axis use different extents or sizes.
  void validate(const Grid& grid) const;
  /// Physical-space grid inherited from the first coordinate of each axis.
  Grid physical_grid(const Grid& configuration) const;
};

/// World density projected to physical space: sum over particles of the
/// marginal of rho on that particle's coordinates (cell-level binning).
RealField particle_density(const Wavefunction& psi, const ParticleLayout& layout);

/// Integral of particle_density over a physical-space region divided by the
/// total world volume.
double expected_particle_count(const Wavefunction& psi, const Region& physical_region,
                               const ParticleLayout& layout);

}  // namespace metaworld
