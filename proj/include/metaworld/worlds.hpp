#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metaworld/wavefunction.hpp"

namespace metaworld {

/// Relative density below which the velocity is treated as undefined.
inline constexpr double kNodeThreshold = 1e-12;

/// Grid-sampled velocity v = j / rho with a validity mask. Off-mask cells hold 0.
struct VelocityField {
  Grid grid;
  std::vector<std::vector<double>> velocity;  // [dimension][cell]
  std::vector<unsigned char> valid;
  double time = 0.0;

  std::size_t valid_count() const;

  /// Multilinear interpolation between cell centers on the periodic box.
  /// Returns false (leaving out untouched) if any stencil corner is off-mask.
  bool interpolate(std::span<const double> q, std::span<double> out) const;
};

/// v = j / rho on cells with rho > node_threshold * max(rho).
VelocityField velocity_field(const Wavefunction& psi, const Inertia& inertia,
                             double node_threshold = kNodeThreshold);

struct UnwrappedPhase {
  std::vector<double> phase;  // S / hbar, continuous within a segment
  std::vector<int> segment;   // segment label per cell, -1 off-mask
  bool periodic = false;      // true when every cell is valid (one cyclic segment)
};

/// Unwrapped argument of a 1D scalar state, independently per connected
/// segment of the validity mask (segments may wrap around the box edge).
UnwrappedPhase unwrap_phase(const Wavefunction& psi, double node_threshold = kNodeThreshold);

/// v = grad(S) / m from the unwrapped phase, differentiated with up to
/// 13-point finite-difference stencils kept inside each segment. 1D scalar only.
VelocityField velocity_from_phase(const Wavefunction& psi, const Inertia& inertia,
                                  double node_threshold = kNodeThreshold);

/// Sampled configurations. Positions are stored M x D row-major.
struct WorldEnsemble {
  std::size_t dims = 0;
  std::vector<double> positions;  // wrapped into the box
  std::vector<double> unwrapped;  // continuous across periodic boundaries
  std::vector<std::uint64_t> ids;
  std::vector<unsigned char> alive;
  double birth_time = 0.0;
  double time = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return ids.size(); }
  std::span<const double> position(std::size_t i) const { return {positions.data() + i * dims, dims}; }
  std::size_t alive_count() const;
};

/// M independent draws from the cell distribution proportional to rho,
/// jittered uniformly within the chosen cell. World i uses its own RNG
/// substream, so results depend only on (psi, M, seed).
WorldEnsemble sample_worlds(const Wavefunction& psi, std::size_t count, std::uint64_t seed);

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<std::vector<double>> positions;  // per time, M x D wrapped
  std::vector<std::vector<double>> unwrapped;  // per time, M x D
  std::vector<std::vector<unsigned char>> alive;
  std::size_t frozen = 0;               // worlds that hit a node region
  std::size_t ordering_violations = 0;  // 1D only: adjacent alive pairs found out of order
};

struct AdvanceResult {
  WorldEnsemble ensemble;
  TrajectoryRecord record;
};

/// RK4 transport along the snapshot velocity fields (multilinear in space,
/// linear in time). dt_world <= 0 selects cadence / 4. Worlds whose stencil
/// touches an off-mask cell are frozen and marked not alive.
AdvanceResult advance_worlds(const WorldEnsemble& ensemble, std::span<const Wavefunction> snapshots,
                             const Inertia& inertia, double dt_world = 0.0);

/// Total-variation distance between binned alive worlds and binned |psi|^2,
/// with `bins` equal bins per dimension (must divide each grid size).
double equivariance_distance(const WorldEnsemble& ensemble, const Wavefunction& psi,
                             std::size_t bins);

/// Finite-difference weights for the first derivative at 0 on the given
/// nodes (Fornberg's recursion).
std::vector<double> first_derivative_weights(std::span<const double> nodes);

}  // namespace metaworld
