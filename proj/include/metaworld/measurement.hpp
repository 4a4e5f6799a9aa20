#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "metaworld/evolution.hpp"
#include "metaworld/wavefunction.hpp"
#include "metaworld/worlds.hpp"

namespace metaworld {

/// Observer system on a 1D pointer axis: a ready state and one pointer state
/// per outcome, each supported inside its own interval of the axis.
struct PointerDevice {
  Grid grid;
  Wavefunction initial;
  std::vector<Wavefunction> states;
  std::vector<Interval> regions;

  /// Minimum number of empty cells between any two regions.
  static constexpr std::size_t kMinGapCells = 4;

  /// Checks: 1D grid, one region per state, every state vanishes outside its
  /// region, regions separated by kMinGapCells (cyclically), and
  /// ||phi_i|| == ||phi_0|| to 1e-10. Throws ModelViolation.
  void validate() const;

  /// Index of the region whose cells contain y, or nullopt.
  std::optional<std::size_t> region_of(double y) const;
  /// Cells of region i on the pointer grid.
  Region region_mask(std::size_t i) const;
};

/// Ideal von Neumann measurement of the basis {chi_i} on system space X,
/// recorded by a pointer on Y. The product space is X x Y with Y as the last
/// (fastest) dimension.
struct MeasurementSetup {
  Grid system_grid;
  std::vector<Wavefunction> basis;
  std::vector<cplx> coefficients;
  PointerDevice pointer;
  std::vector<double> outcome_values;

  static constexpr std::size_t kMaxOutcomes = 8;

  std::size_t outcomes() const { return basis.size(); }
  Grid product_grid() const { return system_grid.product(pointer.grid); }
  /// psi = sum_i alpha_i chi_i.
  Wavefunction system_state() const;
  /// Throws ModelViolation / InvalidArgument when an invariant fails
  /// (orthonormal basis to 1e-10, matching sizes, K <= 8, pointer checks).
  void validate() const;
};

/// Psi = sum_i alpha_i chi_i (x) phi_0.
Wavefunction premeasurement_state(const MeasurementSetup& setup);

/// Maps chi_i (x) phi_0 -> chi_i (x) phi_i on the span of the pre-measurement
/// states. The branch amplitudes are read back from psi by projection, so a
/// rescaled or rephased input maps linearly. Throws ModelViolation if psi has a
/// component outside that span above 1e-8 relative.
Wavefunction apply_ideal_measurement(const Wavefunction& psi, const MeasurementSetup& setup);

struct OutcomeProbabilities {
  std::vector<double> probabilities;  // mu(X x Y_i) / mu(all)
  std::vector<double> volumes;        // mu(X x Y_i)
  double total_volume = 0.0;
  double escaped = 0.0;  // 1 - sum(probabilities)
};

OutcomeProbabilities outcome_probabilities(const Wavefunction& post, const MeasurementSetup& setup);

/// |alpha_i|^2 / sum_j |alpha_j|^2. Throws on all-zero coefficients.
std::vector<double> born_reference(const MeasurementSetup& setup);

struct Expectation {
  double from_probabilities = 0.0;  // sum_i p_i a_i
  double from_operator = 0.0;       // <psi|A psi> / <psi|psi>, A = sum_i a_i |chi_i><chi_i|
};

/// Both routes; p_i defaults to born_reference. Throws ModelViolation if they
/// disagree by more than 1e-8.
Expectation expectation(const MeasurementSetup& setup);
Expectation expectation(const MeasurementSetup& setup, std::span<const double> probabilities);

/// Outcome read off from a world's pointer coordinate (its last coordinate).
std::optional<std::size_t> readout(std::span<const double> world, const MeasurementSetup& setup);

/// Branch i of a post-measurement state: psi restricted to X x Y_i. On
/// post-measurement states this equals (Pi_i (x) 1) psi' = alpha_i chi_i (x) phi_i
/// and is exactly idempotent. Not renormalized. Throws on a zero-norm branch.
Wavefunction collapse(const Wavefunction& post, const MeasurementSetup& setup, std::size_t branch);

/// Carries pre-measurement worlds through the instantaneous transition: each
/// world keeps its system coordinates, picks branch i with weight
/// |alpha_i chi_i(x)|^2 ||phi_i||^2 and redraws its pointer coordinate from
/// |phi_i|^2. World count and ids are preserved.
WorldEnsemble carry_through_measurement(const WorldEnsemble& pre, const MeasurementSetup& setup,
                                        std::uint64_t seed);

struct CollapseCheckOptions {
  double horizon = 1.0;
  double dt = 1e-3;
  std::size_t snapshot_every = 10;
  double overlap_abort = 1e-8;
};

struct CollapseCheck {
  double max_divergence = 0.0;    // max over worlds and recorded times
  double max_overlap_mass = 0.0;  // other branches' volume inside X x Y_i, relative
  std::size_t worlds = 0;
  std::size_t frozen = 0;
};

/// Transports `worlds` (all inside branch `branch`) once under the evolving
/// post-measurement state and once under its evolving collapsed branch, and
/// reports the largest trajectory separation. Throws InvalidArgument if a
/// world lies outside the branch, BranchesReinterfered if other branches
/// enter X x Y_i beyond options.overlap_abort.
CollapseCheck collapse_equivalence(const WorldEnsemble& worlds, const MeasurementSetup& setup,
                                   std::size_t branch, const Hamiltonian& hamiltonian,
                                   const CollapseCheckOptions& options = {});

}  // namespace metaworld
