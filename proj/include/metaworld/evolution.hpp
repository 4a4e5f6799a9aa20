#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "metaworld/wavefunction.hpp"

namespace metaworld {

// Per-cell Hermitian 2x2 matrix [[up, off], [conj(off), down]] added to the
// potential for two-component states.
struct SpinorCoupling {
  std::vector<double> up;
  std::vector<double> down;
  std::vector<cplx> off;
};

struct Hamiltonian {
  Inertia inertia;
  RealField potential;
  std::optional<SpinorCoupling> spinor_coupling;

  static Hamiltonian free(const Grid& grid, Inertia inertia);
  /// V = sum_d m_d omega_d^2 (x_d - center_d)^2 / 2. An empty center means the origin.
  static Hamiltonian harmonic(const Grid& grid, Inertia inertia, std::vector<double> omega,
                              std::vector<double> center = {});

  /// Throws InvalidArgument if the potential is not finite, the grid differs,
  /// or the coupling is malformed.
  void validate(const Grid& grid) const;
};

/// One Strang step exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2) with exact
/// cell-wise and mode-wise exponentials. Phase tables are precomputed so that
/// repeated stepping with a fixed dt is cheap.
class Propagator {
 public:
  Propagator(const Hamiltonian& hamiltonian, const Grid& grid, double dt);

  /// Advances psi in place by dt; throws NumericalFailure if a non-finite value appears.
  void step(Wavefunction& psi) const;
  double dt() const { return dt_; }

 private:
  void kick(Wavefunction& psi) const;
  void drift(Wavefunction& psi) const;

  Grid grid_;
  double dt_;
  SpectralTransform transform_;
  std::vector<cplx> kick_phase_;   // scalar half-kick per cell
  std::vector<cplx> drift_phase_;  // per spectral mode
  // half-kick 2x2 unitary per cell, row-major [u00, u01, u10, u11]
  std::vector<std::array<cplx, 4>> kick_matrix_;
};

/// Single step; dt may be negative (backward propagation) but not zero.
Wavefunction step(const Wavefunction& psi, const Hamiltonian& hamiltonian, double dt);

struct EvolutionLog {
  std::vector<double> times;
  std::vector<double> norms;
  std::vector<double> edge_masses;
  std::vector<double> continuity;  // residual summary of the step ending at each snapshot
  std::vector<std::string> warnings;
};

struct EvolutionOptions {
  double edge_warn = 1e-6;
  double edge_abort = 1e-3;
};

struct Evolution {
  std::vector<Wavefunction> snapshots;
  EvolutionLog log;
};

/// Steps psi to t_final. Snapshots are taken at the start, every
/// `snapshot_every` steps, and at the final step. t_final == 0 returns the
/// input as the only snapshot.
Evolution evolve(const Wavefunction& psi, const Hamiltonian& hamiltonian, double t_final,
                 double dt, std::size_t snapshot_every, const EvolutionOptions& options = {});

struct ContinuityResidual {
  RealField residual;
  double summary = 0.0;  // ||residual||_2 / ||rho_before||_2
};

/// r = (rho_after - rho_before)/dt + div((j_before + j_after)/2).
ContinuityResidual continuity_residual(const Wavefunction& before, const Wavefunction& after,
                                       const Hamiltonian& hamiltonian, double dt);

}  // namespace metaworld
