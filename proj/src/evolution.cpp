#include "metaworld/evolution.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "metaworld/errors.hpp"

namespace metaworld {

Hamiltonian Hamiltonian::free(const Grid& grid, Inertia inertia) {
  inertia.validate(grid.dims());
  return Hamiltonian{std::move(inertia), RealField{grid, std::vector<double>(grid.size(), 0.0)},
                     std::nullopt};
}

Hamiltonian Hamiltonian::harmonic(const Grid& grid, Inertia inertia, std::vector<double> omega,
                                  std::vector<double> center) {
  inertia.validate(grid.dims());
  if (center.empty()) center.assign(grid.dims(), 0.0);
  if (omega.size() != grid.dims() || center.size() != grid.dims()) {
    throw InvalidArgument("harmonic: omega and center need one entry per dimension");
  }
  RealField v{grid, std::vector<double>(grid.size(), 0.0)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    for (std::size_t d = 0; d < grid.dims(); ++d) {
      const double dx = grid.coordinate(i, d) - center[d];
      sum += 0.5 * inertia.masses[d] * omega[d] * omega[d] * dx * dx;
    }
    v.values[i] = sum;
  }
  return Hamiltonian{std::move(inertia), std::move(v), std::nullopt};
}

void Hamiltonian::validate(const Grid& grid) const {
  inertia.validate(grid.dims());
  if (!(potential.grid == grid)) throw InvalidArgument("hamiltonian: potential grid mismatch");
  for (double v : potential.values) {
    if (!std::isfinite(v)) throw InvalidArgument("hamiltonian: potential is not finite");
  }
  if (spinor_coupling) {
    const auto& c = *spinor_coupling;
    if (c.up.size() != grid.size() || c.down.size() != grid.size() ||
        c.off.size() != grid.size()) {
      throw InvalidArgument("hamiltonian: spinor coupling size mismatch");
    }
  }
}

Propagator::Propagator(const Hamiltonian& hamiltonian, const Grid& grid, double dt)
    : grid_(grid), dt_(dt), transform_(grid) {
  hamiltonian.validate(grid);
  if (!(std::isfinite(dt) && dt != 0.0)) throw InvalidArgument("propagator: dt must be nonzero");
  const double hbar = hamiltonian.inertia.hbar;
  const double tau = 0.5 * dt / hbar;

  kick_phase_.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    kick_phase_[i] = std::polar(1.0, -hamiltonian.potential.values[i] * tau);
  }

  if (hamiltonian.spinor_coupling) {
    const auto& c = *hamiltonian.spinor_coupling;
    kick_matrix_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      // V + C = s I + n.sigma
      const double s = hamiltonian.potential.values[i] + 0.5 * (c.up[i] + c.down[i]);
      const double nx = c.off[i].real();
      const double ny = -c.off[i].imag();
      const double nz = 0.5 * (c.up[i] - c.down[i]);
      const double n = std::sqrt(nx * nx + ny * ny + nz * nz);
      const cplx global = std::polar(1.0, -s * tau);
      const double cs = std::cos(n * tau);
      const double sn = n > 0.0 ? std::sin(n * tau) / n : 0.0;
      const cplx mi(0.0, -1.0);
      kick_matrix_[i] = {global * (cs + mi * sn * nz), global * (mi * sn * cplx(nx, -ny)),
                         global * (mi * sn * cplx(nx, ny)), global * (cs - mi * sn * nz)};
    }
  }

  const auto k = grid.wavenumbers();
  drift_phase_.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double kinetic = 0.0;
    for (std::size_t d = 0; d < grid.dims(); ++d) {
      const double kd = k[d][(i / grid.stride(d)) % grid.points(d)];
      kinetic += hbar * hbar * kd * kd / (2.0 * hamiltonian.inertia.masses[d]);
    }
    drift_phase_[i] = std::polar(1.0, -kinetic * dt / hbar);
  }
}

void Propagator::kick(Wavefunction& psi) const {
  const std::size_t n = grid_.size();
  if (!kick_matrix_.empty() && psi.components() == 2) {
    auto up = psi.component(0);
    auto down = psi.component(1);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      const auto& u = kick_matrix_[i];
      const cplx a = up[i];
      const cplx b = down[i];
      up[i] = u[0] * a + u[1] * b;
      down[i] = u[2] * a + u[3] * b;
    }
    return;
  }
  for (std::size_t c = 0; c < psi.components(); ++c) {
    auto v = psi.component(c);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) v[i] *= kick_phase_[i];
  }
}

void Propagator::drift(Wavefunction& psi) const {
  const std::size_t n = grid_.size();
  for (std::size_t c = 0; c < psi.components(); ++c) {
    auto v = psi.component(c);
    transform_.forward(v);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) v[i] *= drift_phase_[i];
    transform_.inverse(v);
  }
}

void Propagator::step(Wavefunction& psi) const {
  if (!(psi.grid() == grid_)) throw InvalidArgument("step: grid mismatch");
  kick(psi);
  drift(psi);
  kick(psi);
  if (!psi.is_finite()) {
    throw NumericalFailure("step produced non-finite amplitudes; check dt and the potential");
  }
  psi.set_time(psi.time() + dt_);
}

Wavefunction step(const Wavefunction& psi, const Hamiltonian& hamiltonian, double dt) {
  Propagator propagator(hamiltonian, psi.grid(), dt);
  Wavefunction out = psi;
  propagator.step(out);
  return out;
}

namespace {

void record(EvolutionLog& log, const Wavefunction& psi, double continuity,
            const EvolutionOptions& options) {
  const double edge = edge_mass(psi);
  log.times.push_back(psi.time());
  log.norms.push_back(psi.norm());
  log.edge_masses.push_back(edge);
  log.continuity.push_back(continuity);
  if (edge > options.edge_abort) {
    std::ostringstream msg;
    msg << "edge mass " << edge << " at t=" << psi.time() << " exceeds abort threshold "
        << options.edge_abort << "; enlarge the box";
    throw NumericalFailure(msg.str());
  }
  if (edge > options.edge_warn) {
    std::ostringstream msg;
    msg << "edge mass " << edge << " at t=" << psi.time() << " above " << options.edge_warn;
    log.warnings.push_back(msg.str());
  }
}

}  // namespace

Evolution evolve(const Wavefunction& psi, const Hamiltonian& hamiltonian, double t_final,
                 double dt, std::size_t snapshot_every, const EvolutionOptions& options) {
  if (!(t_final >= 0.0)) throw InvalidArgument("evolve: t_final must be >= 0");
  if (snapshot_every == 0) throw InvalidArgument("evolve: snapshot_every must be >= 1");
  hamiltonian.validate(psi.grid());

  Evolution result;
  result.snapshots.push_back(psi);
  record(result.log, psi, 0.0, options);
  if (t_final == 0.0) return result;

  if (!(dt > 0.0)) throw InvalidArgument("evolve: dt must be > 0");
  const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
  if (steps == 0 || std::abs(static_cast<double>(steps) * dt - t_final) > 1e-9) {
    throw InvalidArgument("evolve: dt does not divide t_final");
  }

  const Propagator propagator(hamiltonian, psi.grid(), dt);
  const double t0 = psi.time();
  Wavefunction current_state = psi;
  for (std::size_t s = 1; s <= steps; ++s) {
    const bool snapshot = (s % snapshot_every == 0) || s == steps;
    if (snapshot) {
      Wavefunction before = current_state;
      propagator.step(current_state);
      current_state.set_time(t0 + static_cast<double>(s) * dt);
      const double summary = continuity_residual(before, current_state, hamiltonian, dt).summary;
      result.snapshots.push_back(current_state);
      record(result.log, current_state, summary, options);
    } else {
      propagator.step(current_state);
      current_state.set_time(t0 + static_cast<double>(s) * dt);
    }
  }
  return result;
}

ContinuityResidual continuity_residual(const Wavefunction& before, const Wavefunction& after,
                                       const Hamiltonian& hamiltonian, double dt) {
  if (!before.same_shape(after)) throw InvalidArgument("continuity_residual: grid mismatch");
  if (!(dt != 0.0 && std::isfinite(dt))) throw InvalidArgument("continuity_residual: dt must be nonzero");
  const Grid& g = before.grid();
  const RealField rho_b = density(before);
  const RealField rho_a = density(after);
  const VectorField j_b = current(before, hamiltonian.inertia);
  const VectorField j_a = current(after, hamiltonian.inertia);

  SpectralTransform transform(g);
  std::vector<cplx> jd(g.size());
  std::vector<cplx> djd(g.size());
  ContinuityResidual out{RealField{g, std::vector<double>(g.size(), 0.0)}, 0.0};
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.residual.values[i] = (rho_a.values[i] - rho_b.values[i]) / dt;
  }
  for (std::size_t d = 0; d < g.dims(); ++d) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      jd[i] = 0.5 * (j_b.components[d][i] + j_a.components[d][i]);
    }
    spectral_derivative(transform, jd, d, djd);
    for (std::size_t i = 0; i < g.size(); ++i) out.residual.values[i] += djd[i].real();
  }

  double r2 = 0.0;
  double rho2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    r2 += out.residual.values[i] * out.residual.values[i];
    rho2 += rho_b.values[i] * rho_b.values[i];
  }
  out.summary = rho2 > 0.0 ? std::sqrt(r2 / rho2) : std::sqrt(r2);
  return out;
}

}  // namespace metaworld
