#pragma once

#include <vector>

#include "metaworld/wavefunction.hpp"

namespace metaworld::states {

// Parameterized initial states. Gaussian widths follow the amplitude
// convention psi ~ exp(-(x - c)^2 / (2 w^2)), so the harmonic ground state
// for m = omega = hbar = 1 has w = 1 and |psi|^2 has standard deviation w/sqrt(2).

/// Normalized product Gaussian with per-dimension center, width and boost k.
Wavefunction gaussian(const Grid& grid, std::vector<double> center, std::vector<double> width,
                      std::vector<double> boost = {});

/// exp(i k.x), unnormalized (unit amplitude).
Wavefunction plane_wave(const Grid& grid, std::vector<double> k);

/// 1D Gaussian restricted to the interval: zero outside, normalized to `norm`.
Wavefunction truncated_gaussian(const Grid& grid, double center, double width, Interval support,
                                double norm = 1.0);

/// First `count` harmonic-oscillator eigenfunctions on a 1D grid (omega = m = hbar = 1
/// scaled by `width`), orthonormalized in the grid quadrature.
std::vector<Wavefunction> hermite_basis(const Grid& grid, std::size_t count, double center = 0.0,
                                        double width = 1.0);

/// Gram-Schmidt in the grid inner product; throws if the set is linearly dependent.
std::vector<Wavefunction> orthonormalize(std::vector<Wavefunction> states);

/// psi / ||psi||; throws on a zero state.
Wavefunction normalized(Wavefunction psi);

/// 2-component state (alpha chi, beta chi).
Wavefunction spinor(const Wavefunction& chi, cplx alpha, cplx beta);

}  // namespace metaworld::states
