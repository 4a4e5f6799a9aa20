#pragma once

// Shared test helpers: a seeded random generator for property tests and
// closed-form oracles that do not go through the library's numerics.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "metaworld/grid.hpp"
#include "metaworld/spectral.hpp"
#include "metaworld/wavefunction.hpp"

namespace testing {

using metaworld::cplx;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  cplx complex(double radius = 1.0) {
    return std::polar(uniform(0.1, radius), uniform(-std::numbers::pi, std::numbers::pi));
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Fourth-order central difference of an analytic function.
inline cplx fd_derivative(const std::function<cplx(double)>& f, double x, double h = 1e-3) {
  return (-f(x + 2 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

// Free packet psi ~ exp(-x^2 / (2 w^2)) with hbar = m = 1: the variance of
// |psi|^2 is (w^2 + t^2 / w^2) / 2.
inline double free_variance(double w, double t) { return 0.5 * (w * w + t * t / (w * w)); }

// The density is self-similar, so each trajectory scales with the width.
inline double free_trajectory(double q0, double w, double t) {
  return q0 * std::sqrt(1.0 + t * t / (w * w * w * w));
}

inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

// Unnormalized Gaussian amplitude, evaluated directly.
inline cplx gaussian_amplitude(double x, double c, double w, double k = 0.0) {
  return std::exp(-(x - c) * (x - c) / (2 * w * w)) * std::polar(1.0, k * x);
}

inline double second_moment_about_mean(const metaworld::Wavefunction& psi) {
  const auto& g = psi.grid();
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = std::norm(psi.component(0)[i]);
    const double x = g.center(0, i);
    m0 += r;
    m1 += r * x;
    m2 += r * x * x;
  }
  const double mean = m1 / m0;
  return m2 / m0 - mean * mean;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
