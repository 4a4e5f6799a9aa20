#pragma once

// Measurement setups for tests: a fixed two-outcome geometry and a random
// generator of K-outcome setups with disjoint pointer intervals.

#include <algorithm>

#include "metaworld/measurement.hpp"
#include "metaworld/states.hpp"
#include "support.hpp"

namespace testing {

inline metaworld::PointerDevice pointer_with(const metaworld::Grid& y, std::vector<metaworld::Interval> regions,
                                            double width = 0.5) {
  using namespace metaworld;
  PointerDevice p{y, states::truncated_gaussian(y, 6, width, {2.5, 9.5}), {}, regions};
  for (const auto& iv : regions) {
    p.states.push_back(states::truncated_gaussian(y, 0.5 * (iv.lo + iv.hi), width, iv));
  }
  return p;
}

inline metaworld::MeasurementSetup two_outcome_setup(std::vector<metaworld::cplx> alpha,
                                                     std::vector<double> values = {0, 1}) {
  using namespace metaworld;
  const Grid x({{-8, 8}}, {64});
  const Grid y({{0, 40}}, {256});
  return MeasurementSetup{x, states::hermite_basis(x, 2), std::move(alpha),
                          pointer_with(y, {{14.5, 21.5}, {26.5, 33.5}}), std::move(values)};
}

// K in {2,3,4}, random complex coefficients, random disjoint pointer
// intervals (cell-aligned, at least 4 empty cells apart) and random widths.
inline metaworld::MeasurementSetup random_setup(Gen& gen) {
  using namespace metaworld;
  const std::size_t k = static_cast<std::size_t>(gen.integer(2, 4));
  const Grid x({{-8, 8}}, {32});
  const Grid y({{0, 64}}, {256});  // 0.25 per cell
  std::vector<Wavefunction> raw;
  for (std::size_t i = 0; i < k; ++i) {
    raw.push_back(states::gaussian(x, {gen.uniform(-3, 3)}, {gen.uniform(0.6, 1.6)}, {gen.uniform(-1.5, 1.5)}));
  }
  auto basis = states::orthonormalize(std::move(raw));
  std::vector<cplx> alpha;
  std::vector<double> values;
  for (std::size_t i = 0; i < k; ++i) {
    alpha.push_back(gen.complex(2.0));
    values.push_back(gen.uniform(-5, 5));
  }
  // chop the pointer axis into k + 1 slots; slot 0 holds the ready state
  const double width = gen.uniform(0.3, 0.7);
  std::vector<Interval> regions;
  const double slot = 64.0 / static_cast<double>(k + 1);
  for (std::size_t i = 1; i <= k; ++i) {
    const double lo = std::ceil((slot * i + 1.0 + gen.uniform(0, 1.5)) * 4) / 4;
    const double hi = std::floor((slot * (i + 1) - 1.0 - gen.uniform(0, 1.5)) * 4) / 4;
    regions.push_back({lo, hi});
  }
  PointerDevice p{y, states::truncated_gaussian(y, slot / 2, width, {1.0, slot - 1.0}), {}, regions};
  for (const auto& iv : regions) {
    p.states.push_back(states::truncated_gaussian(y, gen.uniform(iv.lo + 0.4 * (iv.hi - iv.lo), iv.hi - 0.4 * (iv.hi - iv.lo)),
                                                  width, iv));
  }
  return MeasurementSetup{x, std::move(basis), std::move(alpha), std::move(p), std::move(values)};
}

}  // namespace testing
