#include <doctest.h>

#include <numbers>

#include "metaworld/errors.hpp"
#include "metaworld/measurement.hpp"
#include "setups.hpp"

using namespace metaworld;
using testing::two_outcome_setup;

namespace {

double max_diff(const Wavefunction& a, const Wavefunction& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

const double r3 = std::sqrt(0.3), r7 = std::sqrt(0.7), rh = std::sqrt(0.5);

}  // namespace

TEST_CASE("premeasurement states") {
  auto single = two_outcome_setup({1, 0});
  const auto pre = premeasurement_state(single);
  const auto product = tensor_product(single.basis[0], single.pointer.initial);
  CHECK(max_diff(pre, product) == 0.0);

  MeasurementSetup k1{single.system_grid, {single.basis[0]}, {1}, single.pointer, {7}};
  k1.pointer.states.pop_back();
  k1.pointer.regions.pop_back();
  CHECK(max_diff(premeasurement_state(k1), product) == 0.0);

  const auto mixed = premeasurement_state(two_outcome_setup({r3, r7}));
  CHECK(std::abs(mixed.norm_squared() - 1) <= 1e-10);
}

TEST_CASE("ideal measurement transition") {
  const auto s1 = two_outcome_setup({1, 0});
  const auto post1 = apply_ideal_measurement(premeasurement_state(s1), s1);
  CHECK(max_diff(post1, tensor_product(s1.basis[0], s1.pointer.states[0])) < 1e-14);

  const auto s = two_outcome_setup({rh, rh});
  const auto pre = premeasurement_state(s);
  const auto post = apply_ideal_measurement(pre, s);
  CHECK(std::abs(post.norm() - pre.norm()) <= 1e-10);
  const auto probs = outcome_probabilities(post, s);
  CHECK(probs.volumes[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(probs.volumes[1] == doctest::Approx(0.5).epsilon(1e-10));

  // the map is linear: a rescaled input maps to the rescaled output
  const cplx c(0.3, -2);
  CHECK(max_diff(apply_ideal_measurement(c * pre, s), c * post) < 1e-12);

  // inputs outside the span are rejected
  const auto stray = tensor_product(states::gaussian(s.system_grid, {0}, {1}, {3}), s.pointer.initial);
  CHECK_THROWS_AS(apply_ideal_measurement(stray, s), ModelViolation);
}

TEST_CASE("outcome probabilities") {
  auto check = [](std::vector<cplx> alpha, std::vector<double> expected) {
    const auto s = two_outcome_setup(alpha);
    const auto p = outcome_probabilities(apply_ideal_measurement(premeasurement_state(s), s), s);
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(std::abs(p.probabilities[i] - expected[i]) <= 1e-10);
  };
  check({r3, r7}, {0.3, 0.7});
  check({1, 3}, {0.1, 0.9});
  check({1, 0}, {1, 0});
}

TEST_CASE("born reference") {
  auto ref = [](std::vector<cplx> alpha) {
    auto s = two_outcome_setup({1, 0});
    s.coefficients = std::move(alpha);
    return born_reference(s);
  };
  const auto a = ref({r3, r7});
  CHECK(a[0] == doctest::Approx(0.3).epsilon(1e-15));
  const auto b = ref({cplx(0, 1), -1});
  CHECK(b[0] == 0.5);
  CHECK(b[1] == 0.5);
  CHECK_THROWS_AS(ref({0, 0}), InvalidArgument);

  const Grid x({{-8, 8}}, {32});
  const Grid y({{0, 64}}, {256});
  MeasurementSetup four{x, states::hermite_basis(x, 4), {1, 1, 1, 1},
                        testing::pointer_with(y, {{14, 20}, {24, 30}, {34, 40}, {44, 50}}), {0, 1, 2, 3}};
  for (double p : born_reference(four)) CHECK(p == 0.25);
}

TEST_CASE("expectation routes") {
  const auto sym = expectation(two_outcome_setup({rh, rh}, {1, -1}));
  CHECK(std::abs(sym.from_probabilities) < 1e-12);
  CHECK(std::abs(sym.from_operator) < 1e-12);
  // 0.3 * 2 + 0.7 * 5
  const auto e = expectation(two_outcome_setup({r3, r7}, {2, 5}));
  CHECK(e.from_probabilities == doctest::Approx(4.1).epsilon(1e-12));
  CHECK(e.from_operator == doctest::Approx(4.1).epsilon(1e-12));

  auto s = two_outcome_setup({1, 0}, {7, 0});
  const auto certain = expectation(s);
  CHECK(certain.from_probabilities == doctest::Approx(7));
  const std::vector<double> wrong{0.5, 0.5};
  CHECK_THROWS_AS(expectation(s, wrong), ModelViolation);
}

TEST_CASE("readout") {
  const auto s = two_outcome_setup({r3, r7});
  const double in_second[] = {0.0, 30.0};
  CHECK(readout(in_second, s) == std::optional<std::size_t>(1));
  const double between[] = {0.0, 24.0};
  CHECK_FALSE(readout(between, s));

  const auto post = apply_ideal_measurement(premeasurement_state(s), s);
  const auto worlds = sample_worlds(post, 10000, 8);
  double hits = 0;
  for (std::size_t w = 0; w < worlds.size(); ++w) hits += readout(worlds.position(w), s) == std::optional<std::size_t>(0);
  CHECK(std::abs(hits / 1e4 - 0.3) <= 0.015);
}

TEST_CASE("collapse") {
  const auto s = two_outcome_setup({r3, cplx(0, 1) * r7});
  const auto post = apply_ideal_measurement(premeasurement_state(s), s);
  const auto c0 = collapse(post, s, 0);
  CHECK(max_diff(collapse(c0, s, 0), c0) == 0.0);
  CHECK(max_diff(c0 + collapse(post, s, 1), post) <= 1e-10);
  CHECK(std::abs(c0.norm_squared() / post.norm_squared() - 0.3) <= 1e-10);
  // equals alpha_0 chi_0 (x) phi_0 on post-states
  CHECK(max_diff(c0, s.coefficients[0] * tensor_product(s.basis[0], s.pointer.states[0])) < 1e-12);
  CHECK_THROWS_AS(collapse(post, s, 2), InvalidArgument);
  CHECK_THROWS_AS(collapse(c0, s, 1), InvalidArgument);
}

TEST_CASE("carry-through keeps count, ids and system coordinates") {
  const auto s = two_outcome_setup({r3, r7});
  const auto pre = premeasurement_state(s);
  const auto before = sample_worlds(pre, 2000, 4);
  const auto after = carry_through_measurement(before, s, 19);
  REQUIRE(after.size() == before.size());
  CHECK(after.ids == before.ids);
  double first = 0;
  for (std::size_t w = 0; w < after.size(); ++w) {
    CHECK(after.positions[2 * w] == before.positions[2 * w]);
    const auto hit = readout(after.position(w), s);
    REQUIRE(hit);
    first += *hit == 0;
  }
  CHECK(std::abs(first / 2000 - 0.3) <= 4 * testing::binomial_sigma(0.3, 2000));
  const auto again = carry_through_measurement(before, s, 19);
  CHECK(again.positions == after.positions);
}

TEST_CASE("setup validation") {
  auto s = two_outcome_setup({r3, r7});
  CHECK_NOTHROW(s.validate());

  auto overlapping = s;
  overlapping.pointer = testing::pointer_with(s.pointer.grid, {{14.5, 21.5}, {21.5, 28.5}});
  CHECK_THROWS_AS(overlapping.validate(), ModelViolation);

  auto tight = s;  // 2 empty cells between regions is too close
  tight.pointer = testing::pointer_with(s.pointer.grid, {{14.5, 21.5}, {21.875, 28.5}});
  CHECK_THROWS(tight.validate());

  auto skew = s;
  skew.basis[1] = skew.basis[1] + 0.1 * skew.basis[0];
  CHECK_THROWS_AS(skew.validate(), ModelViolation);

  auto uneven = s;
  uneven.pointer.states[1] *= 1.5;
  CHECK_THROWS_AS(uneven.validate(), ModelViolation);

  auto leaky = s;
  leaky.pointer.states[0] = states::gaussian(s.pointer.grid, {18}, {3});
  CHECK_THROWS_AS(leaky.validate(), ModelViolation);

  auto mismatch = s;
  mismatch.coefficients.push_back(1);
  CHECK_THROWS(mismatch.validate());
}

TEST_CASE("property: born identity, invariances and expectation on random setups") {
  testing::Gen gen(41);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = testing::random_setup(gen);
    REQUIRE_NOTHROW(s.validate());
    const auto post = apply_ideal_measurement(premeasurement_state(s), s);
    const auto p = outcome_probabilities(post, s);
    const auto born = born_reference(s);
    for (std::size_t i = 0; i < s.outcomes(); ++i) CHECK(std::abs(p.probabilities[i] - born[i]) <= 1e-8);

    const auto scaled = outcome_probabilities(gen.complex(3.0) * post, s);
    for (std::size_t i = 0; i < s.outcomes(); ++i) CHECK(std::abs(scaled.probabilities[i] - p.probabilities[i]) <= 1e-12);

    auto rephased = s;
    for (auto& a : rephased.coefficients) a *= std::polar(1.0, gen.uniform(0, 6));
    const auto q = outcome_probabilities(apply_ideal_measurement(premeasurement_state(rephased), rephased), rephased);
    for (std::size_t i = 0; i < s.outcomes(); ++i) CHECK(std::abs(q.probabilities[i] - p.probabilities[i]) <= 1e-12);

    const auto e = expectation(s, p.probabilities);
    CHECK(std::abs(e.from_probabilities - e.from_operator) <= 1e-10);
  }
}

TEST_CASE("collapse equivalence") {
  const auto s = two_outcome_setup({0.6, cplx(0, 0.8)});
  // free system, pointer wells at the two region centers
  const Grid pg = s.product_grid();
  RealField v{pg, std::vector<double>(pg.size())};
  for (std::size_t i = 0; i < pg.size(); ++i) {
    const double y = pg.coordinate(i, 1);
    const double c = y < 24 ? 18 : 30;
    v.values[i] = 0.5 * 16 * (y - c) * (y - c);
  }
  const Hamiltonian h{Inertia::uniform(2), v, std::nullopt};
  const auto post = apply_ideal_measurement(premeasurement_state(s), s);
  const auto worlds = sample_worlds(collapse(post, s, 0), 20, 12);
  CollapseCheckOptions opt;
  opt.horizon = 0.2;
  opt.dt = 1e-3;
  const auto r = collapse_equivalence(worlds, s, 0, h, opt);
  CHECK(r.max_divergence <= 1e-6);
  CHECK(r.worlds == 20);

  // single branch: the two fields are the same state
  auto one = two_outcome_setup({1}, {0});
  one.basis.pop_back();
  one.pointer.states.pop_back();
  one.pointer.regions.pop_back();
  const auto one_post = apply_ideal_measurement(premeasurement_state(one), one);
  const auto r1 = collapse_equivalence(sample_worlds(one_post, 10, 3), one, 0, h, opt);
  CHECK(r1.max_divergence == 0.0);

  // worlds of branch 0 cannot be checked against branch 1
  CHECK_THROWS_AS(collapse_equivalence(worlds, s, 1, h, opt), InvalidArgument);

  // without confinement the pointer packets spread into each other
  CollapseCheckOptions strict = opt;
  strict.horizon = 1.2;
  strict.dt = 0.01;
  strict.overlap_abort = 1e-12;
  CHECK_THROWS_AS(collapse_equivalence(worlds, s, 0, Hamiltonian::free(pg, Inertia::uniform(2)), strict),
                  BranchesReinterfered);
}
