#include <doctest.h>

#include "metaworld/errors.hpp"
#include "metaworld/spin.hpp"
#include "setups.hpp"

using namespace metaworld;

namespace {

SpinSetup make(cplx alpha, cplx beta) {
  const Grid x({{-8, 8}}, {64});
  const Grid y({{0, 40}}, {256});
  return SpinSetup::disentangled(alpha, beta, states::gaussian(x, {0}, {1}),
                                 testing::pointer_with(y, {{14.5, 21.5}, {26.5, 33.5}}));
}

double component_mass(const Wavefunction& psi, std::size_t c) {
  double m = 0;
  for (auto v : psi.component(c)) m += std::norm(v);
  return m * psi.grid().cell_volume();
}

}  // namespace

TEST_CASE("spin premeasurement") {
  const auto up = spin_premeasurement(make(1, 0));
  CHECK(up.components() == 2);
  CHECK(component_mass(up, 1) == 0.0);
  const auto s = make(std::sqrt(0.5), std::sqrt(0.5));
  const auto pre = spin_premeasurement(s);
  CHECK(std::abs(pre.norm() - 1) < 1e-12);
  for (std::size_t i = 0; i < pre.grid().size(); ++i) CHECK(pre.component(0)[i] == pre.component(1)[i]);
}

TEST_CASE("stern-gerlach transition") {
  const auto s1 = make(1, 0);
  const auto post1 = stern_gerlach_measure(spin_premeasurement(s1), s1);
  const auto expected = tensor_product(s1.psi_up, s1.pointer.states[0]);
  double err = 0;
  for (std::size_t i = 0; i < expected.grid().size(); ++i) err = std::max(err, std::abs(post1.component(0)[i] - expected.component(0)[i]));
  CHECK(err < 1e-14);
  CHECK(component_mass(post1, 1) == 0.0);

  const auto s = make(std::sqrt(0.5), std::sqrt(0.5));
  const auto pre = spin_premeasurement(s);
  const auto post = stern_gerlach_measure(pre, s);
  CHECK(component_mass(post, 0) == doctest::Approx(component_mass(post, 1)).epsilon(1e-12));
  CHECK(std::abs(post.norm() - pre.norm()) <= 1e-10);

  auto tangled = pre;
  tangled.component(0)[100] += 0.5;
  CHECK_THROWS_AS(stern_gerlach_measure(tangled, s), ModelViolation);
}

TEST_CASE("spin probabilities") {
  const auto s = make(std::sqrt(0.25), std::sqrt(0.75));
  const auto p = spin_probabilities(stern_gerlach_measure(spin_premeasurement(s), s), s);
  CHECK(std::abs(p.up - 0.25) <= 1e-10);
  CHECK(std::abs(p.down - 0.75) <= 1e-10);
  CHECK(std::abs(p.up + p.down - 1) <= 1e-10);

  const auto c = make(1, 0);
  const auto q = spin_probabilities(stern_gerlach_measure(spin_premeasurement(c), c), c);
  CHECK(q.up == doctest::Approx(1.0));
  CHECK(q.down == 0.0);

  const Grid x({{-8, 8}}, {64});
  const auto up = std::sqrt(0.4) * states::gaussian(x, {-1}, {1});
  const auto down = 1.3 * states::gaussian(x, {2}, {0.8}, {1});
  const auto e = SpinSetup::entangled(up, down, make(1, 0).pointer);
  const auto pe = spin_probabilities(stern_gerlach_measure(spin_premeasurement(e), e), e);
  const double expected = 0.4 / (0.4 + down.norm_squared());
  CHECK(std::abs(pe.up - expected) <= 1e-10);
  CHECK(spin_reference(e).first == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("property: spin probabilities are invariant and sum to one") {
  testing::Gen gen(57);
  for (int trial = 0; trial < 20; ++trial) {
    const cplx a = gen.complex(), b = gen.complex();
    const auto s = make(a, b);
    const auto post = stern_gerlach_measure(spin_premeasurement(s), s);
    const auto p = spin_probabilities(post, s);
    CHECK(std::abs(p.up + p.down - 1) <= 1e-10);
    CHECK(std::abs(p.up - std::norm(a) / (std::norm(a) + std::norm(b))) <= 1e-8);
    const auto scaled = spin_probabilities(gen.complex(3.0) * post, s);
    CHECK(std::abs(scaled.up - p.up) <= 1e-12);
    const auto t = make(a, b * std::polar(1.0, gen.uniform(0, 6)));
    CHECK(std::abs(spin_probabilities(stern_gerlach_measure(spin_premeasurement(t), t), t).up - p.up) <= 1e-12);
  }
}

TEST_CASE("spin readout and sampled frequencies") {
  const auto s = make(std::sqrt(0.25), std::sqrt(0.75));
  const double up_world[] = {0.0, 18.0};
  const double gap_world[] = {0.0, 24.0};
  CHECK(spin_readout(up_world, s) == std::optional<std::size_t>(SpinSetup::kUp));
  CHECK_FALSE(spin_readout(gap_world, s));
  const auto worlds = sample_worlds(stern_gerlach_measure(spin_premeasurement(s), s), 10000, 21);
  double up = 0;
  for (std::size_t w = 0; w < worlds.size(); ++w) up += spin_readout(worlds.position(w), s) == SpinSetup::kUp;
  CHECK(std::abs(up / 1e4 - 0.25) <= 3 * testing::binomial_sigma(0.25, 1e4));
}

TEST_CASE("spin setup validation") {
  auto s = make(1, 0);
  s.pointer.states.pop_back();
  s.pointer.regions.pop_back();
  CHECK_THROWS(s.validate());
  auto t = make(0, 0);
  CHECK_THROWS(t.validate());
}
