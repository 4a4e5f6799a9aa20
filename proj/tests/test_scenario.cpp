#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "metaworld/errors.hpp"
#include "metaworld/scenario.hpp"

using namespace metaworld;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base() {
  return json::parse(R"({
    "schema_version": 1,
    "name": "tiny",
    "seed": 3,
    "grid": {"extent": [[-8, 8]], "points": [64]},
    "initial_state": {"type": "gaussian", "center": [0], "width": [1]},
    "hamiltonian": {"type": "harmonic", "omega": [1]},
    "evolution": {"t_final": 0.5, "dt": 0.01, "snapshot_every": 10},
    "worlds": {"count": 4000, "bins": 16}
  })");
}

std::string error_key(const json& config) {
  try {
    (void)scenario::parse(config);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("bundled scenarios parse") {
  for (const auto& entry : fs::directory_iterator(METAWORLD_SCENARIO_DIR)) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(scenario::load(entry.path()));
  }
}

TEST_CASE("schema errors name the offending key") {
  CHECK(error_key(base()) == "<accepted>");

  auto c = base();
  c["schema_version"] = 2;
  CHECK(error_key(c) == "/schema_version");

  c = base();
  c["grid"]["points"][0] = 100;
  CHECK(error_key(c) == "/grid");

  c = base();
  c["initial_state"]["width"][0] = -1;
  CHECK(error_key(c) == "/initial_state/width/0");

  c = base();
  c["initial_state"]["type"] = "sombrero";
  CHECK(error_key(c) == "/initial_state/type");

  c = base();
  c["evolution"]["dt"] = 0.0;
  CHECK(error_key(c) == "/evolution/dt");

  c = base();
  c["evolution"]["dt"] = 0.3;
  CHECK(error_key(c) == "/evolution");

  c = base();
  c.erase("seed");
  CHECK(error_key(c) == "/seed");

  c = base();
  c["worlds"]["bins"] = 24;
  CHECK(error_key(c) == "/worlds/bins");

  c = base();
  c["colour"] = "blue";
  CHECK(error_key(c) == "/colour");

  c = base();
  c.erase("hamiltonian");
  CHECK(error_key(c) == "/hamiltonian");

  c = base();
  c["hamiltonian"] = {{"type", "tabulated"}, {"values", {1, 2, 3}}};
  CHECK(error_key(c) == "/hamiltonian/values");

  CHECK(error_key(json::array()) == "");
}

TEST_CASE("seed is optional only for deterministic scenarios") {
  auto c = base();
  c.erase("seed");
  c.erase("worlds");
  CHECK(error_key(c) == "<accepted>");
}

TEST_CASE("missing dt falls back to the phase-safe step") {
  auto c = base();
  c["evolution"].erase("dt");
  const auto s = scenario::parse(c);
  // harmonic V peaks at the outermost cell center, and the potential bound wins
  const double vmax = 0.5 * 7.875 * 7.875;
  CHECK(s.evolution->dt == doctest::Approx(0.5 / std::ceil(0.5 * vmax / 0.1)).epsilon(1e-12));
  CHECK(std::abs(std::round(0.5 / s.evolution->dt) * s.evolution->dt - 0.5) < 1e-12);

  c["hamiltonian"] = {{"type", "free"}};
  const double kmax = 3.141592653589793 / 0.25;
  CHECK(scenario::parse(c).evolution->dt <= 1.0 / (kmax * kmax));
}

TEST_CASE("config hash is stable and sensitive") {
  const auto a = scenario::config_hash(base());
  CHECK(a == scenario::config_hash(base()));
  CHECK(a.rfind("fnv1a64:", 0) == 0);
  auto c = base();
  c["seed"] = 4;
  CHECK(scenario::config_hash(c) != a);
}

TEST_CASE("run and verify a small scenario") {
  const auto dir = fs::temp_directory_path() / "metaworld_scenario_test";
  fs::remove_all(dir);
  const auto s = scenario::parse(base());
  const auto result = scenario::run(s, dir);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "snapshots" / "psi_000000.bin"));
  CHECK(result.report.contains("equivariance"));
  const auto report = scenario::verify(dir);
  for (const auto& c : report.checks) {
    CAPTURE(c.name);
    CAPTURE(c.detail);
    CHECK(c.passed);
  }
  CHECK(report.passed());

  fs::remove(dir / "evolution_log.csv");
  CHECK_THROWS_AS(scenario::verify(dir), Error);
  CHECK_THROWS_AS(scenario::verify(dir / "nowhere"), Error);
}
