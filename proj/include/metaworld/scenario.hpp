#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "metaworld/evolution.hpp"
#include "metaworld/measurement.hpp"
#include "metaworld/projection.hpp"
#include "metaworld/spin.hpp"

namespace metaworld::scenario {

inline constexpr int kSchemaVersion = 1;

struct EvolutionSpec {
  double t_final = 0.0;
  double dt = 0.0;
  std::size_t snapshot_every = 1;
  EvolutionOptions options;
  double continuity_tolerance = 1e-3;
};

struct WorldsSpec {
  std::size_t count = 0;
  std::size_t bins = 64;
  double dt_fraction = 0.25;
  double tv_budget = 0.05;
  std::size_t csv_worlds = 100;
  std::size_t csv_time_stride = 1;
};

struct CollapseSpec {
  std::size_t branch = 0;
  std::size_t test_worlds = 100;
  double system_omega = 0.0;   // 0: free system coordinates
  double pointer_omega = 0.0;  // 0: 1 / width^2, so each pointer state sits in its own well
  CollapseCheckOptions options;
};

struct MeasurementSpec {
  MeasurementSetup setup;
  std::size_t worlds = 0;
  std::optional<CollapseSpec> collapse;
};

struct SpinSpec {
  SpinSetup setup;
  std::optional<std::pair<cplx, cplx>> coefficients;  // set for disentangled states
  std::size_t worlds = 0;
};

struct ProjectionSpec {
  Wavefunction state;
  ParticleLayout layout;
  std::vector<Interval> region;  // one interval per physical axis
};

/// A validated scenario file. Stages are present when their section is.
struct Scenario {
  nlohmann::json config;  // canonical copy of the input
  std::string name;
  std::uint64_t seed = 0;
  std::optional<Grid> grid;
  Inertia inertia;
  std::optional<Wavefunction> initial_state;
  std::optional<Hamiltonian> hamiltonian;
  std::optional<EvolutionSpec> evolution;
  std::optional<WorldsSpec> worlds;
  std::optional<MeasurementSpec> measurement;
  std::optional<SpinSpec> spin;
  std::optional<ProjectionSpec> projection;
  std::filesystem::path output_directory;
  std::size_t snapshot_stride = 1;
  bool write_csv = true;
};

/// Throws ConfigError naming the offending key.
Scenario parse(const nlohmann::json& config);
Scenario load(const std::filesystem::path& path);

/// "fnv1a64:<hex>" of the canonical JSON text.
std::string config_hash(const nlohmann::json& config);
/// Same digest over a file's bytes.
std::string file_digest(const std::filesystem::path& path);

struct RunResult {
  std::filesystem::path directory;
  nlohmann::json report;  // summary of every stage
  std::vector<std::string> warnings;
};

/// Runs every stage and writes the artifact tree. Throws metaworld::Error
/// (other than ConfigError) on runtime failure.
RunResult run(const Scenario& scenario, const std::filesystem::path& output_directory);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<Check> checks;
  bool passed() const;
};

/// Re-checks stored artifacts against the invariant suite. Throws
/// metaworld::Error when the directory has no manifest or an artifact it
/// lists is missing or unreadable; a violated invariant is a failed Check.
VerifyReport verify(const std::filesystem::path& directory);

}  // namespace metaworld::scenario
