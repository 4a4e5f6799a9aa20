#include <cmath>
#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "metaworld/errors.hpp"
#include "metaworld/io.hpp"
#include "metaworld/scenario.hpp"

namespace metaworld::scenario {

using nlohmann::json;

bool VerifyReport::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

namespace {

namespace fs = std::filesystem;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing artifact " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("unreadable artifact " + path.string() + ": " + e.what());
  }
}

std::string show(double v) { return io::format_number(v); }

class Checker {
 public:
  explicit Checker(VerifyReport& report) : report_(report) {}

  void add(std::string name, bool ok, std::string detail) {
    report_.checks.push_back({std::move(name), ok, std::move(detail)});
  }
  // |actual - expected| <= tol
  void near(const std::string& name, double actual, double expected, double tol) {
    const double err = std::abs(actual - expected);
    add(name, std::isfinite(err) && err <= tol,
        "|" + show(actual) + " - " + show(expected) + "| = " + show(err) + " (tol " + show(tol) + ")");
  }
  void at_most(const std::string& name, double value, double bound) {
    add(name, std::isfinite(value) && value <= bound, show(value) + " <= " + show(bound));
  }

 private:
  VerifyReport& report_;
};

double tolerance(const json& manifest, const char* key, double fallback) {
  const auto& t = manifest.value("tolerances", json::object());
  return t.contains(key) ? t.at(key).get<double>() : fallback;
}

void verify_evolution(const fs::path& dir, const json& manifest, const json& report, Checker& check) {
  const io::CsvTable log = io::read_csv(dir / "evolution_log.csv");
  const std::size_t norm_col = log.column("norm");
  const std::size_t time_col = log.column("time");
  const std::size_t cont_col = log.column("continuity_summary");
  if (log.rows.empty()) throw Error("evolution_log.csv has no rows");

  const double n0 = log.rows.front()[norm_col];
  double drift = 0.0;
  double worst = 0.0;
  for (const auto& row : log.rows) {
    drift = std::max(drift, std::abs(row[norm_col] - n0) / n0);
    worst = std::max(worst, row[cont_col]);
  }
  check.at_most("evolution.norm_conservation", drift, tolerance(manifest, "norm_drift", 1e-10));
  check.at_most("evolution.continuity", worst, tolerance(manifest, "continuity_summary", 1e-3));

  const auto& snapshots = report.at("snapshots");
  bool consistent = true;
  std::string detail = std::to_string(snapshots.size()) + " snapshots match the log";
  for (const auto& entry : snapshots) {
    const std::size_t row = entry.at("log_row").get<std::size_t>();
    const Wavefunction psi = io::read_wavefunction(dir / entry.at("file").get<std::string>());
    if (row >= log.rows.size()) {
      consistent = false;
      detail = "snapshot refers to missing log row " + std::to_string(row);
      break;
    }
    const double logged = log.rows[row][norm_col];
    const double stored = psi.norm();
    if (!psi.is_finite() || std::abs(stored - logged) > 1e-12 * std::max(1.0, logged) ||
        std::abs(psi.time() - log.rows[row][time_col]) > 1e-9) {
      consistent = false;
      detail = entry.at("file").get<std::string>() + ": norm " + show(stored) + " vs logged " + show(logged);
      break;
    }
  }
  check.add("evolution.snapshots_match_log", consistent, detail);
}

void verify_equivariance(const fs::path& dir, const json& eq, Checker& check) {
  Grid grid({{0.0, 1.0}}, {8});
  const WorldEnsemble final_worlds = io::read_ensemble(dir / "ensemble_final.bin", &grid);
  const Wavefunction psi = io::read_wavefunction(dir / eq.at("final_snapshot").get<std::string>());
  const std::size_t bins = eq.at("bins").get<std::size_t>();
  const double tv = equivariance_distance(final_worlds, psi, bins);
  check.near("equivariance.tv_recomputed", tv, eq.at("tv_final").get<double>(), 1e-12);
  const double budget = eq.at("tv_budget").get<double>();
  check.at_most("equivariance.tv_final", tv, budget);
  check.at_most("equivariance.tv_initial", eq.at("tv_initial").get<double>(), budget);
  if (grid.dims() == 1) {
    check.add("equivariance.ordering",
              eq.at("ordering_violations").get<std::size_t>() == 0,
              std::to_string(eq.at("ordering_violations").get<std::size_t>()) + " ordering violations");
    // the final unwrapped positions must be ranked as the initial ones were
    const WorldEnsemble initial = io::read_ensemble(dir / "ensemble_initial.bin");
    auto ranking = [](const WorldEnsemble& e) {
      std::vector<std::size_t> order(e.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return e.unwrapped[a] < e.unwrapped[b]; });
      return order;
    };
    const bool same = initial.size() == final_worlds.size() && ranking(initial) == ranking(final_worlds);
    check.add("equivariance.final_order", same,
              same ? "final worlds keep their initial order" : "final worlds are out of order");
  }
}

void verify_measurement(const fs::path& dir, const Scenario& s, const json& m, Checker& check) {
  const MeasurementSetup& setup = s.measurement->setup;
  const Wavefunction post = io::read_wavefunction(dir / "measurement_post.bin");
  if (!(post.grid() == setup.product_grid())) throw Error("measurement_post.bin has the wrong grid");
  const OutcomeProbabilities p = outcome_probabilities(post, setup);
  const auto born = born_reference(setup);
  double worst = 0.0;
  for (std::size_t i = 0; i < born.size(); ++i) worst = std::max(worst, std::abs(p.probabilities[i] - born[i]));
  check.at_most("measurement.born_identity", worst, 1e-8);
  double stored = 0.0;
  const auto reported = m.at("probabilities_volume").get<std::vector<double>>();
  for (std::size_t i = 0; i < born.size() && i < reported.size(); ++i) {
    stored = std::max(stored, std::abs(reported[i] - p.probabilities[i]));
  }
  check.add("measurement.report_matches_state", reported.size() == born.size() && stored <= 1e-12,
            "max report deviation " + show(stored));

  const Expectation e = expectation(setup, p.probabilities);
  check.near("measurement.expectation_routes", e.from_probabilities, e.from_operator, 1e-10);

  if (m.contains("worlds")) {
    const auto& w = m.at("worlds");
    const std::size_t n = w.at("count").get<std::size_t>();
    for (const char* key : {"empirical_frequencies", "direct_sampling_frequencies"}) {
      const auto freq = w.at(key).get<std::vector<double>>();
      double z = 0.0;
      for (std::size_t i = 0; i < born.size(); ++i) {
        const double sigma = std::sqrt(std::max(born[i] * (1.0 - born[i]), 1e-300) / static_cast<double>(n));
        z = std::max(z, std::abs(freq.at(i) - born[i]) / sigma);
      }
      check.at_most(std::string("measurement.") + key + "_sigmas", z, 3.0);
    }
  }
  if (m.contains("collapse")) {
    check.at_most("measurement.collapse_divergence", m.at("collapse").at("max_divergence").get<double>(), 1e-6);
  }
}

void verify_spin(const fs::path& dir, const Scenario& s, const json& r, Checker& check) {
  const SpinSetup& setup = s.spin->setup;
  const Wavefunction post = io::read_wavefunction(dir / "spin_post.bin");
  if (!(post.grid() == setup.product_grid()) || post.components() != 2) {
    throw Error("spin_post.bin has the wrong shape");
  }
  const SpinProbabilities p = spin_probabilities(post, setup);
  const auto [up, down] = spin_reference(setup);
  check.near("spin.probability_up", p.up, up, 1e-8);
  check.near("spin.probability_down", p.down, down, 1e-8);
  check.near("spin.report_matches_state", r.at("probability_up").get<double>(), p.up, 1e-12);
  if (r.contains("worlds")) {
    const auto& w = r.at("worlds");
    const double n = w.at("count").get<double>();
    const double sigma = std::sqrt(std::max(up * (1.0 - up), 1e-300) / n);
    check.at_most("spin.empirical_sigmas", std::abs(w.at("empirical_up").get<double>() - up) / sigma, 3.0);
  }
}

void verify_projection(const fs::path& dir, const Scenario& s, const json& r, Checker& check) {
  const io::CsvTable table = io::read_csv(dir / "projection.csv");
  const std::size_t col = table.column("density");
  const Grid phys = s.projection->layout.physical_grid(s.projection->state.grid());
  if (table.rows.size() != phys.size()) throw Error("projection.csv has the wrong number of rows");
  double integral = 0.0;
  for (const auto& row : table.rows) integral += row[col] * phys.cell_volume();
  const double total = world_volume(s.projection->state, Region::full(s.projection->state.grid()));
  const double particles = static_cast<double>(s.projection->layout.particles());
  check.near("projection.total_count", integral / total, particles, 1e-10 * particles);
  check.near("projection.report_total", r.at("expected_count_total").get<double>(), particles, 1e-10 * particles);
}

}  // namespace

VerifyReport verify(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a run directory: " + dir.string());
  const json manifest = read_json(dir / "manifest.json");
  VerifyReport out;
  Checker check(out);

  try {
    for (const auto& name : manifest.at("artifacts")) {
      if (!fs::exists(dir / name.get<std::string>())) {
        throw Error("missing artifact " + name.get<std::string>());
      }
    }
    std::string altered;
    const json digests = manifest.value("digests", json::object());
    for (const auto& [name, expected] : digests.items()) {
      if (file_digest(dir / name) != expected.get<std::string>()) altered += (altered.empty() ? "" : ", ") + name;
    }
    check.add("manifest.digests", altered.empty(),
              altered.empty() ? std::to_string(digests.size()) + " artifacts unchanged" : "changed since the run: " + altered);
    const json config = read_json(dir / "config.json");
    const std::string hash = config_hash(config);
    check.add("manifest.config_hash", hash == manifest.at("config_hash").get<std::string>(),
              hash + " vs " + manifest.at("config_hash").get<std::string>());
    const Scenario s = parse(config);
    const json report = read_json(dir / "report.json");

    if (s.evolution) verify_evolution(dir, manifest, report.at("evolution"), check);
    if (s.worlds) verify_equivariance(dir, read_json(dir / "equivariance.json"), check);
    if (s.measurement) verify_measurement(dir, s, read_json(dir / "measurement.json"), check);
    if (s.spin) verify_spin(dir, s, read_json(dir / "spin.json"), check);
    if (s.projection) verify_projection(dir, s, read_json(dir / "projection.json"), check);
  } catch (const json::exception& e) {
    throw Error(std::string("malformed artifact: ") + e.what());
  }
  return out;
}

}  // namespace metaworld::scenario
