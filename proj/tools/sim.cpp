#include <iostream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "metaworld/errors.hpp"
#include "metaworld/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfig = 2;
constexpr int kRuntime = 3;

int run_command(const std::string& config, const std::string& output, int threads) {
  namespace sc = metaworld::scenario;
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
  sc::Scenario s;
  try {
    s = sc::load(config);
  } catch (const metaworld::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  const std::filesystem::path dir = output.empty() ? s.output_directory : std::filesystem::path(output);
  try {
    const auto result = sc::run(s, dir);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote " << dir.string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}

int verify_command(const std::string& dir) {
  try {
    const auto report = metaworld::scenario::verify(dir);
    for (const auto& c : report.checks) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  " << c.detail << '\n';
    }
    std::cout << (report.passed() ? "verify: ok" : "verify: FAILED") << '\n';
    return report.passed() ? kOk : kFailed;
  } catch (const std::exception& e) {
    std::cerr << "verify error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metaworld simulation driver"};
  app.set_version_flag("--version", std::string(METAWORLD_VERSION));
  app.require_subcommand(1);

  std::string config, output, directory;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run a scenario file and write its artifact directory");
  run->add_option("config", config, "Scenario JSON")->required();
  run->add_option("-o,--output", output, "Output directory (default: outputs.directory or the scenario name)");
  run->add_option("--threads", threads, "Worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);

  auto* verify = app.add_subcommand("verify", "Re-check the invariants of a run directory");
  verify->add_option("dir", directory, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }
  if (*run) return run_command(config, output, threads);
  return verify_command(directory);
}
