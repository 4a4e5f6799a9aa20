#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;  // stdout and stderr
};

Outcome sim(const std::string& args) {
  const std::string cmd = std::string(METAWORLD_SIM) + " " + args + " 2>&1";
  Outcome out;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) out.output += buf.data();
  const int status = ::pclose(pipe);
  out.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

fs::path fresh(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "metaworld_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::string scenario(const std::string& name) { return std::string(METAWORLD_SCENARIO_DIR) + "/" + name + ".json"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("run and verify the two-branch scenario") {
  const auto dir = fresh("born");
  const auto run = sim("run " + scenario("two-branch-born") + " --output " + dir.string());
  CHECK(run.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "measurement.json"));
  CHECK(std::abs(report["probabilities_volume"][0].get<double>() - 0.3) <= 1e-8);
  CHECK(std::abs(report["probabilities_volume"][1].get<double>() - 0.7) <= 1e-8);
  CHECK(std::abs(report["worlds"]["empirical_frequencies"][0].get<double>() - 0.3) <= 0.015);
  const auto verify = sim("verify " + dir.string());
  CHECK(verify.code == 0);
  CHECK(verify.output.find("verify: ok") != std::string::npos);
  // verify only reads, so a second pass gives the same answer
  CHECK(sim("verify " + dir.string()).output == verify.output);
}

TEST_CASE("tampered norm column fails verification") {
  const auto dir = fresh("tamper");
  REQUIRE(sim("run " + scenario("free-gaussian") + " --output " + dir.string() + " --threads 1").code == 0);
  const auto log = dir / "evolution_log.csv";
  std::istringstream in(slurp(log));
  std::ostringstream out;
  std::string line;
  for (int row = 0; std::getline(in, line); ++row) {
    if (row == 5) {
      // norm is the second column
      const auto a = line.find(',');
      const auto b = line.find(',', a + 1);
      line = line.substr(0, a + 1) + "0.99" + line.substr(b);
    }
    out << line << '\n';
  }
  std::ofstream(log) << out.str();
  const auto verify = sim("verify " + dir.string());
  CHECK(verify.code == 1);
  CHECK(verify.output.find("FAIL evolution.norm_conservation") != std::string::npos);
  CHECK(verify.output.find("FAIL evolution.snapshots_match_log") != std::string::npos);
}

TEST_CASE("tampered snapshot fails verification") {
  const auto dir = fresh("snapshot");
  REQUIRE(sim("run " + scenario("free-gaussian") + " --output " + dir.string()).code == 0);
  const auto snap = dir / "snapshots" / "psi_000010.bin";
  auto bytes = slurp(snap);
  // wipe the amplitudes around the packet center (the payload is the last 512 * 16 bytes)
  std::fill(bytes.end() - 256 * 16 - 800, bytes.end() - 256 * 16 + 800, '\0');
  std::ofstream(snap, std::ios::binary) << bytes;
  const auto verify = sim("verify " + dir.string());
  CHECK(verify.code == 1);
  CHECK(verify.output.find("FAIL evolution.snapshots_match_log") != std::string::npos);
  CHECK(verify.output.find("FAIL manifest.digests") != std::string::npos);

  // a single flipped low-order bit escapes the invariants but not the digest
  const auto other = dir / "snapshots" / "psi_000020.bin";
  auto more = slurp(other);
  more[more.size() - 4000] ^= 0x01;
  std::ofstream(other, std::ios::binary) << more;
  CHECK(sim("verify " + dir.string()).output.find("psi_000020.bin") != std::string::npos);
}

TEST_CASE("verify distinguishes absence from violation") {
  const auto dir = fresh("empty");
  fs::create_directories(dir);
  const auto verify = sim("verify " + dir.string());
  CHECK(verify.code == 3);
  CHECK(verify.output.find("manifest") != std::string::npos);
}

TEST_CASE("malformed configs exit 2 naming the key") {
  const auto dir = fresh("malformed");
  fs::create_directories(dir);
  auto config = nlohmann::json::parse(slurp(scenario("free-gaussian")));
  config["evolution"]["snapshot_every"] = -3;
  std::ofstream(dir / "bad.json") << config.dump();
  const auto run = sim("run " + (dir / "bad.json").string() + " --output " + (dir / "out").string());
  CHECK(run.code == 2);
  CHECK(run.output.find("/evolution/snapshot_every") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));

  std::ofstream(dir / "broken.json") << "{\"schema_version\": 1,";
  CHECK(sim("run " + (dir / "broken.json").string()).code == 2);
  CHECK(sim("run " + (dir / "missing.json").string()).code == 2);
  CHECK(sim("frobnicate").code == 2);
}

TEST_CASE("runtime aborts exit 3") {
  const auto dir = fresh("abort");
  fs::create_directories(dir);
  auto config = nlohmann::json::parse(slurp(scenario("free-gaussian")));
  config["initial_state"]["boost"] = {30};
  config.erase("worlds");
  std::ofstream(dir / "runner.json") << config.dump();
  const auto run = sim("run " + (dir / "runner.json").string() + " --output " + (dir / "out").string());
  CHECK(run.code == 3);
  CHECK(run.output.find("edge") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
  const auto a = fresh("rerun_a"), b = fresh("rerun_b");
  REQUIRE(sim("run " + scenario("free-gaussian") + " --output " + a.string()).code == 0);
  REQUIRE(sim("run " + scenario("free-gaussian") + " --output " + b.string() + " --threads 1").code == 0);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    const auto rel = fs::relative(entry.path(), a);
    CAPTURE(rel.string());
    CHECK(slurp(entry.path()) == slurp(b / rel));
  }
  auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  ma.erase("created");
  mb.erase("created");
  CHECK(ma == mb);
}
