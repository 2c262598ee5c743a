#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "jumpflow/scenario.hpp"

using namespace jumpflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("jumpflow_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(JUMPFLOW_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string with_out(const std::string& body, const fs::path& out) {
  return body + "output: {dir: " + out.string() + "}\n";
}

const std::string additive_body =
    "name: additive_one\n"
    "model:\n"
    "  key: additive\n"
    "  params: {drift: 0.3, sigma: 0.7}\n"
    "  atoms: []\n"
    "time: {T: 0.5, steps: 100}\n"
    "seeds: {base: 5, count: 1}\n"
    "x0: 0.2\n";

const std::string pure_jump_body =
    "name: pj\n"
    "model:\n"
    "  key: pure_jump\n"
    "  atoms:\n"
    "    - {mark: 1.0, rate: 2.0}\n"
    "time: {T: 1.0, steps: 200}\n"
    "seeds: {base: 3, count: 2}\n"
    "x0: 0.5\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("scenario defaults") {
  const auto s = parse_scenario("model: {key: ou_jump}\n");
  CHECK(s.model.key == "ou_jump");
  CHECK(s.T == 1.0);
  CHECK(s.steps == 0);
  CHECK(s.points == 512);
  CHECK(s.seed == 1);
  CHECK(s.seed_count == 1);
  CHECK(s.mc_paths == 100000);
  CHECK(s.candidate == "registry");
  CHECK(s.tolerances.empty());
  CHECK(!s.model.atoms.has_value());
}

TEST_CASE("scenario errors carry line and field") {
  SUBCASE("unknown key") {
    try {
      parse_scenario("model: {key: ou_jump}\ntime:\n  T: 1.0\n  stepz: 10\n");
      FAIL("expected a parse error");
    } catch (const ScenarioError& e) {
      CHECK(e.line() == 4);
      CHECK(std::string(e.what()).find("stepz") != std::string::npos);
    }
  }
  SUBCASE("negative rate") {
    try {
      parse_scenario("model:\n  key: pure_jump\n  atoms:\n    - {mark: 1.0, rate: -2.0}\n");
      FAIL("expected a validation error");
    } catch (const ScenarioError& e) {
      CHECK(e.line() > 0);
      CHECK(e.field().rfind("model", 0) == 0);
    }
  }
  SUBCASE("unknown tolerance") {
    CHECK_THROWS_AS(parse_scenario("model: {key: ou_jump}\ntolerances: {speed: 1.0}\n"), ScenarioError);
  }
  SUBCASE("too few Monte Carlo paths") {
    CHECK_THROWS_AS(parse_scenario("model: {key: ou_jump}\nmonte_carlo: {paths: 10}\n"), ScenarioError);
  }
  SUBCASE("unknown registry key") {
    CHECK_THROWS_AS(parse_scenario("model: {key: lorenz}\n"), ScenarioError);
  }
}

TEST_CASE("scenario echo lists the resolved configuration") {
  const auto s = parse_scenario("model: {key: ou_jump}\nseeds: {base: 9, count: 3}\n");
  bool base = false, count = false;
  for (const auto& [k, v] : s.echo) {
    base |= k == "seeds.base" && v == "9";
    count |= k == "seeds.count" && v == "3";
  }
  CHECK(base);
  CHECK(count);
}

TEST_CASE("simulate on an additive model keeps the Jacobian at one") {
  const auto dir = scratch("simulate");
  const auto scenario = write_file(dir / "s.yaml", with_out(additive_body, dir / "out"));
  REQUIRE(run_cli("simulate --scenario " + scenario.string(), dir / "log.txt") == 0);
  std::istringstream csv(slurp(dir / "out" / "trajectory_seed5.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,x_1,J,jump_flag");
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream fields(line);
    std::string t, x, j, flag;
    std::getline(fields, t, ',');
    std::getline(fields, x, ',');
    std::getline(fields, j, ',');
    std::getline(fields, flag, ',');
    CHECK(j == "1");
    CHECK(flag == "0");
    ++rows;
  }
  CHECK(rows == 101);
}

TEST_CASE("verify-integral on pure jumps reports zero drift") {
  const auto dir = scratch("verify");
  const auto scenario = write_file(dir / "s.yaml", with_out(pure_jump_body, dir / "out"));
  REQUIRE(run_cli("verify-integral --scenario " + scenario.string(), dir / "log.txt") == 0);
  const auto report = slurp(dir / "out" / "report.txt");
  CHECK(report.find("\nmax_drift: 0\n") != std::string::npos);
  CHECK(report.find("[scenario]") != std::string::npos);
  CHECK(slurp(dir / "out" / "residuals.csv").rfind("seed,t,residual_cont,residual_jump\n", 0) == 0);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  SUBCASE("invalid scenario exits 2 naming the field") {
    const auto bad = write_file(dir / "bad.yaml", "model:\n  key: ou_jump\n  atomz: []\n");
    CHECK(run_cli("simulate --scenario " + bad.string(), dir / "log.txt") == 2);
    const auto log = slurp(dir / "log.txt");
    CHECK(log.find("line 3") != std::string::npos);
    CHECK(log.find("atomz") != std::string::npos);
  }
  SUBCASE("missing scenario file exits 2") {
    CHECK(run_cli("simulate --scenario " + (dir / "nope.yaml").string(), dir / "log.txt") == 2);
  }
  SUBCASE("bad flag exits 2") {
    CHECK(run_cli("simulate --threads 0 --scenario x.yaml", dir / "log.txt") == 2);
  }
  SUBCASE("impossible tolerance exits 1 naming the check") {
    const auto s = write_file(dir / "tight.yaml",
                              with_out(additive_body + "tolerances: {jacobian_gap: -1.0}\n", dir / "out"));
    CHECK(run_cli("simulate --scenario " + s.string(), dir / "log.txt") == 1);
    CHECK(slurp(dir / "log.txt").find("jacobian_gap") != std::string::npos);
  }
}

TEST_CASE("repeated runs are byte-identical") {
  const auto dir = scratch("repeat");
  const auto s = write_file(dir / "s.yaml", with_out(pure_jump_body, dir / "out"));
  REQUIRE(run_cli("simulate --scenario " + s.string() + " --out " + (dir / "a").string(), dir / "a.log") == 0);
  REQUIRE(run_cli("simulate --scenario " + s.string() + " --out " + (dir / "b").string() + " --serial",
                  dir / "b.log") == 0);
  for (const auto* name : {"trajectory_seed3.csv", "trajectory_seed4.csv", "report.txt"}) {
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  CHECK(!slurp(dir / "a" / "trajectory_seed3.csv").empty());
}

TEST_CASE("seed flag overrides the scenario") {
  const auto dir = scratch("seed");
  const auto s = write_file(dir / "s.yaml", with_out(pure_jump_body, dir / "out"));
  REQUIRE(run_cli("simulate --seed 40 --scenario " + s.string(), dir / "log.txt") == 0);
  CHECK(fs::exists(dir / "out" / "trajectory_seed40.csv"));
  CHECK(fs::exists(dir / "out" / "trajectory_seed41.csv"));
}

}  // TEST_SUITE
