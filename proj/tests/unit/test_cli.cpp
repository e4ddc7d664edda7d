#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "scenario.hpp"

using namespace granvar;
using namespace granvar::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::path(GRANVAR_WORK_DIR) / "cli";

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + GRANVAR_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_file(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const auto path = kWork / name;
  std::ofstream(path) << text;
  return path;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int config_error_line(const std::string& text) {
  try {
    parse_scenario(text, "case.json");
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("config errors report the offending line") {
  CHECK(config_error_line("{\n  \"seed\": 1,\n  \"classes\": [\n    {\"mass\": -1, \"concentration\": 1}\n  ]\n}") == 4);
  CHECK(config_error_line("{\n  \"seed\": 1,\n  \"bogus\": 3\n}") == 3);
  CHECK(config_error_line("{\n  \"seed\": 1,\n  \"classes\": [\n") >= 3);
  CHECK(config_error_line("{\n  \"seed\": \"x\"\n}") == 2);
  try {
    parse_scenario("{\n\n  \"replicates\": -4\n}", "case.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("case.json:3:", 0) == 0);
  }
}

TEST_CASE("scenario parsing fills the config") {
  const auto cfg = parse_scenario(R"({
    "seed": 5,
    "classes": [{"mass": 1, "concentration": 1}, {"mass": 2, "concentration": 0}],
    "dependence": [[0.02, 0], [0, 0]],
    "sample": {"counts": [5, 5]}
  })", "inline");
  REQUIRE(cfg.seed.has_value());
  CHECK(*cfg.seed == 5);
  REQUIRE(cfg.classes.has_value());
  CHECK(cfg.classes->size() == 2);
  REQUIRE(cfg.sample.has_value());
  CHECK(cfg.sample->mass() == 15.0);
  REQUIRE(cfg.dependence.has_value());
  CHECK((*cfg.dependence)(0, 0) == 0.02);
  CHECK(cfg.hash != 0);
}

TEST_CASE("inconsistent sample mass is a config error") {
  CHECK(config_error_line(R"({"seed": 1,
"classes": [{"mass": 1, "concentration": 1}],
"sample": {"counts": [5], "mass": 6}})") >= 1);
}

TEST_CASE("exit codes") {
  const auto scenarios = fs::path(GRANVAR_SCENARIO_DIR);
  const auto out = kWork / "out";
  CHECK(run("estimate --config \"" + (scenarios / "table1.json").string() + "\" --out \"" + out.string() + "\"") == 0);
  CHECK(run("estimate --config \"" + (kWork / "missing.json").string() + "\"") == 2);
  const auto bad = write_file("bad.json", "{\n  \"seed\": 1,\n  \"classes\": 4\n}\n");
  CHECK(run("estimate --config \"" + bad.string() + "\" --out \"" + out.string() + "\"") == 2);
  const auto no_seed = write_file("no_seed.json", "{\"classes\": [{\"mass\": 1, \"concentration\": 1}]}");
  CHECK(run("simulate --config \"" + no_seed.string() + "\" --out \"" + out.string() + "\"") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("estimate") == 2);
  const auto degenerate = write_file("degenerate.json", R"({"seed": 1,
"classes": [{"mass": 1, "concentration": 1}, {"mass": 1, "concentration": 0}],
"dependence": [[1.0, 0], [0, 0]],
"sample": {"counts": [5, 5]}})");
  CHECK(run("estimate --config \"" + degenerate.string() + "\" --out \"" + out.string() + "\"") == 2);
  const auto saturated = write_file("saturated.json", R"({"seed": 1, "replicates": 10,
"classes": [{"mass": 1, "concentration": 1, "radius": 0.05}, {"mass": 1, "concentration": 0, "radius": 0.05}],
"design": {"kind": "window", "width": 0.25, "height": 0.25},
"field": {"process": "hardcore", "intensity": 1000, "min_gap": 0, "mixing": [0.5, 0.5]}})");
  CHECK(run("simulate --config \"" + saturated.string() + "\" --out \"" + out.string() + "\"") == 3);
}

TEST_CASE("table1 output") {
  const auto out = kWork / "table1";
  fs::remove_all(out);
  REQUIRE(run("table1 --seed 3 --out \"" + out.string() + "\"") == 0);
  std::ifstream in(out / "table1.csv");
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.rfind("# granvar ", 0) == 0);
  CHECK(line.find("seed=3") != std::string::npos);
  CHECK(line.find("config_hash=") != std::string::npos);
  REQUIRE(std::getline(in, line));
  CHECK(line == "n_k,ratio,c_kk");
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 24);
}

TEST_CASE("estimate on the C_kk grid scenario writes 24 rows with a header comment") {
  const auto out = kWork / "grid";
  fs::remove_all(out);
  REQUIRE(run("estimate --config \"" + (fs::path(GRANVAR_SCENARIO_DIR) / "table1.json").string() +
              "\" --out \"" + out.string() + "\"") == 0);
  const auto text = read_file(out / "c_kk.csv");
  CHECK(text.rfind("# granvar ", 0) == 0);
  int lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == 26);
}

TEST_CASE("output directory falls back to GRANVAR_OUT") {
  const auto out = kWork / "env";
  fs::remove_all(out);
  const std::string cmd = "GRANVAR_OUT=\"" + out.string() + "\" \"" + GRANVAR_CLI_PATH +
                          "\" table1 --seed 1 >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(out / "table1.csv"));
}

TEST_CASE("quick verification finishes within ten seconds") {
  const auto start = std::chrono::steady_clock::now();
  CHECK(run("verify --quick --seed 11 --threads 4") == 0);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 10.0);
}
