#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "tdbem/experiment.hpp"

using namespace tdbem;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tdbem-cli-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TDBEM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& file) {
  std::ifstream in(file);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    rows.push_back(cols);
  }
  return rows;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("experiment presets") {
  const ExperimentPreset crack = load_experiment("straight_crack");
  CHECK(crack.final_time == 2.0);
  CHECK(crack.initial_dt == 0.1);
  CHECK(build_geometry(crack.geometry, crack.initial_elements).element_length(0) == doctest::Approx(0.1));
  CHECK(crack.reference_energy == 0.79280);
  const ExperimentPreset circle = load_experiment("circle");
  CHECK(initial_intervals(circle) == 8);
  CHECK(circle.final_time == doctest::Approx(std::numbers::pi / 4.0));
  CHECK(circle.reference_energy == 1.777);
  CHECK(circle.mode == AdaptMode::time_adaptive);
  const ExperimentPreset tri = load_experiment("triangle");
  CHECK(tri.initial_dt == 0.05);
  CHECK(build_geometry(tri.geometry, tri.initial_elements).element_length(0) == doctest::Approx(0.05));
  CHECK(tri.reference_energy == 0.063334);
  const ExperimentPreset ang = load_experiment("angular_crack");
  CHECK(ang.final_time == 0.5);
  CHECK(ang.reference_energy == 0.034012);
  CHECK_THROWS_AS(load_experiment("square"), ConfigError);
  CHECK(experiment_names().size() == 4);
}

TEST_CASE("settings and configuration documents") {
  RunOptions opt = default_options("triangle");
  apply_setting(opt, "max-levels", "7");
  apply_setting(opt, "sobolev_s", "0.25");
  apply_setting(opt, "indicator", "h_only");
  CHECK(opt.adapt.max_levels == 7);
  CHECK(opt.indicator.sobolev_s == 0.25);
  CHECK(opt.indicator.policy == CoefficientPolicy::h_only);
  CHECK_THROWS_AS(apply_setting(opt, "theta", "large"), ConfigError);
  CHECK_THROWS_AS(apply_setting(opt, "colour", "blue"), ConfigError);

  std::stringstream doc;
  write_config_json(doc, opt);
  RunOptions back = default_options("straight_crack");
  apply_config_json(back, doc);
  CHECK(back.experiment == "triangle");
  CHECK(back.adapt.max_levels == 7);
  CHECK(back.indicator.sobolev_s == 0.25);
  CHECK(back.indicator.policy == CoefficientPolicy::h_only);

  std::istringstream nested(R"({"quadrature": {"inner_order": 4}})");
  CHECK_THROWS_AS(apply_config_json(back, nested), ConfigError);
  std::istringstream broken("{ theta: ");
  CHECK_THROWS_AS(apply_config_json(back, broken), ConfigError);
}

TEST_CASE("single level run") {
  const fs::path dir = scratch_dir("single");
  REQUIRE(run_cli("--experiment angular_crack --max-levels 1 --out " + dir.string()) == 0);
  const auto rows = read_csv(dir / "levels.csv");
  REQUIRE(rows.size() == 2);
  std::ifstream in(dir / "levels.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "level,M_Gamma,N_T,dofs,energy,sq_energy_error,indicator_total,marked,memory_S,walltime_s");
  CHECK(rows[1][0] == "0");
  CHECK(rows[1][1] == "7");
  CHECK(rows[1][2] == "10");
  CHECK(rows[1][3] == "70");
  // Scientific notation with at least 12 significant digits.
  const std::string& energy = rows[1][4];
  CHECK(energy.find('e') != std::string::npos);
  CHECK(energy.find('.') != std::string::npos);
  CHECK(energy.substr(0, energy.find('e')).size() >= 13);
  for (const char* f : {"indicators-L0.txt", "mesh-space-L0.txt", "mesh-time-L0.txt", "config.json"})
    CHECK(fs::exists(dir / f));
  CHECK_FALSE(fs::exists(dir / "indicators-L1.txt"));
}

TEST_CASE("runs are reproducible apart from wall time") {
  const fs::path a = scratch_dir("repeat-a");
  const fs::path b = scratch_dir("repeat-b");
  const std::string args = "--experiment triangle --max-levels 3 --threads 2 --out ";
  REQUIRE(run_cli(args + a.string()) == 0);
  REQUIRE(run_cli(args + b.string()) == 0);
  auto ra = read_csv(a / "levels.csv");
  auto rb = read_csv(b / "levels.csv");
  REQUIRE(ra.size() == 4);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t k = 0; k < ra.size(); ++k) {
    REQUIRE(ra[k].size() == 10);
    ra[k].pop_back();
    rb[k].pop_back();
    CHECK(ra[k] == rb[k]);
  }
  for (int level = 0; level < 3; ++level) {
    const std::string k = std::to_string(level);
    CHECK(slurp(a / ("indicators-L" + k + ".txt")) == slurp(b / ("indicators-L" + k + ".txt")));
    CHECK(slurp(a / ("mesh-space-L" + k + ".txt")) == slurp(b / ("mesh-space-L" + k + ".txt")));
  }
}

TEST_CASE("configuration file and flag precedence") {
  const fs::path dir = scratch_dir("config");
  {
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"experiment": "circle", "max_levels": 5, "dumps": false})";
  }
  REQUIRE(run_cli("--config " + (dir / "run.json").string() + " --max-levels 2 --out " + (dir / "out").string()) == 0);
  const auto rows = read_csv(dir / "out" / "levels.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == "32");
  CHECK(rows[1][2] == "8");
  CHECK_FALSE(fs::exists(dir / "out" / "indicators-L0.txt"));
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch_dir("codes");
  CHECK(run_cli("--experiment square --out " + dir.string()) == 2);
  CHECK(run_cli("--theta 1.5 --out " + dir.string()) == 2);
  CHECK(run_cli("--no-such-flag 1") == 2);
  CHECK(run_cli("--config " + (dir / "missing.json").string()) == 2);
  CHECK(run_cli("--baseline " + (dir / "missing.csv").string() + " --out " + dir.string()) == 2);
  CHECK(run_cli("--max-levels 10 --min-element-length 0.04 --dumps false --out " + dir.string()) == 4);
  CHECK(read_csv(dir / "levels.csv").size() == 3);
}

TEST_CASE("baseline fills the memory column") {
  const fs::path dir = scratch_dir("baseline");
  const std::string common = " --experiment angular_crack --max-levels 3 --dumps false --out ";
  REQUIRE(run_cli("--mode uniform" + common + (dir / "u").string()) == 0);
  REQUIRE(run_cli("--baseline " + (dir / "u" / "levels.csv").string() + common + (dir / "a").string()) == 0);
  const auto uniform = read_csv(dir / "u" / "levels.csv");
  for (std::size_t k = 1; k < uniform.size(); ++k) CHECK(std::stod(uniform[k][8]) == 0.0);
  const auto rows = read_csv(dir / "a" / "levels.csv");
  REQUIRE(rows.size() == 4);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double s = std::stod(rows[k][8]);
    CHECK(std::isfinite(s));
    CHECK(s < 1.0);
  }
}

TEST_CASE("uniform runs converge on every preset") {
  for (const std::string& name : experiment_names()) {
    const fs::path dir = scratch_dir("uniform-" + name);
    const std::string args = "--experiment " + name + " --mode uniform --max-levels 3 --dumps false --out ";
    REQUIRE(run_cli(args + dir.string()) == 0);
    const auto rows = read_csv(dir / "levels.csv");
    REQUIRE(rows.size() == 4);
    for (std::size_t k = 2; k < rows.size(); ++k) {
      INFO(name, " level ", k - 1);
      CHECK(std::stod(rows[k][5]) <= std::stod(rows[k - 1][5]));
    }
  }
}
