#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdbem/adapt.hpp"

namespace tdbem {

struct ExperimentPreset {
  std::string name;
  GeometryPreset geometry = GeometryPreset::straight_crack;
  int initial_elements = 1;
  Datum datum;
  double final_time = 1.0;
  double initial_dt = 1.0;
  double reference_energy = 1.0;
  IndicatorConfig indicator;
  AdaptMode mode = AdaptMode::space_adaptive;
  CompanionRule companion_rule = CompanionRule::keep_cfl;
  UniformAxis uniform_axis = UniformAxis::space;
};

// straight_crack, angular_crack, triangle, circle.
ExperimentPreset load_experiment(std::string_view name);
const std::vector<std::string>& experiment_names();

// Number of intervals of the initial uniform time mesh (T / dt rounded).
int initial_intervals(const ExperimentPreset& preset);

// Everything a run needs, after preset defaults and overrides.
struct RunOptions {
  std::string experiment = "straight_crack";
  AdaptConfig adapt;
  QuadratureConfig quadrature;
  IndicatorConfig indicator;
  std::optional<int> elements;
  std::optional<double> dt;
  std::string out = "out";
  std::string baseline;
  bool dumps = true;
  int threads = 0;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Setting names in canonical snake_case spelling.
const std::vector<std::string>& setting_names();
// Options with the preset's adapt and indicator defaults.
RunOptions default_options(std::string_view experiment);
// Applies one setting given as text; hyphens and underscores are interchangeable.
void apply_setting(RunOptions& opt, std::string_view key, std::string_view value);
// Flat key-value JSON document. An "experiment" key resets opt to that
// preset's defaults before the other keys apply; ignored unless use_experiment.
void apply_config_json(RunOptions& opt, std::istream& in, bool use_experiment = true);
void write_config_json(std::ostream& out, const RunOptions& opt);

Problem make_problem(const RunOptions& opt);

// Uniform-run records (M_Gamma, N_T, sq_energy_error) read back from levels.csv.
std::vector<LevelRecord> read_levels_csv(std::istream& in);
void write_levels_header(std::ostream& out);
void write_level_row(std::ostream& out, const LevelRecord& r);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitMeshFloor = 4;

// Runs the configured loop, writing levels.csv and per-level dumps into
// opt.out. Returns an exit code; messages go to err.
int run(const RunOptions& opt, std::ostream& log, std::ostream& err);

}  // namespace tdbem
