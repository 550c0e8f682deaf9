#include "tdbem/experiment.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "tdbem/format.hpp"
#include "tdbem/kernel.hpp"
#include "tdbem/parallel.hpp"

namespace tdbem {

namespace {

std::string canonical_key(std::string_view key) {
  std::string k(key);
  while (!k.empty() && k.front() == '-') k.erase(k.begin());
  for (char& c : k)
    if (c == '-') c = '_';
  return k;
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError("setting '" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  int v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size())
    throw ConfigError("setting '" + std::string(key) + "' expects an integer, got '" + std::string(text) + "'");
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("setting '" + std::string(key) + "' expects true or false, got '" + std::string(text) + "'");
}

template <class F>
auto parse_enum(std::string_view key, std::string_view text, F&& parse) {
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("setting '" + std::string(key) + "': " + e.what());
  }
}

std::string write_real(double v) { return std::isnan(v) ? "nan" : format_real(v); }

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"straight_crack", "angular_crack", "triangle", "circle"};
  return names;
}

ExperimentPreset load_experiment(std::string_view name) {
  ExperimentPreset p;
  p.name = std::string(name);
  if (name == "straight_crack") {
    p.geometry = GeometryPreset::straight_crack;
    p.initial_elements = 10;
    p.datum = {SpaceProfile::constant, TimeProfile::heaviside, 1.0};
    p.final_time = 2.0;
    p.initial_dt = 0.1;
    p.reference_energy = 0.79280;
    p.indicator.policy = CoefficientPolicy::pythagorean;
  } else if (name == "angular_crack") {
    p.geometry = GeometryPreset::angular_crack;
    p.initial_elements = 8;
    p.datum = {SpaceProfile::normal_x, TimeProfile::heaviside, 1.0};
    p.final_time = 0.5;
    p.initial_dt = 0.05;
    p.reference_energy = 0.034012;
    p.indicator.policy = CoefficientPolicy::pythagorean;
  } else if (name == "triangle") {
    p.geometry = GeometryPreset::equilateral_triangle;
    p.initial_elements = 12;
    p.datum = {SpaceProfile::side_jump, TimeProfile::sine_ramp, 1.0};
    p.final_time = 0.5;
    p.initial_dt = 0.05;
    p.reference_energy = 0.063334;
    p.indicator.policy = CoefficientPolicy::max;
  } else if (name == "circle") {
    p.geometry = GeometryPreset::circle;
    p.initial_elements = 32;
    p.datum = {SpaceProfile::constant, TimeProfile::power_exp, 1.0};
    p.final_time = std::numbers::pi / 4.0;
    p.initial_dt = std::numbers::pi / 32.0;
    p.reference_energy = 1.777;
    p.indicator.policy = CoefficientPolicy::max;
    p.mode = AdaptMode::time_adaptive;
    p.companion_rule = CompanionRule::fixed_other_mesh;
    p.uniform_axis = UniformAxis::time;
  } else {
    throw ConfigError("unknown experiment '" + std::string(name) + "'");
  }
  return p;
}

int initial_intervals(const ExperimentPreset& preset) {
  return std::max(1, static_cast<int>(std::lround(preset.final_time / preset.initial_dt)));
}

const std::vector<std::string>& setting_names() {
  static const std::vector<std::string> names{
      "experiment",  "mode",          "theta",          "epsilon",       "max_levels",         "companion_rule",
      "uniform_axis", "indicator",    "sobolev_s",      "outer_order",   "inner_order",        "time_order",
      "cone_shrink", "grading_levels", "elements",      "dt",            "min_element_length", "min_time_step",
      "out",         "baseline",      "dumps",          "threads"};
  return names;
}

RunOptions default_options(std::string_view experiment) {
  const ExperimentPreset p = load_experiment(experiment);
  RunOptions opt;
  opt.experiment = p.name;
  opt.adapt.mode = p.mode;
  opt.adapt.companion_rule = p.companion_rule;
  opt.adapt.uniform_axis = p.uniform_axis;
  opt.indicator = p.indicator;
  return opt;
}

void apply_setting(RunOptions& opt, std::string_view key_in, std::string_view value) {
  const std::string key = canonical_key(key_in);
  if (key == "experiment") {
    load_experiment(value);
    opt.experiment = std::string(value);
  } else if (key == "mode") {
    opt.adapt.mode = parse_enum(key, value, parse_adapt_mode);
  } else if (key == "theta") {
    opt.adapt.theta = parse_double(key, value);
  } else if (key == "epsilon") {
    opt.adapt.epsilon = parse_double(key, value);
  } else if (key == "max_levels") {
    opt.adapt.max_levels = parse_int(key, value);
  } else if (key == "companion_rule") {
    opt.adapt.companion_rule = parse_enum(key, value, parse_companion_rule);
  } else if (key == "uniform_axis") {
    opt.adapt.uniform_axis = parse_enum(key, value, parse_uniform_axis);
  } else if (key == "indicator") {
    opt.indicator.policy = parse_enum(key, value, parse_coefficient_policy);
  } else if (key == "sobolev_s") {
    opt.indicator.sobolev_s = parse_double(key, value);
  } else if (key == "outer_order") {
    opt.quadrature.outer_order = parse_int(key, value);
  } else if (key == "inner_order") {
    opt.quadrature.inner_order = parse_int(key, value);
  } else if (key == "time_order") {
    opt.quadrature.time_order = parse_int(key, value);
  } else if (key == "cone_shrink") {
    opt.quadrature.cone_shrink = parse_double(key, value);
  } else if (key == "grading_levels") {
    opt.quadrature.grading_levels = parse_int(key, value);
  } else if (key == "elements") {
    opt.elements = parse_int(key, value);
  } else if (key == "dt") {
    opt.dt = parse_double(key, value);
  } else if (key == "min_element_length") {
    opt.adapt.floor.min_element_length = parse_double(key, value);
  } else if (key == "min_time_step") {
    opt.adapt.floor.min_time_step = parse_double(key, value);
  } else if (key == "out") {
    opt.out = std::string(value);
  } else if (key == "baseline") {
    opt.baseline = std::string(value);
  } else if (key == "dumps") {
    opt.dumps = parse_bool(key, value);
  } else if (key == "threads") {
    opt.threads = parse_int(key, value);
    if (opt.threads < 0) throw ConfigError("threads must be non-negative");
  } else {
    throw ConfigError("unknown setting '" + std::string(key_in) + "'");
  }
}

void apply_config_json(RunOptions& opt, std::istream& in, bool use_experiment) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("configuration must be a flat key-value object");
  auto text = [](const std::string& key, const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_real(v.get<double>());
    throw ConfigError("setting '" + key + "' must be a string, number or boolean");
  };
  for (const auto& [key, v] : doc.items())
    if (use_experiment && canonical_key(key) == "experiment") opt = default_options(text(key, v));
  for (const auto& [key, v] : doc.items())
    if (canonical_key(key) != "experiment") apply_setting(opt, key, text(key, v));
}

void write_config_json(std::ostream& out, const RunOptions& opt) {
  nlohmann::ordered_json doc;
  doc["experiment"] = opt.experiment;
  doc["mode"] = to_string(opt.adapt.mode);
  doc["theta"] = opt.adapt.theta;
  doc["epsilon"] = opt.adapt.epsilon;
  doc["max_levels"] = opt.adapt.max_levels;
  doc["companion_rule"] = to_string(opt.adapt.companion_rule);
  doc["uniform_axis"] = to_string(opt.adapt.uniform_axis);
  doc["indicator"] = to_string(opt.indicator.policy);
  doc["sobolev_s"] = opt.indicator.sobolev_s;
  doc["outer_order"] = opt.quadrature.outer_order;
  doc["inner_order"] = opt.quadrature.inner_order;
  doc["time_order"] = opt.quadrature.time_order;
  doc["cone_shrink"] = opt.quadrature.cone_shrink;
  doc["grading_levels"] = opt.quadrature.grading_levels;
  if (opt.elements) doc["elements"] = *opt.elements;
  if (opt.dt) doc["dt"] = *opt.dt;
  doc["min_element_length"] = opt.adapt.floor.min_element_length;
  doc["min_time_step"] = opt.adapt.floor.min_time_step;
  doc["out"] = opt.out;
  if (!opt.baseline.empty()) doc["baseline"] = opt.baseline;
  doc["dumps"] = opt.dumps;
  doc["threads"] = opt.threads;
  out << doc.dump(2) << '\n';
}

Problem make_problem(const RunOptions& opt) {
  ExperimentPreset p = load_experiment(opt.experiment);
  if (opt.elements) p.initial_elements = *opt.elements;
  if (opt.dt) {
    if (!(*opt.dt > 0.0)) throw ConfigError("dt must be positive");
    p.initial_dt = *opt.dt;
  }
  Problem problem{build_geometry(p.geometry, p.initial_elements), TimeMesh::uniform(p.final_time, initial_intervals(p)),
                  p.datum, p.reference_energy, opt.quadrature, opt.indicator};
  return problem;
}

std::vector<LevelRecord> read_levels_csv(std::istream& in) {
  std::vector<LevelRecord> out;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("baseline file is empty");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 10) throw ConfigError("baseline row has " + std::to_string(cols.size()) + " columns");
    LevelRecord r;
    r.level = parse_int("level", cols[0]);
    r.m_gamma = parse_int("M_Gamma", cols[1]);
    r.n_t = parse_int("N_T", cols[2]);
    r.dofs = static_cast<long long>(r.m_gamma) * r.n_t;
    r.energy = parse_double("energy", cols[4]);
    r.sq_energy_error = parse_double("sq_energy_error", cols[5]);
    r.indicator_total = parse_double("indicator_total", cols[6]);
    out.push_back(r);
  }
  return out;
}

void write_levels_header(std::ostream& out) {
  out << "level,M_Gamma,N_T,dofs,energy,sq_energy_error,indicator_total,marked,memory_S,walltime_s\n";
}

void write_level_row(std::ostream& out, const LevelRecord& r) {
  out << r.level << ',' << r.m_gamma << ',' << r.n_t << ',' << r.dofs << ',' << write_real(r.energy) << ','
      << write_real(r.sq_energy_error) << ',' << write_real(r.indicator_total) << ',' << r.marked << ','
      << write_real(r.memory_s) << ',' << write_real(r.walltime_s) << '\n';
}

int run(const RunOptions& opt, std::ostream& log, std::ostream& err) {
  namespace fs = std::filesystem;
  Problem problem = [&] {
    try {
      validate(opt.adapt);
      validate(opt.quadrature);
      validate(opt.indicator);
      return make_problem(opt);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }();
  std::vector<LevelRecord> baseline;
  if (!opt.baseline.empty()) {
    std::ifstream in(opt.baseline);
    if (!in) throw ConfigError("cannot read baseline '" + opt.baseline + "'");
    baseline = read_levels_csv(in);
  }
  std::error_code ec;
  fs::create_directories(opt.out, ec);
  const fs::path dir(opt.out);
  std::ofstream csv(dir / "levels.csv");
  if (!csv) throw ConfigError("cannot write into output directory '" + opt.out + "'");
  {
    std::ofstream cfg(dir / "config.json");
    write_config_json(cfg, opt);
  }
  write_levels_header(csv);
  csv.flush();
  set_num_threads(opt.threads);

  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw ConfigError("cannot write '" + (dir / name).string() + "'");
    return f;
  };
  StopReason stop = StopReason::none;
  auto observer = [&](const LevelRecord& rec, const BlockSystem& sys, const Solution&, const IndicatorField& field) {
    LevelRecord r = rec;
    if (opt.adapt.mode == AdaptMode::uniform) {
      r.memory_s = 0.0;
    } else if (!baseline.empty() && r.sq_energy_error > 0.0) {
      r.memory_s = 1.0 - r.memory / matched_uniform_memory(baseline, r.sq_energy_error);
    }
    write_level_row(csv, r);
    csv.flush();
    if (opt.dumps) {
      const std::string k = std::to_string(r.level);
      auto f = open("indicators-L" + k + ".txt");
      write_indicators(f, field);
      auto s = open("mesh-space-L" + k + ".txt");
      write_space_snapshot(s, sys.space());
      auto t = open("mesh-time-L" + k + ".txt");
      write_time_snapshot(t, sys.time());
    }
    log << "level " << r.level << ": M_Gamma " << r.m_gamma << ", N_T " << r.n_t << ", energy "
        << format_real(r.energy) << ", sq error " << format_real(r.sq_energy_error) << ", indicator "
        << format_real(r.indicator_total) << ", marked " << r.marked << '\n';
    log.flush();
    stop = r.stop;
  };
  try {
    run_loop(opt.adapt, problem, observer);
  } catch (const ConfigError&) {
    throw;
  } catch (const SingularBlockError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ContractViolation& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  log << "stopped: " << to_string(stop) << '\n';
  if (stop == StopReason::mesh_floor) {
    err << "mesh floor reached; refinement aborted\n";
    return kExitMeshFloor;
  }
  return kExitOk;
}

}  // namespace tdbem
