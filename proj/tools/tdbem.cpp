// Runs an experiment preset through the configured refinement loop.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tdbem/experiment.hpp"

int main(int argc, char** argv) {
  using namespace tdbem;
  CLI::App app{"Adaptive time-domain BEM for the 2D wave equation with Neumann data"};
  std::string config_path;
  app.add_option("--config", config_path, "Flat JSON configuration file");
  std::map<std::string, std::optional<std::string>> flags;
  for (const std::string& name : setting_names()) {
    std::string flag = "--" + name;
    for (char& c : flag)
      if (c == '_') c = '-';
    flags[name];
    app.add_option(flag, flags[name], "Overrides '" + name + "'");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    // The experiment flag beats the file's; either picks the defaults.
    const std::optional<std::string>& experiment = flags["experiment"];
    RunOptions opt = default_options(experiment ? *experiment : "straight_crack");
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot read configuration '" + config_path + "'");
      apply_config_json(opt, in, !experiment);
    }
    for (const auto& [name, value] : flags)
      if (value && name != "experiment") apply_setting(opt, name, *value);
    return run(opt, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
