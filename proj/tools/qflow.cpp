#include <iostream>

#include <CLI11.hpp>

#include "qflow/cli.hpp"
#include "qflow/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal Q-curvature flow simulator"};
  app.require_subcommand(1);
  std::string config;
  bool strict = false;

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "scenario configuration file")->required();
    sub->add_flag("--strict", strict, "reject unknown configuration keys");
    return sub;
  };
  CLI::App* run = add("run", "run the scenario named in the config");
  CLI::App* validate = add("validate", "run the invariant suite on the configured manifold");
  CLI::App* sweep = add("sweep", "bubble asymptotics and initial-data certificates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : qflow::exit_code::config;
  }

  qflow::RunConfig cfg;
  try {
    std::vector<std::string> warnings;
    cfg = qflow::parse_config(config, strict, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  } catch (const qflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return qflow::exit_code::config;
  }

  if (validate->parsed()) cfg.scenario = qflow::Scenario::Validate;
  if (sweep->parsed()) cfg.scenario = qflow::Scenario::BubbleSweep;
  (void)run;
  try {
    return qflow::execute(cfg, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qflow::exit_code::failure;
  }
}
