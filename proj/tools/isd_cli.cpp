#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "isd/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sequential detection of intermittent anomalies"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
  unsigned threads = 1;

  const std::map<std::string, std::string> about{
      {"simulate", "simulate a two-state trajectory"},
      {"detect", "filter one trajectory and run the stopping rules"},
      {"montecarlo", "threshold and noise sweep of repeated trials"},
      {"soc", "delay versus false-alarm curves per rule variant"},
      {"occstudy", "occupation estimate against realised delay per noise level"},
      {"dp", "value iteration for the optimal threshold"},
      {"aircraft", "emergence detection on an image sequence"},
  };
  for (const auto& name : isd::command_names()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("-c,--config", config_path, "INI configuration file");
    sub->add_option("-s,--set", overrides, "override section.key=value")->take_all();
    sub->add_option("-o,--out", out_dir, "output directory");
    sub->add_option("-j,--threads", threads, "worker thread cap")->check(CLI::Range(1u, 1024u));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : isd::exit_validation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  isd::Config config;
  try {
    config = config_path.empty() ? isd::Config::parse("") : isd::Config::load(config_path);
    for (const auto& o : overrides) config.set(o);
  } catch (const std::exception& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return isd::exit_validation;
  }
  return isd::run_command(command, config, {out_dir, threads}, std::cerr);
}
