#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "isd/config.hpp"

namespace isd {

enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_runtime = 3 };

struct CommandOptions {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
};

const std::vector<std::string>& command_names();

/// Validates the whole configuration and the output directory, then runs the
/// command. Messages go to `err`; the return value is an ExitCode.
int run_command(const std::string& name, Config& config, const CommandOptions& options, std::ostream& err);

}  // namespace isd
