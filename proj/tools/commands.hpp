#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "kramers/config.hpp"

namespace kramers::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalError = 3, kFlagged = 4 };

struct Invocation {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir = ".";
  bool strict = false;
};

/// Loads the config, applies flag overrides, runs the subcommand and maps
/// errors to exit codes.
int run(const Invocation& inv);

}  // namespace kramers::cli
