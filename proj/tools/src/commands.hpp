#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "config.hpp"

namespace gclab {

enum ExitCode : int { kPass = 0, kVerdictFailed = 1, kInvalid = 2, kNumerical = 3 };

struct RunOptions {
  std::string subcommand;
  std::string config_path;          ///< empty = all defaults
  std::filesystem::path out;        ///< run directory; empty = $GCLAB_OUT/<subcommand> or gclab_out/<subcommand>
  std::optional<double> epsilon;
  std::optional<double> epsilon0;
  std::optional<std::string> preset;
  std::optional<int> resolution;
  std::filesystem::path manifest;   ///< report / render / rerun input
  std::string what = "all";         ///< render target
};

/// Runs one subcommand; prints a summary to `log` and returns the process exit status.
int run_command(const RunOptions& options, std::ostream& log);

/// Resolved config document: file contents (or {}) with the command-line overrides applied.
Json resolve_document(const RunOptions& options);

}  // namespace gclab
