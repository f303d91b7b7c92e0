#pragma once

// Batch front end: JSON run configs in, results.json / CSV / bundle files out.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace kimura {

enum class ExitCode : int { kOk = 0, kValidation = 2, kNumeric = 3 };

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::filesystem::path out_dir = ".";
};

/// Runs config["command"]. The config must carry a seed unless options.seed is
/// set. Writes results.json (and command-specific artifacts) into out_dir and
/// returns the process exit status; diagnostics go to stderr as JSON lines.
int run_config(const nlohmann::json& config, const CliOptions& options);

/// Parses argv (CLI11) and dispatches to run_config.
int cli_main(int argc, char** argv);

}  // namespace kimura
