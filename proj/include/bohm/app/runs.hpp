#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bohm/app/config.hpp"

namespace bohm::app {

enum class Command { evolve, traj, vortex, chaos, plot };

/// Subcommand name as typed on the command line.
const char* command_name(Command c);

struct RunOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> preset;
  std::filesystem::path out = ".";
  int jobs = 1;
  /// "section.key=value" overrides applied after the config file.
  std::vector<std::string> overrides;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

/// Exit code for the exception currently being handled.
int exit_code_for_current_exception(std::string& message);

/// Config file + preset + overrides, resolved.
Config load_config(const RunOptions& options);

/// Runs one sweep point into `dir`. Writes config.effective and
/// manifest.txt next to the outputs; errors propagate after the manifest is
/// written with status=failed.
void run_point(Command command, const Config& resolved, const SweepPoint& point, const std::filesystem::path& dir,
               std::ostream& log);

/// Whole command: sweep points run on `jobs` workers, each in its own
/// subdirectory when there is more than one. Returns the exit code of the
/// first failing point in sweep order.
int run(Command command, const RunOptions& options, std::ostream& log);

}  // namespace bohm::app
