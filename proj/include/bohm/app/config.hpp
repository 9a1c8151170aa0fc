#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bohm/chaos.hpp"
#include "bohm/tdse.hpp"
#include "bohm/trajectories.hpp"
#include "bohm/vortices.hpp"

namespace bohm::app {

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Plain-text run configuration:
///
///   preset = fig2           # optional, resolved recursively
///   [physics]
///   kappa = 0.1
///   [grid@hbar=0.05]        # applies only at sweep points with hbar = 0.05
///   half_width = 3
///
/// Keys are addressed as "section.key"; top-level keys have no section.
class Config {
 public:
  struct Entry {
    std::string section;
    /// "kappa=1" style filter, empty when unconditional.
    std::string qualifier;
    std::string key;
    std::string value;
  };

  static Config parse(std::string_view text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);
  /// Built-in preset by name; throws ConfigError for unknown names.
  static Config preset(const std::string& name);
  static std::vector<std::string> preset_names();

  /// Later entries override earlier ones with the same address.
  void set(const std::string& address, const std::string& value);
  void merge(const Config& over);

  /// Follows `preset = name` chains (cli_preset first, if given) and
  /// overlays this config on top.
  Config resolved(const std::optional<std::string>& cli_preset = std::nullopt) const;

  /// Unconditional value of "section.key", with qualified entries matching
  /// the given sweep values applied on top.
  std::optional<std::string> get(const std::string& address, double kappa = std::nan(""),
                                 double hbar = std::nan("")) const;
  const std::vector<Entry>& entries() const { return entries_; }

  /// Canonical text form; parse(dump()) reproduces the config.
  std::string dump() const;

 private:
  std::vector<Entry> entries_;
};

struct SweepPoint {
  double kappa = 0.0;
  double hbar = 1.0;
  /// Directory name, e.g. "kappa_1_hbar_0.05".
  std::string label;
};

struct TrajectoryJob {
  double t_begin = 0.0;
  double t_end = 10.0;
  IntegratorSettings integrator;
  std::vector<Vec2> seeds;
};

struct VortexJob {
  Region region{-2.0, 3.0, -2.0, 3.0};
  double t_begin = 0.0;
  double t_end = 1.0;
  double frame_interval = 1e-2;
  /// Zero selects the grid defaults (5 dx, 10 dx).
  double match_radius = 0.0;
  double pair_radius = 0.0;
};

struct ChaosJob {
  SeedRegion region;
  std::size_t count = 60;
  double epsilon = 1e-4;
  double direction_deg = 45.0;
  double t_end = 50.0;
  std::optional<double> fit_begin, fit_end;
  double keep_fraction = 0.8;
  int bootstrap = 1000;
  std::uint64_t bootstrap_seed = 20240601;
  IntegratorSettings integrator;
};

/// Typed configuration of one sweep point.
struct RunConfig {
  std::string preset;
  SweepPoint point;
  PhysParams params;
  GridSpec grid;
  SolverSettings solver;
  double t_end = 0.0;
  /// Spacing of persisted snapshots.
  double dt_snap = 1.0;
  /// Spacing of the norm/energy history; divides dt_snap.
  double history_every = 1.0;
  /// Spacing of the frames that drive trajectories and vortex tracking.
  double trajectory_dt_snap = 1e-2;
  /// Snapshot file to read instead of solving inline (empty: inline).
  std::string snapshots;
  TrajectoryJob trajectories;
  VortexJob vortices;
  ChaosJob chaos;
  std::string plot_kind;
  std::vector<std::string> plot_inputs;
  std::vector<std::string> plot_labels;
  double plot_time = 0.0;
};

/// Cartesian product of sweep.kappa x sweep.hbar (falling back to the
/// physics values), kappa outer.
std::vector<SweepPoint> sweep_points(const Config& resolved);

/// Validates and converts; throws ConfigError on unknown keys, malformed
/// values or values out of range.
RunConfig make_run_config(const Config& resolved, const SweepPoint& point);

/// Number formatting used in labels and manifests.
std::string format_value(double v);

}  // namespace bohm::app
