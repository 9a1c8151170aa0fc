#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "bohm/interpolant.hpp"

namespace bohm {

/// The field is real up to a global phase (nodal lines, not points).
class DegenerateFieldError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Two frame-to-frame assignments tie in distance. The tracker resolves
/// these by the smallest-id rule and only throws in strict mode.
class AmbiguousMatchError : public Error {
 public:
  using Error::Error;
};

struct Region {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;

  bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
};

struct NodalPoint {
  double t = 0.0;
  double x = 0.0, y = 0.0;
  int winding = 0;
  /// |Psi| at the refined location.
  double residual = 0.0;
  /// |winding| != 1.
  bool degenerate = false;
};

struct NodeSearchSettings {
  /// Cells whose corners all lie below this fraction of the peak are skipped
  /// (far tails carry only roundoff).
  double amplitude_floor = 1e-6;
  /// Fraction of flagged cells above which the field counts as degenerate.
  double degenerate_fraction = 0.02;
  /// Small regions: a few flagged cells around isolated nodes are fine.
  std::size_t min_degenerate_cells = 8;
  int winding_samples = 32;
  int max_newton = 50;
};

/// Nodes of Psi (Re Psi = Im Psi = 0) inside the region, sorted by (x, y).
std::vector<NodalPoint> find_nodes(const WaveField& field, const Region& region,
                                   const NodeSearchSettings& settings = {});
/// Same, on a prebuilt frame (time derivative not needed).
std::vector<NodalPoint> find_nodes(const SnapshotFrame& frame, const Region& region,
                                   const NodeSearchSettings& settings = {});

struct VortexFrame {
  double t = 0.0;
  std::vector<NodalPoint> nodes;
};

enum class EventKind { initial, creation, appearance, final, annihilation, disappearance };
const char* event_name(EventKind kind);

struct TrackEnd {
  EventKind kind = EventKind::initial;
  double t = 0.0;
  /// Partner track for creation/annihilation, -1 otherwise.
  int partner = -1;
};

struct VortexTrack {
  int id = 0;
  int winding = 0;
  std::vector<NodalPoint> points;
  TrackEnd birth;
  TrackEnd death;
};

/// Creation or annihilation of a vortex pair.
struct PairEvent {
  EventKind kind = EventKind::creation;
  double t = 0.0;
  double x = 0.0, y = 0.0;
  int track_a = -1, track_b = -1;
};

struct TrackSettings {
  double match_radius = 0.0;
  double pair_radius = 0.0;
  bool strict = false;

  /// match_radius = 5 dx, pair_radius = 10 dx.
  static TrackSettings for_grid(const GridSpec& grid);
};

struct TrackResult {
  std::vector<VortexTrack> tracks;
  std::vector<PairEvent> events;
  /// Ties resolved by the smallest-id rule.
  std::vector<std::string> ambiguities;
};

/// Frame-to-frame greedy nearest-neighbour tracking with equal winding.
/// Frames must be strictly monotone in time (either direction).
TrackResult track(const std::vector<VortexFrame>& frames, const TrackSettings& settings);

int total_winding(const std::vector<NodalPoint>& nodes);

/// `track_id,t,x,y,winding`
void write_tracks_csv(std::ostream& os, const TrackResult& result);
/// `event_type,t,x,y,track_id_a,track_id_b`
void write_events_csv(std::ostream& os, const TrackResult& result);

}  // namespace bohm
