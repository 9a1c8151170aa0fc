#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bohm/interpolant.hpp"

namespace bohm {

/// (hbar/m) Im(grad Psi / Psi). Throws NodeProximityError / OutOfDomainError.
Vec2 velocity(const FieldInterpolant& interp, double t, double x, double y);
/// -(hbar^2/2m) lap R / R with R = |Psi|.
double quantum_potential(const FieldInterpolant& interp, double t, double x, double y);
/// -grad Q, the exact gradient of the interpolated quantum potential.
Vec2 quantum_force(const FieldInterpolant& interp, double t, double x, double y);

struct TrajectoryState {
  double t = 0.0;
  double x = 0.0, y = 0.0;
  /// m v = grad S
  double px = 0.0, py = 0.0;
};

enum class TrajectoryStatus { complete, node_proximity, out_of_domain };

/// CSV flag text: "ok", "node_proximity", "out_of_domain".
const char* flag_name(TrajectoryStatus status);

struct IntegratorSettings {
  /// Fixed step of the eighth-order Dormand-Prince scheme; in adaptive mode
  /// the output spacing is still dt * out_every.
  double dt = 1e-5;
  int out_every = 1000;
  /// Embedded error control; not used by the reproduction presets.
  bool adaptive = false;
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Worker threads for batches.
  int threads = 1;

  void validate() const;
  double output_interval() const { return dt * out_every; }
};

struct Trajectory {
  double x0 = 0.0, y0 = 0.0;
  IntegratorSettings settings;
  /// States at uniform output interval, starting at the initial condition.
  std::vector<TrajectoryState> samples;
  TrajectoryStatus status = TrajectoryStatus::complete;
  /// Last state reached before the integration stopped early.
  std::optional<TrajectoryState> last_valid;
  std::string message;

  bool truncated() const { return status != TrajectoryStatus::complete; }
};

/// Integrates dx/dt = v(t, x) from t_begin to t_end through the snapshot
/// series. t_begin must be a snapshot time, dt_snap a multiple of dt, and
/// t_end - t_begin a multiple of dt. Errors inside the field truncate the
/// trajectory and set its status instead of throwing.
Trajectory integrate(const FieldInterpolant& interp, double x0, double y0, double t_begin, double t_end,
                     const IntegratorSettings& settings = {});

/// Order-preserving batch over seeds; each trajectory is independent of the
/// others and of the thread count.
std::vector<Trajectory> integrate_batch(const FieldInterpolant& interp, const std::vector<Vec2>& seeds,
                                        double t_begin, double t_end, const IntegratorSettings& settings = {});

/// Batch integration over a frame stream, from its first frame to t_end.
/// Only two frames are held at a time.
std::vector<Trajectory> integrate_stream(FrameStream& frames, const std::vector<Vec2>& seeds, double t_end,
                                         const IntegratorSettings& settings = {});

/// Header `t,x,y,px,py,flag`. A truncated trajectory ends with its last
/// valid state flagged by the truncation cause.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Shortest round-trip decimal form, for deterministic text output.
std::string format_number(double v);

}  // namespace bohm
