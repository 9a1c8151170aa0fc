#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "bohm/model.hpp"
#include "bohm/spectral.hpp"

namespace bohm {

/// Discrete norm left [1 - tol, 1 + tol].
class NormDriftError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Amplitude on the outermost interior ring exceeded the leak threshold.
class BoundaryLeakError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct SolverSettings {
  double dt_max = 1e-2;
  double dt_min = 1e-5;
  /// Local error per accepted step (discrete L2), step-doubling estimate.
  double tol_step = 1e-8;
  double norm_tolerance = 1e-3;
  /// Relative to peak |Psi|.
  double leak_threshold = 1e-6;
};

struct StepStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  /// Steps accepted at the smallest allowed dt despite exceeding tol_step.
  std::int64_t forced = 0;
  double dt_smallest = 0.0;
  double dt_largest = 0.0;
  double max_error = 0.0;
};

struct NormSample {
  double t = 0.0;
  double norm = 0.0;
  double energy = 0.0;
};

/// Discrete L2 norm squared: sum |Psi|^2 dx^2.
double norm(const WaveField& field);
/// <Psi|H|Psi> with a spectral kinetic term and pointwise potential.
double energy(const WaveField& field);

/// Potential sampled on the interior nodes.
std::vector<double> sample_potential(const GridSpec& grid, const PhysParams& params);

/// H Psi on the interior nodes, given the sine coefficients of Psi.
void apply_hamiltonian(const DirichletSpectral& spectral, std::span<const double> potential_values,
                       const PhysParams& params, std::span<const Complex> coeffs,
                       std::span<const Complex> values, std::span<Complex> out);

/// Strang split-step propagator: half potential phase, exact kinetic
/// propagation in the sine basis, half potential phase. Phase tables are
/// cached per step size.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const GridSpec& grid, const PhysParams& params);

  const GridSpec& grid() const { return spectral_.grid(); }
  const PhysParams& params() const { return params_; }
  const DirichletSpectral& spectral() const { return spectral_; }
  const std::vector<double>& potential_values() const { return potential_; }

  void step(std::span<Complex> psi, double dt);

 private:
  struct PhaseTables {
    ComplexBuffer potential_half;
    ComplexBuffer kinetic;
  };
  const PhaseTables& tables(double dt);

  DirichletSpectral spectral_;
  PhysParams params_;
  std::vector<double> potential_;
  std::map<double, PhaseTables> tables_;
};

/// One Strang step of size dt.
WaveField step(const WaveField& field, double dt);

/// Adaptive-step evolution on a power-of-two ladder dt_max / 2^k, k chosen by
/// step doubling. Every time reachable through advance_to must be a multiple
/// of the smallest ladder step from the start time.
class Evolver {
 public:
  Evolver(const WaveField& initial, const SolverSettings& settings);

  double time() const;
  /// Current field (copied out of the work buffer).
  WaveField state() const;
  /// Advances to t_target, then checks the norm and boundary ring.
  void advance_to(double t_target);

  const StepStats& stats() const { return stats_; }
  const SolverSettings& settings() const { return settings_; }
  const SplitStepPropagator& propagator() const { return prop_; }

 private:
  double step_size(int level) const;

  SplitStepPropagator prop_;
  SolverSettings settings_;
  double t0_;
  double unit_;
  int max_level_;
  int level_ = 0;
  std::int64_t ticks_ = 0;
  double cell_area_;
  ComplexBuffer psi_;
  ComplexBuffer full_;
  StepStats stats_;
};

/// Snapshots at t0, t0 + dt_snap, ..., t_end with norm/energy history.
struct SnapshotSeries {
  GridSpec grid;
  PhysParams params;
  SolverSettings settings;
  double dt_snap = 0.0;
  std::vector<WaveField> snapshots;
  std::vector<NormSample> history;
  StepStats stats;
};

/// Callback invoked with each snapshot as it is produced.
using SnapshotSink = std::function<void(const WaveField&, const NormSample&)>;

/// Validates a snapshot schedule and returns the number of intervals between
/// t0 and t_end: dt_snap must be an integer multiple of dt_max and t_end - t0
/// a multiple of dt_snap.
std::int64_t snapshot_intervals(double t0, double t_end, double dt_snap, double dt_max);

/// Streams snapshots at uniform spacing dt_snap to sink. dt_snap must be an
/// integer multiple of dt_max. Returns the step statistics.
StepStats evolve_streaming(const WaveField& field, double t_end, double dt_snap, const SolverSettings& settings,
                           const SnapshotSink& sink);

SnapshotSeries evolve(const WaveField& field, double t_end, double dt_snap, double dt_max,
                      SolverSettings settings = {});

}  // namespace bohm
