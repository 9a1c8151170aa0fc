#pragma once

#include <cstddef>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "bohm/model.hpp"
#include "bohm/spectral.hpp"
#include "bohm/tdse.hpp"

namespace bohm {

/// |Psi| at the query point fell below the node guard.
class NodeProximityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Query outside (-L, L)^2 or outside the covered time span.
class OutOfDomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Value and first derivatives of a field at one mesh node.
struct NodeData {
  Complex f, fx, fy, fxy;
};

/// Psi and its time derivative -i H Psi / hbar on the full (n+2)^2 mesh,
/// ready for bicubic Hermite interpolation. The Laplacian layers are only
/// filled when the frame was built for quantum-potential queries.
struct SnapshotFrame {
  double t = 0.0;
  GridSpec grid;
  PhysParams params;
  double peak_abs = 0.0;
  std::vector<NodeData> psi;
  std::vector<NodeData> psi_t;
  std::vector<NodeData> lap;
  std::vector<NodeData> lap_t;

  bool has_laplacian() const { return !lap.empty(); }
};

/// Turns wave fields into frames. Holds transform scratch space, so use one
/// builder per thread.
class FrameBuilder {
 public:
  /// Without the time derivative the frames only serve static windows.
  FrameBuilder(const GridSpec& grid, const PhysParams& params, bool with_laplacian,
               bool with_time_derivative = true);

  std::shared_ptr<const SnapshotFrame> build(const WaveField& field);
  bool with_laplacian() const { return with_laplacian_; }

 private:
  void fill(std::span<const Complex> coeffs, std::vector<NodeData>& out,
            std::span<const Complex> nodal);

  DirichletSpectral spectral_;
  PhysParams params_;
  bool with_laplacian_;
  bool with_time_derivative_;
  std::vector<double> potential_;
  ComplexBuffer coeffs_, coeffs_t_, scratch_;
  std::vector<Complex> mesh_;
};

/// Interpolated field quantities at one point.
struct FieldSample {
  Complex psi;
  Complex psi_x, psi_y;
};

/// Adds the Hessian of Psi and the interpolated Laplacian with its gradient.
struct FieldSample2 : FieldSample {
  Complex psi_xx, psi_xy, psi_yy;
  Complex lap, lap_x, lap_y;
};

/// Two consecutive frames: cubic Hermite in time, bicubic Hermite in space.
/// A window over a single frame (a == b) is static.
class FrameWindow {
 public:
  FrameWindow(std::shared_ptr<const SnapshotFrame> a, std::shared_ptr<const SnapshotFrame> b);
  explicit FrameWindow(std::shared_ptr<const SnapshotFrame> only) : FrameWindow(only, only) {}

  double t_begin() const { return a_->t; }
  double t_end() const { return b_->t; }
  const GridSpec& grid() const { return a_->grid; }
  const PhysParams& params() const { return a_->params; }
  /// Node guard threshold: 1e-6 of the larger frame peak.
  double guard() const { return guard_; }

  FieldSample sample(double t, double x, double y) const;
  /// Requires frames built with the Laplacian layers.
  FieldSample2 sample2(double t, double x, double y) const;

  Vec2 velocity(double t, double x, double y) const;
  double quantum_potential(double t, double x, double y) const;
  Vec2 quantum_force(double t, double x, double y) const;

 private:
  struct Weights;
  Weights weights(double t, double x, double y) const;

  std::shared_ptr<const SnapshotFrame> a_, b_;
  double guard_;
};

/// Sequential source of frames at uniform spacing.
class FrameStream {
 public:
  virtual ~FrameStream() = default;
  virtual double t_begin() const = 0;
  virtual double dt_snap() const = 0;
  /// Number of frames the stream will produce in total.
  virtual std::size_t frame_count() const = 0;
  /// Next frame, or nullptr after the last one.
  virtual std::shared_ptr<const SnapshotFrame> next() = 0;
};

/// Frames built on demand from an in-memory snapshot series.
class SeriesFrameStream : public FrameStream {
 public:
  SeriesFrameStream(std::shared_ptr<const SnapshotSeries> series, bool with_laplacian = false,
                    std::size_t first = 0);
  double t_begin() const override;
  double dt_snap() const override { return series_->dt_snap; }
  std::size_t frame_count() const override { return series_->snapshots.size() - first_; }
  std::shared_ptr<const SnapshotFrame> next() override;

 private:
  std::shared_ptr<const SnapshotSeries> series_;
  FrameBuilder builder_;
  std::size_t first_;
  std::size_t index_;
};

/// Frames produced while the Schroedinger equation is being integrated.
/// The optional observer sees every snapshot with its norm/energy sample.
class EvolvingFrameStream : public FrameStream {
 public:
  EvolvingFrameStream(const WaveField& initial, double t_end, double dt_snap, const SolverSettings& settings,
                      bool with_laplacian = false, SnapshotSink observer = {});
  double t_begin() const override { return t0_; }
  double dt_snap() const override { return dt_snap_; }
  std::size_t frame_count() const override { return count_ + 1; }
  std::shared_ptr<const SnapshotFrame> next() override;
  const StepStats& stats() const { return evolver_.stats(); }

 private:
  Evolver evolver_;
  FrameBuilder builder_;
  SnapshotSink observer_;
  double t0_, dt_snap_;
  std::size_t count_;
  std::size_t index_ = 0;
};

/// Random-access interpolation over a snapshot series, with frames built
/// lazily and kept in a small cache. Safe for concurrent readers.
class FieldInterpolant {
 public:
  explicit FieldInterpolant(std::shared_ptr<const SnapshotSeries> series, bool with_laplacian = true,
                            std::size_t cache_frames = 8);

  const SnapshotSeries& series() const { return *series_; }
  double t_begin() const;
  double t_end() const;
  bool with_laplacian() const { return with_laplacian_; }

  /// Window covering t; throws OutOfDomainError outside [t_begin, t_end].
  FrameWindow window(double t) const;
  /// Window between snapshots k and k+1.
  FrameWindow window_at(std::size_t k) const;
  std::shared_ptr<const SnapshotFrame> frame(std::size_t k) const;

 private:
  std::shared_ptr<const SnapshotSeries> series_;
  bool with_laplacian_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  mutable std::list<std::pair<std::size_t, std::shared_ptr<const SnapshotFrame>>> cache_;
};

/// Streams the frames of an interpolant, starting at snapshot `first`.
class InterpolantFrameStream : public FrameStream {
 public:
  InterpolantFrameStream(const FieldInterpolant& interp, std::size_t first);
  double t_begin() const override;
  double dt_snap() const override { return interp_.series().dt_snap; }
  std::size_t frame_count() const override { return interp_.series().snapshots.size() - first_; }
  std::shared_ptr<const SnapshotFrame> next() override;

 private:
  const FieldInterpolant& interp_;
  std::size_t first_;
  std::size_t index_;
};

}  // namespace bohm
