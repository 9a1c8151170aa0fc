#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <vector>

#include "bohm/trajectories.hpp"

namespace bohm {

/// Both members of a pair start at the same phase-space point.
class ZeroInitialSeparation : public Error {
 public:
  using Error::Error;
};

struct Interval {
  double lo = 0.0, hi = 0.0;
};

/// Product of two unions of intervals: x0 in X, y0 in Y.
struct SeedRegion {
  std::vector<Interval> x, y;

  /// X = Y = [-b, -a] u [a, b].
  static SeedRegion symmetric(double a, double b);
  bool contains(double x0, double y0) const;
};

struct PairSpec {
  Vec2 base;
  Vec2 offset;

  Vec2 partner() const { return {base.x + offset.x, base.y + offset.y}; }
};

/// Regular lattice over the region: each non-degenerate interval gets k
/// evenly spaced points (endpoints included), k the smallest value giving at
/// least `count` lattice points; the first `count` in row-major order (y
/// outer, x inner) are kept. The offset has length epsilon along `angle`.
std::vector<PairSpec> make_pairs(const SeedRegion& region, std::size_t count = 60, double epsilon = 1e-4,
                                 double angle = std::numbers::pi / 4);

/// ln xi(t) for one pair.
struct PairSeparation {
  std::size_t id = 0;
  std::vector<double> t;
  std::vector<double> ln_xi;
  /// One of the trajectories stopped early; the series ends with it.
  bool truncated = false;
};

/// ln(xi~(t) / xi~(0)) with xi~ the Euclidean distance in (x, y, px, py),
/// over the samples both trajectories share.
PairSeparation separation(const Trajectory& a, const Trajectory& b, std::size_t id = 0);

struct SlopeFit {
  double t_begin = 0.0, t_end = 0.0;
  std::size_t samples = 0;
  double slope = 0.0, intercept = 0.0;
  /// Sum of squared residuals.
  double residual = 0.0;
  /// Bootstrap 95% interval of the slope, when computed.
  double ci_low = 0.0, ci_high = 0.0;
  bool has_interval = false;
};

struct SeparationSeries {
  std::vector<double> t;
  std::vector<double> mean_ln_xi;
  std::vector<std::size_t> n_effective;
  /// All input pairs, in input order.
  std::vector<PairSeparation> pairs;
  /// Ids of pairs left out of the mean (truncated too early).
  std::vector<std::size_t> excluded;

  bool included(const PairSeparation& p) const;
};

/// Pointwise mean over pairs. A pair whose series ends before
/// keep_fraction of the way to t_end is excluded; shorter included pairs
/// drop out of the mean beyond their range. The sum at each time runs over
/// sorted values, so the mean does not depend on the pair order.
SeparationSeries ensemble_mean(std::vector<PairSeparation> pairs, double t_end, double keep_fraction = 0.8);

/// Ordinary least squares of the mean over [t1, t2]; needs 10 samples.
SlopeFit fit_slope(const SeparationSeries& series, double t1, double t2);
/// Window [t0 + (t_end - t0) / 5, t_end].
SlopeFit fit_slope(const SeparationSeries& series);

/// Percentile bootstrap over pairs (resampled with replacement), filling
/// ci_low/ci_high of `fit`. Deterministic for a given seed.
void bootstrap_slope(const SeparationSeries& series, SlopeFit& fit, int resamples = 1000,
                     std::uint64_t seed = 20240601);

/// Integrates both members of every pair through the stream and returns
/// their separations, ids following the pair order.
std::vector<PairSeparation> integrate_pairs(FrameStream& frames, const std::vector<PairSpec>& pairs, double t_end,
                                            const IntegratorSettings& settings);

/// `t,mean_ln_xi,n_effective`
void write_mean_csv(std::ostream& os, const SeparationSeries& series);
/// `pair_id,t,ln_xi`
void write_pairs_csv(std::ostream& os, const SeparationSeries& series);

}  // namespace bohm
