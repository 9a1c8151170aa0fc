#include "bohm/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

namespace bohm {

namespace {

void check_intervals(const std::vector<Interval>& axis, const char* name) {
  if (axis.empty()) throw std::invalid_argument(std::string("seed region: no ") + name + " intervals");
  for (const auto& iv : axis)
    if (!(iv.lo <= iv.hi)) throw std::invalid_argument(std::string("seed region: reversed ") + name + " interval");
}

std::vector<double> lattice(const std::vector<Interval>& axis, std::size_t k) {
  std::vector<double> out;
  for (const auto& iv : axis) {
    if (iv.lo == iv.hi || k == 1) {
      out.push_back(iv.lo == iv.hi ? iv.lo : 0.5 * (iv.lo + iv.hi));
      continue;
    }
    for (std::size_t j = 0; j < k; ++j)
      out.push_back(j + 1 == k ? iv.hi : iv.lo + (iv.hi - iv.lo) * static_cast<double>(j) / static_cast<double>(k - 1));
  }
  return out;
}

double phase_distance(const TrajectoryState& a, const TrajectoryState& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dpx = a.px - b.px, dpy = a.py - b.py;
  return std::sqrt(dx * dx + dy * dy + dpx * dpx + dpy * dpy);
}

// Mean at each time over the given pair multiset (indices into series.pairs).
std::vector<double> mean_over(const SeparationSeries& series, const std::vector<std::size_t>& members,
                              std::size_t first, std::size_t last) {
  std::vector<double> out;
  std::vector<double> values;
  for (std::size_t k = first; k <= last; ++k) {
    values.clear();
    for (std::size_t i : members) {
      const auto& p = series.pairs[i];
      if (k < p.ln_xi.size()) values.push_back(p.ln_xi[k]);
    }
    if (values.empty()) {
      out.push_back(std::nan(""));
      continue;
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    out.push_back(sum / static_cast<double>(values.size()));
  }
  return out;
}

struct Line {
  double slope, intercept, rss;
};

Line least_squares(const std::vector<double>& t, const std::vector<double>& y) {
  const double n = static_cast<double>(t.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  Line l{sty / stt, 0.0, 0.0};
  l.intercept = my - l.slope * mt;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (l.intercept + l.slope * t[i]);
    l.rss += r * r;
  }
  return l;
}

std::pair<std::size_t, std::size_t> window_indices(const SeparationSeries& s, double t1, double t2) {
  if (s.t.empty()) throw std::invalid_argument("fit window: empty series");
  const double eps = 1e-9 * std::max(1.0, std::abs(s.t.back()));
  if (!(t1 < t2) || t1 < s.t.front() - eps || t2 > s.t.back() + eps)
    throw std::invalid_argument("fit window outside the sampled range");
  const auto lo = std::lower_bound(s.t.begin(), s.t.end(), t1 - eps) - s.t.begin();
  const auto hi = std::upper_bound(s.t.begin(), s.t.end(), t2 + eps) - s.t.begin();
  if (hi - lo < 10) throw std::invalid_argument("fit window holds fewer than 10 samples");
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi - 1)};
}

}  // namespace

SeedRegion SeedRegion::symmetric(double a, double b) {
  SeedRegion r;
  r.x = {{-b, -a}, {a, b}};
  r.y = r.x;
  return r;
}

bool SeedRegion::contains(double x0, double y0) const {
  auto in = [](const std::vector<Interval>& axis, double v) {
    return std::any_of(axis.begin(), axis.end(), [v](const Interval& iv) { return v >= iv.lo && v <= iv.hi; });
  };
  return in(x, x0) && in(y, y0);
}

std::vector<PairSpec> make_pairs(const SeedRegion& region, std::size_t count, double epsilon, double angle) {
  check_intervals(region.x, "x");
  check_intervals(region.y, "y");
  if (count == 0) throw std::invalid_argument("make_pairs: count must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("make_pairs: epsilon must be positive");

  auto points = [](const std::vector<Interval>& axis, std::size_t k) { return lattice(axis, k).size(); };
  const std::size_t k_cap = count + 1;
  std::size_t k = 1;
  while (points(region.x, k) * points(region.y, k) < count) {
    if (++k > k_cap) throw std::invalid_argument("make_pairs: region too small for the requested count");
  }
  const auto xs = lattice(region.x, k);
  const auto ys = lattice(region.y, k);
  const Vec2 offset{epsilon * std::cos(angle), epsilon * std::sin(angle)};
  std::vector<PairSpec> out;
  for (double y : ys)
    for (double x : xs) {
      if (out.size() == count) return out;
      out.push_back({{x, y}, offset});
    }
  return out;
}

PairSeparation separation(const Trajectory& a, const Trajectory& b, std::size_t id) {
  PairSeparation out;
  out.id = id;
  out.truncated = a.truncated() || b.truncated();
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  if (n == 0) return out;
  const double d0 = phase_distance(a.samples[0], b.samples[0]);
  if (!(d0 > 0.0)) throw ZeroInitialSeparation("pair " + std::to_string(id) + " has zero initial separation");
  out.t.reserve(n);
  out.ln_xi.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ta = a.samples[k].t, tb = b.samples[k].t;
    if (std::abs(ta - tb) > 1e-9 * std::max(1.0, std::abs(ta)))
      throw std::invalid_argument("separation: trajectories are sampled at different times");
    out.t.push_back(ta);
    out.ln_xi.push_back(k == 0 ? 0.0 : std::log(phase_distance(a.samples[k], b.samples[k]) / d0));
  }
  return out;
}

bool SeparationSeries::included(const PairSeparation& p) const {
  return std::find(excluded.begin(), excluded.end(), p.id) == excluded.end();
}

SeparationSeries ensemble_mean(std::vector<PairSeparation> pairs, double t_end, double keep_fraction) {
  if (pairs.size() < 2) throw std::invalid_argument("ensemble mean needs at least two pairs");
  SeparationSeries s;
  s.pairs = std::move(pairs);
  std::vector<std::size_t> members;
  const PairSeparation* longest = nullptr;
  for (std::size_t i = 0; i < s.pairs.size(); ++i) {
    const auto& p = s.pairs[i];
    const double t0 = p.t.empty() ? 0.0 : p.t.front();
    const bool keep = !p.t.empty() && (!p.truncated || p.t.back() >= t0 + keep_fraction * (t_end - t0) - 1e-12);
    if (!keep) {
      s.excluded.push_back(p.id);
      continue;
    }
    members.push_back(i);
    if (!longest || p.t.size() > longest->t.size()) longest = &p;
  }
  if (members.empty()) throw NumericalError("ensemble mean: every pair was truncated early");
  for (std::size_t i : members) {
    const auto& p = s.pairs[i];
    for (std::size_t k = 0; k < p.t.size(); ++k)
      if (std::abs(p.t[k] - longest->t[k]) > 1e-9 * std::max(1.0, std::abs(p.t[k])))
        throw std::invalid_argument("ensemble mean: pairs are sampled at different times");
  }
  s.t = longest->t;
  s.mean_ln_xi = mean_over(s, members, 0, s.t.size() - 1);
  s.n_effective.assign(s.t.size(), 0);
  for (std::size_t i : members)
    for (std::size_t k = 0; k < s.pairs[i].t.size(); ++k) ++s.n_effective[k];
  return s;
}

SlopeFit fit_slope(const SeparationSeries& series, double t1, double t2) {
  const auto [lo, hi] = window_indices(series, t1, t2);
  const std::vector<double> t(series.t.begin() + static_cast<std::ptrdiff_t>(lo),
                              series.t.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  const std::vector<double> y(series.mean_ln_xi.begin() + static_cast<std::ptrdiff_t>(lo),
                              series.mean_ln_xi.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  const Line l = least_squares(t, y);
  SlopeFit f;
  f.t_begin = t1;
  f.t_end = t2;
  f.samples = t.size();
  f.slope = l.slope;
  f.intercept = l.intercept;
  f.residual = l.rss;
  return f;
}

SlopeFit fit_slope(const SeparationSeries& series) {
  if (series.t.empty()) throw std::invalid_argument("fit window: empty series");
  const double t0 = series.t.front(), t1 = series.t.back();
  return fit_slope(series, t0 + (t1 - t0) / 5.0, t1);
}

void bootstrap_slope(const SeparationSeries& series, SlopeFit& fit, int resamples, std::uint64_t seed) {
  if (resamples < 10) throw std::invalid_argument("bootstrap needs at least 10 resamples");
  const auto [lo, hi] = window_indices(series, fit.t_begin, fit.t_end);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < series.pairs.size(); ++i)
    if (series.included(series.pairs[i])) members.push_back(i);
  const std::vector<double> t(series.t.begin() + static_cast<std::ptrdiff_t>(lo),
                              series.t.begin() + static_cast<std::ptrdiff_t>(hi) + 1);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
  std::vector<double> slopes;
  std::vector<std::size_t> draw(members.size());
  for (int r = 0; r < resamples; ++r) {
    for (auto& d : draw) d = members[pick(rng)];
    const auto y = mean_over(series, draw, lo, hi);
    std::vector<double> tt, yy;
    for (std::size_t k = 0; k < y.size(); ++k)
      if (!std::isnan(y[k])) {
        tt.push_back(t[k]);
        yy.push_back(y[k]);
      }
    if (tt.size() >= 10) slopes.push_back(least_squares(tt, yy).slope);
  }
  if (slopes.size() < 10) throw NumericalError("bootstrap: too few usable resamples");
  std::sort(slopes.begin(), slopes.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(slopes.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    return i + 1 < slopes.size() ? slopes[i] * (1.0 - frac) + slopes[i + 1] * frac : slopes[i];
  };
  fit.ci_low = quantile(0.025);
  fit.ci_high = quantile(0.975);
  fit.has_interval = true;
}

std::vector<PairSeparation> integrate_pairs(FrameStream& frames, const std::vector<PairSpec>& pairs, double t_end,
                                            const IntegratorSettings& settings) {
  std::vector<Vec2> seeds;
  seeds.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    seeds.push_back(p.base);
    seeds.push_back(p.partner());
  }
  const auto trajs = integrate_stream(frames, seeds, t_end, settings);
  std::vector<PairSeparation> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back(separation(trajs[2 * i], trajs[2 * i + 1], i));
  return out;
}

void write_mean_csv(std::ostream& os, const SeparationSeries& series) {
  os << "t,mean_ln_xi,n_effective\n";
  for (std::size_t k = 0; k < series.t.size(); ++k)
    os << format_number(series.t[k]) << ',' << format_number(series.mean_ln_xi[k]) << ','
       << series.n_effective[k] << '\n';
}

void write_pairs_csv(std::ostream& os, const SeparationSeries& series) {
  os << "pair_id,t,ln_xi\n";
  for (const auto& p : series.pairs)
    for (std::size_t k = 0; k < p.t.size(); ++k)
      os << p.id << ',' << format_number(p.t[k]) << ',' << format_number(p.ln_xi[k]) << '\n';
}

}  // namespace bohm
