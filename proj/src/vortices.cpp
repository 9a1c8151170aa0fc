#include "bohm/vortices.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include "bohm/trajectories.hpp"

namespace bohm {

namespace {

struct Refined {
  double x, y;
  double residual;
};

class NodeRefiner {
 public:
  NodeRefiner(const FrameWindow& w, double t, int max_iter) : w_(w), t_(t), max_iter_(max_iter) {}

  // Newton iteration on (Re Psi, Im Psi) = 0, confined to `box`.
  std::optional<Refined> newton(double x, double y, const Region& box, bool* singular) const {
    *singular = false;
    for (int it = 0; it < max_iter_; ++it) {
      const FieldSample s = w_.sample(t_, x, y);
      const double j11 = s.psi_x.real(), j12 = s.psi_y.real();
      const double j21 = s.psi_x.imag(), j22 = s.psi_y.imag();
      const double det = j11 * j22 - j12 * j21;
      const double scale = j11 * j11 + j12 * j12 + j21 * j21 + j22 * j22;
      if (!(std::abs(det) > 1e-12 * scale)) {
        *singular = true;
        return std::nullopt;
      }
      const double fr = s.psi.real(), fi = s.psi.imag();
      const double dx = (j22 * fr - j12 * fi) / det;
      const double dy = (-j21 * fr + j11 * fi) / det;
      x -= dx;
      y -= dy;
      if (!box.contains(x, y)) return std::nullopt;
      if (std::hypot(dx, dy) < 1e-12) return Refined{x, y, std::abs(w_.sample(t_, x, y).psi)};
    }
    return std::nullopt;
  }

  // Golden-section minimum of |Psi| along the segment a -> b.
  Vec2 segment_minimum(Vec2 a, Vec2 b) const {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    auto at = [&](double u) { return Vec2{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)}; };
    auto f = [&](double u) {
      const Vec2 p = at(u);
      return std::norm(w_.sample(t_, p.x, p.y).psi);
    };
    double lo = 0.0, hi = 1.0;
    double u1 = hi - g * (hi - lo), u2 = lo + g * (hi - lo);
    double f1 = f(u1), f2 = f(u2);
    for (int i = 0; i < 60; ++i) {
      if (f1 < f2) {
        hi = u2;
        u2 = u1;
        f2 = f1;
        u1 = hi - g * (hi - lo);
        f1 = f(u1);
      } else {
        lo = u1;
        u1 = u2;
        f1 = f2;
        u2 = lo + g * (hi - lo);
        f2 = f(u2);
      }
    }
    return at(0.5 * (lo + hi));
  }

  int winding(double x, double y, double radius, int samples) const {
    double total = 0.0;
    double prev = std::arg(w_.sample(t_, x + radius, y).psi);
    for (int k = 1; k <= samples; ++k) {
      const double a = 2.0 * std::numbers::pi * k / samples;
      const double cur = std::arg(w_.sample(t_, x + radius * std::cos(a), y + radius * std::sin(a)).psi);
      double d = cur - prev;
      while (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
      while (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
      total += d;
      prev = cur;
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
  }

 private:
  const FrameWindow& w_;
  double t_;
  int max_iter_;
};

bool straddles_zero(double a, double b, double c, double d) {
  const double lo = std::min(std::min(a, b), std::min(c, d));
  const double hi = std::max(std::max(a, b), std::max(c, d));
  return lo <= 0.0 && hi >= 0.0;
}

}  // namespace

std::vector<NodalPoint> find_nodes(const WaveField& field, const Region& region, const NodeSearchSettings& settings) {
  FrameBuilder builder(field.grid, field.params, false, false);
  return find_nodes(*builder.build(field), region, settings);
}

std::vector<NodalPoint> find_nodes(const SnapshotFrame& frame, const Region& region,
                                   const NodeSearchSettings& settings) {
  const GridSpec& g = frame.grid;
  const double L = g.half_width;
  if (!(region.x_min < region.x_max && region.y_min < region.y_max))
    throw std::invalid_argument("find_nodes: empty region");
  if (region.x_min <= -L || region.x_max >= L || region.y_min <= -L || region.y_max >= L)
    throw std::invalid_argument("find_nodes: region must lie inside the domain");

  const int m = g.n + 2;
  auto node = [&](int c, int r) -> const Complex& { return frame.psi[static_cast<std::size_t>(r) * m + c].f; };

  // Mesh columns/rows whose cells intersect the region (interior nodes only).
  auto first_cell = [&](double lo) { return std::max(1, static_cast<int>(std::floor((lo + L) / g.dx()))); };
  auto last_cell = [&](double hi) { return std::min(g.n - 1, static_cast<int>(std::floor((hi + L) / g.dx()))); };
  const int c0 = first_cell(region.x_min), c1 = last_cell(region.x_max);
  const int r0 = first_cell(region.y_min), r1 = last_cell(region.y_max);

  Complex sum_sq{};
  double sum_abs = 0.0;
  for (int r = r0; r <= r1 + 1; ++r)
    for (int c = c0; c <= c1 + 1; ++c) {
      const double x = g.mesh_coord(c), y = g.mesh_coord(r);
      if (!region.contains(x, y)) continue;
      const Complex v = node(c, r);
      sum_sq += v * v;
      sum_abs += std::norm(v);
    }
  if (sum_abs > 0.0 && std::abs(sum_sq) >= sum_abs * (1.0 - 1e-10))
    throw DegenerateFieldError("field is real up to a global phase over the region; zeros form lines");

  const double floor = settings.amplitude_floor * frame.peak_abs;
  std::vector<std::pair<int, int>> candidates;
  std::size_t cells = 0;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      ++cells;
      const Complex a = node(c, r), b = node(c + 1, r), cc = node(c, r + 1), d = node(c + 1, r + 1);
      if (std::max(std::max(std::abs(a), std::abs(b)), std::max(std::abs(cc), std::abs(d))) < floor) continue;
      if (straddles_zero(a.real(), b.real(), cc.real(), d.real()) &&
          straddles_zero(a.imag(), b.imag(), cc.imag(), d.imag()))
        candidates.emplace_back(c, r);
    }
  if (candidates.size() > settings.min_degenerate_cells &&
      static_cast<double>(candidates.size()) > settings.degenerate_fraction * static_cast<double>(cells)) {
    std::ostringstream os;
    os << candidates.size() << " of " << cells << " cells flag zero crossings; zeros form lines, not points";
    throw DegenerateFieldError(os.str());
  }

  std::shared_ptr<const SnapshotFrame> alias(std::shared_ptr<const SnapshotFrame>{}, &frame);
  const FrameWindow w(alias);
  const NodeRefiner refiner(w, frame.t, settings.max_newton);
  const double h = g.dx();
  const double limit = 1e-8 * frame.peak_abs;

  std::vector<Refined> found;
  for (const auto& [c, r] : candidates) {
    const double x0 = g.mesh_coord(c), y0 = g.mesh_coord(r);
    const Region box{std::max(x0 - h, -L + 1e-9 * L), std::min(x0 + 2 * h, L - 1e-9 * L),
                     std::max(y0 - h, -L + 1e-9 * L), std::min(y0 + 2 * h, L - 1e-9 * L)};
    bool singular = false;
    auto res = refiner.newton(x0 + 0.5 * h, y0 + 0.5 * h, box, &singular);
    if (!res) {
      const Vec2 p1 = refiner.segment_minimum({x0, y0}, {x0 + h, y0 + h});
      const Vec2 p2 = refiner.segment_minimum({x0 + h, y0}, {x0, y0 + h});
      const double f1 = std::abs(w.sample(frame.t, p1.x, p1.y).psi);
      const double f2 = std::abs(w.sample(frame.t, p2.x, p2.y).psi);
      const Vec2 start = f1 <= f2 ? p1 : p2;
      res = refiner.newton(start.x, start.y, box, &singular);
    }
    if (!res || !(res->residual < limit) || !region.contains(res->x, res->y)) continue;
    const bool duplicate = std::any_of(found.begin(), found.end(), [&](const Refined& o) {
      return std::hypot(o.x - res->x, o.y - res->y) < 1e-6 * h;
    });
    if (!duplicate) found.push_back(*res);
  }

  std::sort(found.begin(), found.end(), [](const Refined& a, const Refined& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });

  std::vector<NodalPoint> out;
  for (std::size_t i = 0; i < found.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < found.size(); ++j)
      if (j != i) nearest = std::min(nearest, std::hypot(found[i].x - found[j].x, found[i].y - found[j].y));
    const double radius = std::min(1.5 * h, 0.45 * nearest);
    int wnd = 0;
    try {
      wnd = refiner.winding(found[i].x, found[i].y, radius, settings.winding_samples);
    } catch (const OutOfDomainError&) {
      continue;
    }
    if (wnd == 0) continue;
    out.push_back({frame.t, found[i].x, found[i].y, wnd, found[i].residual, std::abs(wnd) != 1});
  }
  return out;
}

const char* event_name(EventKind kind) {
  switch (kind) {
    case EventKind::initial:
      return "initial";
    case EventKind::creation:
      return "creation";
    case EventKind::appearance:
      return "appearance";
    case EventKind::final:
      return "final";
    case EventKind::annihilation:
      return "annihilation";
    case EventKind::disappearance:
      return "disappearance";
  }
  return "initial";
}

TrackSettings TrackSettings::for_grid(const GridSpec& grid) {
  TrackSettings s;
  s.match_radius = 5.0 * grid.dx();
  s.pair_radius = 10.0 * grid.dx();
  return s;
}

namespace {

struct Candidate {
  double dist;
  int a;  // track id or first index
  int b;  // node index or second index
};

bool candidate_less(const Candidate& l, const Candidate& r) {
  if (l.dist != r.dist) return l.dist < r.dist;
  if (l.a != r.a) return l.a < r.a;
  return l.b < r.b;
}

// Greedy assignment in ascending distance. Reports ties within 1e-6 that
// compete for the same track or node.
template <class OnPair>
void greedy(std::vector<Candidate> cand, std::size_t size_a, std::size_t size_b, double t,
            std::vector<std::string>& ambiguities, bool strict, OnPair&& on_pair) {
  std::sort(cand.begin(), cand.end(), candidate_less);
  std::vector<bool> used_a(size_a, false), used_b(size_b, false);
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const Candidate& c = cand[i];
    if (used_a[static_cast<std::size_t>(c.a)] || used_b[static_cast<std::size_t>(c.b)]) continue;
    for (std::size_t j = i + 1; j < cand.size() && cand[j].dist - c.dist <= 1e-6; ++j) {
      const Candidate& o = cand[j];
      if (used_a[static_cast<std::size_t>(o.a)] || used_b[static_cast<std::size_t>(o.b)]) continue;
      if (o.a == c.a || o.b == c.b) {
        std::ostringstream os;
        os << "t=" << t << ": assignments (" << c.a << ", " << c.b << ") and (" << o.a << ", " << o.b
           << ") tie in distance; kept the first";
        if (strict) throw AmbiguousMatchError(os.str());
        ambiguities.push_back(os.str());
      }
    }
    used_a[static_cast<std::size_t>(c.a)] = true;
    used_b[static_cast<std::size_t>(c.b)] = true;
    on_pair(c);
  }
}

}  // namespace

TrackResult track(const std::vector<VortexFrame>& frames, const TrackSettings& settings) {
  if (!(settings.match_radius > 0.0) || !(settings.pair_radius > 0.0))
    throw std::invalid_argument("track: radii must be positive");
  for (std::size_t k = 2; k < frames.size(); ++k)
    if ((frames[k].t - frames[k - 1].t) * (frames[1].t - frames[0].t) <= 0.0)
      throw std::invalid_argument("track: frame times must be strictly monotone");
  if (frames.size() == 2 && frames[1].t == frames[0].t)
    throw std::invalid_argument("track: frame times must be strictly monotone");

  TrackResult result;
  if (frames.empty()) return result;
  auto& tracks = result.tracks;
  std::vector<int> open;  // ids of tracks alive in the previous frame

  for (const auto& p : frames[0].nodes) {
    VortexTrack tr;
    tr.id = static_cast<int>(tracks.size());
    tr.winding = p.winding;
    tr.points.push_back(p);
    tr.birth = {EventKind::initial, frames[0].t, -1};
    tracks.push_back(tr);
    open.push_back(tr.id);
  }

  for (std::size_t k = 1; k < frames.size(); ++k) {
    const auto& nodes = frames[k].nodes;
    const double t_prev = frames[k - 1].t, t_now = frames[k].t;
    const double t_mid = 0.5 * (t_prev + t_now);

    std::vector<Candidate> cand;
    for (std::size_t a = 0; a < open.size(); ++a) {
      const NodalPoint& last = tracks[static_cast<std::size_t>(open[a])].points.back();
      for (std::size_t b = 0; b < nodes.size(); ++b) {
        if (nodes[b].winding != last.winding) continue;
        const double d = std::hypot(nodes[b].x - last.x, nodes[b].y - last.y);
        if (d < settings.match_radius) cand.push_back({d, static_cast<int>(a), static_cast<int>(b)});
      }
    }
    std::vector<int> node_track(nodes.size(), -1);
    std::vector<bool> continued(open.size(), false);
    greedy(cand, open.size(), nodes.size(), t_now, result.ambiguities, settings.strict, [&](const Candidate& c) {
      node_track[static_cast<std::size_t>(c.b)] = open[static_cast<std::size_t>(c.a)];
      continued[static_cast<std::size_t>(c.a)] = true;
    });

    // Tracks ending at the previous frame, paired into annihilations.
    std::vector<int> ended;
    for (std::size_t a = 0; a < open.size(); ++a)
      if (!continued[a]) ended.push_back(open[a]);
    for (int id : ended) tracks[static_cast<std::size_t>(id)].death = {EventKind::disappearance, t_prev, -1};
    {
      std::vector<Candidate> pairs;
      for (std::size_t i = 0; i < ended.size(); ++i)
        for (std::size_t j = i + 1; j < ended.size(); ++j) {
          const auto& ti = tracks[static_cast<std::size_t>(ended[i])];
          const auto& tj = tracks[static_cast<std::size_t>(ended[j])];
          if (ti.winding != -tj.winding) continue;
          const double d = std::hypot(ti.points.back().x - tj.points.back().x, ti.points.back().y - tj.points.back().y);
          if (d < settings.pair_radius) pairs.push_back({d, static_cast<int>(i), static_cast<int>(j)});
        }
      std::sort(pairs.begin(), pairs.end(), candidate_less);
      std::vector<bool> used(ended.size(), false);
      for (const auto& c : pairs) {
        if (used[static_cast<std::size_t>(c.a)] || used[static_cast<std::size_t>(c.b)]) continue;
        used[static_cast<std::size_t>(c.a)] = used[static_cast<std::size_t>(c.b)] = true;
        auto& ta = tracks[static_cast<std::size_t>(ended[static_cast<std::size_t>(c.a)])];
        auto& tb = tracks[static_cast<std::size_t>(ended[static_cast<std::size_t>(c.b)])];
        ta.death = {EventKind::annihilation, t_mid, tb.id};
        tb.death = {EventKind::annihilation, t_mid, ta.id};
        result.events.push_back({EventKind::annihilation, t_mid, 0.5 * (ta.points.back().x + tb.points.back().x),
                                 0.5 * (ta.points.back().y + tb.points.back().y), std::min(ta.id, tb.id),
                                 std::max(ta.id, tb.id)});
      }
    }

    // Continue matched tracks, open new ones.
    std::vector<int> next_open;
    std::vector<int> born;
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      if (node_track[b] >= 0) {
        tracks[static_cast<std::size_t>(node_track[b])].points.push_back(nodes[b]);
        next_open.push_back(node_track[b]);
      } else {
        VortexTrack tr;
        tr.id = static_cast<int>(tracks.size());
        tr.winding = nodes[b].winding;
        tr.points.push_back(nodes[b]);
        tr.birth = {EventKind::appearance, t_now, -1};
        tracks.push_back(tr);
        next_open.push_back(tr.id);
        born.push_back(tr.id);
      }
    }
    {
      std::vector<Candidate> pairs;
      for (std::size_t i = 0; i < born.size(); ++i)
        for (std::size_t j = i + 1; j < born.size(); ++j) {
          const auto& ti = tracks[static_cast<std::size_t>(born[i])];
          const auto& tj = tracks[static_cast<std::size_t>(born[j])];
          if (ti.winding != -tj.winding) continue;
          const double d = std::hypot(ti.points[0].x - tj.points[0].x, ti.points[0].y - tj.points[0].y);
          if (d < settings.pair_radius) pairs.push_back({d, static_cast<int>(i), static_cast<int>(j)});
        }
      std::sort(pairs.begin(), pairs.end(), candidate_less);
      std::vector<bool> used(born.size(), false);
      for (const auto& c : pairs) {
        if (used[static_cast<std::size_t>(c.a)] || used[static_cast<std::size_t>(c.b)]) continue;
        used[static_cast<std::size_t>(c.a)] = used[static_cast<std::size_t>(c.b)] = true;
        auto& ta = tracks[static_cast<std::size_t>(born[static_cast<std::size_t>(c.a)])];
        auto& tb = tracks[static_cast<std::size_t>(born[static_cast<std::size_t>(c.b)])];
        ta.birth = {EventKind::creation, t_mid, tb.id};
        tb.birth = {EventKind::creation, t_mid, ta.id};
        result.events.push_back({EventKind::creation, t_mid, 0.5 * (ta.points[0].x + tb.points[0].x),
                                 0.5 * (ta.points[0].y + tb.points[0].y), std::min(ta.id, tb.id),
                                 std::max(ta.id, tb.id)});
      }
    }
    std::sort(next_open.begin(), next_open.end());
    open = std::move(next_open);
  }
  for (int id : open) tracks[static_cast<std::size_t>(id)].death = {EventKind::final, frames.back().t, -1};
  return result;
}

int total_winding(const std::vector<NodalPoint>& nodes) {
  int s = 0;
  for (const auto& p : nodes) s += p.winding;
  return s;
}

void write_tracks_csv(std::ostream& os, const TrackResult& result) {
  os << "track_id,t,x,y,winding\n";
  for (const auto& tr : result.tracks)
    for (const auto& p : tr.points)
      os << tr.id << ',' << format_number(p.t) << ',' << format_number(p.x) << ',' << format_number(p.y) << ','
         << p.winding << '\n';
}

void write_events_csv(std::ostream& os, const TrackResult& result) {
  os << "event_type,t,x,y,track_id_a,track_id_b\n";
  for (const auto& e : result.events)
    os << event_name(e.kind) << ',' << format_number(e.t) << ',' << format_number(e.x) << ',' << format_number(e.y)
       << ',' << e.track_a << ',' << e.track_b << '\n';
}

}  // namespace bohm
