#include <algorithm>
#include <cmath>
#include <sstream>

#include "bohm/vortices.hpp"
#include "doctest.h"

using namespace bohm;

namespace {

const GridSpec kGrid{6.0, 127};
const Region kWide{-3.0, 3.0, -3.0, 3.0};

template <class F>
WaveField synthetic(F&& shape, double t = 0.0) {
  WaveField f;
  f.grid = kGrid;
  f.t = t;
  f.values.resize(static_cast<std::size_t>(kGrid.n) * kGrid.n);
  for (int iy = 0; iy < kGrid.n; ++iy)
    for (int ix = 0; ix < kGrid.n; ++ix) {
      const double x = kGrid.coord(ix), y = kGrid.coord(iy);
      f.at(ix, iy) = shape(x, y) * std::exp(-0.5 * (x * x + y * y));
    }
  return f;
}

WaveField vortex(double x0, double y0, int sign) {
  return synthetic([=](double x, double y) { return Complex(x - x0, sign * (y - y0)); });
}

// Re = x^2 - s, Im = y: a +-1 pair at (+-sqrt(s), 0) for s > 0, none for s < 0.
WaveField pair_field(double s, double t) {
  return synthetic([=](double x, double y) { return Complex(x * x - s, y); }, t);
}

std::vector<VortexFrame> pair_movie(double t0, double t1, int frames) {
  std::vector<VortexFrame> out;
  for (int k = 0; k <= frames; ++k) {
    const double t = t0 + (t1 - t0) * k / frames;
    out.push_back({t, find_nodes(pair_field(t - 0.52, t), kWide)});
  }
  return out;
}

}  // namespace

TEST_CASE("a canonical vortex has winding +1 and its conjugate -1") {
  for (int sign : {1, -1}) {
    const auto f = vortex(0.37, -0.21, sign);
    const auto nodes = find_nodes(f, kWide);
    REQUIRE(nodes.size() == 1);
    CHECK(std::abs(nodes[0].x - 0.37) < 1e-5);
    CHECK(std::abs(nodes[0].y + 0.21) < 1e-5);
    CHECK(nodes[0].winding == sign);
    CHECK_FALSE(nodes[0].degenerate);
    CHECK(nodes[0].residual < 1e-8 * peak_amplitude(f));
  }
}

TEST_CASE("region filters nodes") {
  const auto f = vortex(0.37, -0.21, 1);
  CHECK(find_nodes(f, Region{0.5, 2.0, -1.0, 1.0}).empty());
  CHECK(find_nodes(f, Region{0.0, 0.5, -0.5, 0.0}).size() == 1);
}

TEST_CASE("a real field has nodal lines, not points") {
  const PhysParams p = PhysParams::anharmonic(0.1, 1.0);
  CHECK_THROWS_AS(find_nodes(initial_state(default_grid(1.0), p), Region{-2, 3, -2, 3}), DegenerateFieldError);
  // A global phase does not help.
  auto f = initial_state(GridSpec{8.0, 127}, p);
  for (auto& v : f.values) v *= std::polar(1.0, 0.7);
  CHECK_THROWS_AS(find_nodes(f, kWide), DegenerateFieldError);
  // Not real up to a phase, but Re and Im share the nodal line x = -0.3.
  const auto line = synthetic([](double x, double y) { return Complex(x + 0.3, 1e-3 * (x + 0.3) * (y + 0.75)); });
  CHECK_THROWS_AS(find_nodes(line, Region{-1.0, 1.0, -1.0, 1.0}), DegenerateFieldError);
}

TEST_CASE("pair of opposite vortices carries zero net winding") {
  const auto f = synthetic([](double x, double y) { return Complex(x - 0.5, y - 0.2) * Complex(x + 0.6, -(y + 0.1)); });
  const auto nodes = find_nodes(f, kWide);
  REQUIRE(nodes.size() == 2);
  // Sorted by x.
  CHECK(nodes[0].x == doctest::Approx(-0.6));
  CHECK(nodes[0].winding == -1);
  CHECK(nodes[1].x == doctest::Approx(0.5));
  CHECK(nodes[1].winding == 1);
  CHECK(total_winding(nodes) == 0);
  for (const auto& n : nodes) CHECK(n.residual < 1e-8 * peak_amplitude(f));
}

TEST_CASE("close pairs still get unit windings") {
  const double d = 0.6 * kGrid.dx();
  const auto f = synthetic([=](double x, double y) { return Complex(x - d, y) * Complex(x + d, -y); });
  const auto nodes = find_nodes(f, kWide);
  REQUIRE(nodes.size() == 2);
  CHECK(nodes[0].winding == -1);
  CHECK(nodes[1].winding == 1);
}

TEST_CASE("mirror-symmetric fields have mirrored nodes with opposite winding") {
  // Psi(x, y) = Psi(y, x); the node at (a, b) has a partner at (b, a).
  const double a = 0.9, b = -0.4;
  const auto f = synthetic([=](double x, double y) { return Complex(x - a, y - b) * Complex(y - a, x - b); });
  const auto nodes = find_nodes(f, kWide);
  REQUIRE(nodes.size() == 2);
  for (const auto& n : nodes) {
    const auto partner = std::find_if(nodes.begin(), nodes.end(), [&](const NodalPoint& m) {
      return std::hypot(m.x - n.y, m.y - n.x) < 1e-8;
    });
    REQUIRE(partner != nodes.end());
    CHECK(partner->winding == -n.winding);
  }
}

TEST_CASE("a drifting vortex forms one track without events") {
  std::vector<VortexFrame> frames;
  for (int k = 0; k <= 20; ++k) {
    const double t = 0.05 * k;
    frames.push_back({t, find_nodes(vortex(-0.5 + 0.04 * k, 0.3 * std::sin(t), 1), kWide)});
  }
  const auto res = track(frames, TrackSettings::for_grid(kGrid));
  REQUIRE(res.tracks.size() == 1);
  CHECK(res.events.empty());
  const auto& tr = res.tracks[0];
  CHECK(tr.points.size() == 21);
  CHECK(tr.winding == 1);
  CHECK(tr.birth.kind == EventKind::initial);
  CHECK(tr.death.kind == EventKind::final);
}

TEST_CASE("pair creation and its time reverse") {
  const TrackSettings st{0.3, 1.0, false};
  auto frames = pair_movie(0.0, 1.0, 20);
  const auto fwd = track(frames, st);
  REQUIRE(fwd.events.size() == 1);
  const auto& c = fwd.events[0];
  CHECK(c.kind == EventKind::creation);
  CHECK(c.t == doctest::Approx(0.525));
  CHECK(std::abs(c.x) < 1e-8);
  CHECK(std::abs(c.y) < 1e-8);
  REQUIRE(fwd.tracks.size() == 2);
  CHECK(fwd.tracks[0].winding == -fwd.tracks[1].winding);
  CHECK(fwd.tracks[0].birth.partner == fwd.tracks[1].id);
  for (const auto& f : frames) CHECK(total_winding(f.nodes) == 0);

  std::reverse(frames.begin(), frames.end());
  const auto back = track(frames, st);
  REQUIRE(back.events.size() == 1);
  CHECK(back.events[0].kind == EventKind::annihilation);
  CHECK(back.events[0].t == doctest::Approx(c.t));
  CHECK(back.events[0].x == doctest::Approx(c.x));
  CHECK(back.events[0].y == doctest::Approx(c.y));
}

TEST_CASE("distant simultaneous births are not a pair") {
  const TrackSettings st{0.3, 0.2, false};
  const auto res = track(pair_movie(0.4, 1.0, 12), st);
  CHECK(res.events.empty());
  REQUIRE(res.tracks.size() == 2);
  for (const auto& tr : res.tracks) CHECK(tr.birth.kind == EventKind::appearance);
}

TEST_CASE("tied assignments follow the smallest-id rule") {
  const std::vector<VortexFrame> frames{
      {0.0, {{0.0, -0.1, 0.0, 1}, {0.0, 0.1, 0.0, 1}}},
      {0.1, {{0.1, 0.0, 0.0, 1}}},
  };
  const auto res = track(frames, TrackSettings{0.5, 1.0, false});
  CHECK(res.ambiguities.size() == 1);
  REQUIRE(res.tracks.size() == 2);
  CHECK(res.tracks[0].points.size() == 2);
  CHECK(res.tracks[1].points.size() == 1);
  CHECK(res.tracks[1].death.kind == EventKind::disappearance);
  CHECK_THROWS_AS(track(frames, TrackSettings{0.5, 1.0, true}), AmbiguousMatchError);
}

TEST_CASE("winding must match across frames") {
  const std::vector<VortexFrame> frames{
      {0.0, {{0.0, 0.0, 0.0, 1}}},
      {0.1, {{0.1, 0.01, 0.0, -1}}},
  };
  const auto res = track(frames, TrackSettings{0.5, 0.001, false});
  CHECK(res.tracks.size() == 2);
}

TEST_CASE("frames must be monotone in time") {
  const std::vector<VortexFrame> frames{{0.0, {}}, {0.1, {}}, {0.05, {}}};
  CHECK_THROWS_AS(track(frames, TrackSettings{0.5, 1.0, false}), std::invalid_argument);
}

TEST_CASE("csv export") {
  const auto res = track(pair_movie(0.45, 0.65, 4), TrackSettings{0.3, 1.0, false});
  std::ostringstream tracks, events;
  write_tracks_csv(tracks, res);
  write_events_csv(events, res);
  CHECK(tracks.str().rfind("track_id,t,x,y,winding\n", 0) == 0);
  CHECK(events.str().rfind("event_type,t,x,y,track_id_a,track_id_b\n", 0) == 0);
  CHECK(events.str().find("creation,") != std::string::npos);
  CHECK(std::string(event_name(EventKind::annihilation)) == "annihilation");
}
