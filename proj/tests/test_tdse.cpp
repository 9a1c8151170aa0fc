#include <cmath>
#include <numbers>

#include "bohm/tdse.hpp"
#include "doctest.h"

using namespace bohm;

namespace {

double l2_distance(const WaveField& a, const WaveField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::norm(a.values[i] - b.values[i]);
  return std::sqrt(s) * a.grid.dx();
}

const GridSpec kSmallGrid{8.0, 127};

}  // namespace

TEST_CASE("norm of the initial state") {
  const auto f = initial_state(default_grid(1.0), PhysParams::anharmonic(1.0, 1.0));
  CHECK(std::abs(norm(f) - 1.0) < 1e-6);
}

TEST_CASE("step is unitary to roundoff") {
  auto f = initial_state(kSmallGrid, PhysParams::anharmonic(1.0, 1.0));
  const double n0 = norm(f);
  for (double dt : {1e-3, 1e-2, 0.1}) {
    const auto g = step(f, dt);
    CHECK(std::abs(norm(g) - n0) < 1e-12);
    CHECK(g.t == doctest::Approx(f.t + dt));
  }
  CHECK_THROWS_AS(step(f, 0.0), std::invalid_argument);
}

TEST_CASE("ground state of the harmonic oscillator is stationary in modulus") {
  PhysParams harmonic;
  const auto f = sample_eigenstate(kSmallGrid, harmonic, 0, 0);
  SplitStepPropagator prop(kSmallGrid, harmonic);
  ComplexBuffer psi(f.values.begin(), f.values.end());
  // The split-step map has its own stationary state, off from psi00 by
  // O(dt^2); dt = 4e-4 keeps that below 1e-8.
  for (int k = 0; k < 1000; ++k) prop.step(psi, 4e-4);
  double worst = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) worst = std::max(worst, std::abs(std::abs(psi[i]) - std::abs(f.values[i])));
  CHECK(worst < 1e-8);
  // Global phase exp(-i E00 t / hbar) with E00 = 1 at t = 0.4.
  const std::size_t centre = static_cast<std::size_t>(63) * 127 + 63;
  CHECK(std::arg(psi[centre] / f.values[centre]) == doctest::Approx(-0.4).epsilon(1e-6));
}

TEST_CASE("energy of the harmonic ground state") {
  PhysParams harmonic;
  const auto f = sample_eigenstate(default_grid(1.0), harmonic, 0, 0);
  CHECK(std::abs(energy(f) - 1.0) < 1e-4);
  // E11 = 3 hbar
  PhysParams h2;
  h2.hbar = 0.5;
  CHECK(std::abs(energy(sample_eigenstate(kSmallGrid, h2, 1, 1)) - 1.5) < 1e-4);
}

TEST_CASE("Strang splitting converges at second order") {
  const auto p = PhysParams::anharmonic(1.0, 1.0);
  const auto f = initial_state(GridSpec{8.0, 63}, p);
  auto run = [&](int steps) {
    SplitStepPropagator prop(f.grid, p);
    ComplexBuffer psi(f.values.begin(), f.values.end());
    for (int k = 0; k < steps; ++k) prop.step(psi, 0.5 / steps);
    WaveField out = f;
    out.values.assign(psi.begin(), psi.end());
    return out;
  };
  const auto ref = run(2560);
  const double e1 = l2_distance(run(20), ref);
  const double e2 = l2_distance(run(40), ref);
  const double e3 = l2_distance(run(80), ref);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("evolve to the start time yields the input only") {
  const auto f = initial_state(kSmallGrid, PhysParams::anharmonic(1.0, 1.0));
  const auto s = evolve(f, 0.0, 0.1, 1e-2);
  REQUIRE(s.snapshots.size() == 1);
  CHECK(s.snapshots[0].values == f.values);
  CHECK(s.snapshots[0].t == 0.0);
  REQUIRE(s.history.size() == 1);
  CHECK(s.history[0].norm == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("harmonic superposition revives at t = 2 pi") {
  PhysParams harmonic;
  const auto f = initial_state(kSmallGrid, harmonic);
  const double period = 2.0 * std::numbers::pi;
  const auto s = evolve(f, period, period / 4.0, period / 640.0);
  REQUIRE(s.snapshots.size() == 5);
  CHECK(l2_distance(s.snapshots.back(), f) < 1e-4);
  // Half period: every component has picked up the same phase pattern, the
  // state is not equal to the initial one.
  CHECK(l2_distance(s.snapshots[2], f) > 0.1);
}

TEST_CASE("adaptive stepping respects its ladder and tolerance") {
  const auto f = initial_state(kSmallGrid, PhysParams::anharmonic(1.0, 1.0));
  SolverSettings settings;
  const auto s = evolve(f, 1.0, 0.25, 1e-2, settings);
  REQUIRE(s.snapshots.size() == 5);
  for (std::size_t k = 0; k < s.snapshots.size(); ++k) {
    CHECK(s.snapshots[k].t == doctest::Approx(0.25 * k).epsilon(1e-12));
    CHECK(std::abs(s.history[k].norm - 1.0) < 1e-9);
  }
  CHECK(s.stats.accepted > 0);
  CHECK(s.stats.forced == 0);
  CHECK(s.stats.max_error <= settings.tol_step);
  CHECK(s.stats.dt_smallest >= settings.dt_min);
  CHECK(s.stats.dt_largest <= settings.dt_max);
}

TEST_CASE("transpose symmetry is preserved by the propagator") {
  const auto f = initial_state(kSmallGrid, PhysParams::anharmonic(1.0, 1.0));
  const auto s = evolve(f, 2.0, 1.0, 1e-2);
  for (const auto& snap : s.snapshots) {
    double worst = 0.0;
    for (int iy = 0; iy < snap.grid.n; ++iy)
      for (int ix = 0; ix < iy; ++ix) worst = std::max(worst, std::abs(snap.at(ix, iy) - snap.at(iy, ix)));
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("energy is conserved over a short run") {
  const auto f = initial_state(kSmallGrid, PhysParams::anharmonic(1.0, 1.0));
  const auto s = evolve(f, 5.0, 1.0, 1e-2);
  const double e0 = s.history.front().energy;
  for (const auto& h : s.history) CHECK(std::abs(h.energy - e0) / std::abs(e0) < 1e-4);
}

TEST_CASE("norm drift is reported") {
  auto f = initial_state(kSmallGrid, PhysParams::anharmonic(1.0, 1.0));
  for (auto& v : f.values) v *= 1.01;
  CHECK_THROWS_AS(evolve(f, 0.1, 0.1, 1e-2), NormDriftError);
}

TEST_CASE("a packet pushed into the wall raises BoundaryLeakError") {
  // Ground state displaced to x = 1 with momentum 6 towards +x.
  const GridSpec grid{6.5, 127};
  PhysParams p;
  auto f = sample_eigenstate(grid, p, 0, 0);
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = 0; ix < grid.n; ++ix) {
      const double x = grid.coord(ix), y = grid.coord(iy);
      f.at(ix, iy) = eigenstate(0, 0, 1.0, x - 1.0, y) * std::polar(1.0, 6.0 * x);
    }
  CHECK_THROWS_AS(evolve(f, 2.0, 0.1, 1e-2), BoundaryLeakError);
}

TEST_CASE("invalid evolution requests") {
  const auto f = initial_state(kSmallGrid, PhysParams::anharmonic(1.0, 1.0));
  CHECK_THROWS_AS(evolve(f, 1.0, 0.015, 1e-2), std::invalid_argument);
  CHECK_THROWS_AS(evolve(f, 1.05, 0.1, 1e-2), std::invalid_argument);
  CHECK_THROWS_AS(evolve(f, -1.0, 0.1, 1e-2), std::invalid_argument);
  Evolver ev(f, SolverSettings{});
  CHECK_THROWS_AS(ev.advance_to(1e-7), std::invalid_argument);
  ev.advance_to(0.02);
  CHECK_THROWS_AS(ev.advance_to(0.01), std::invalid_argument);
}
