#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "bohm/chaos.hpp"
#include "doctest.h"

using namespace bohm;

namespace {

Trajectory synthetic(double x0, double y0, int samples, double growth, double dt = 0.1) {
  Trajectory tr;
  tr.x0 = x0;
  tr.y0 = y0;
  for (int k = 0; k < samples; ++k) {
    const double t = k * dt;
    tr.samples.push_back({t, x0 + 1e-3 * std::exp(growth * t), y0, 0.5 * x0, -0.25 * y0});
  }
  return tr;
}

PairSeparation line(std::size_t id, double slope, double intercept, int samples, double noise = 0.0,
                    std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise > 0 ? noise : 1.0);
  PairSeparation p;
  p.id = id;
  for (int k = 0; k < samples; ++k) {
    const double t = 0.5 * k;
    p.t.push_back(t);
    p.ln_xi.push_back(k == 0 ? 0.0 : intercept + slope * t + (noise > 0 ? noise * n(rng) : 0.0));
  }
  return p;
}

const GridSpec kSmallGrid{8.0, 127};

}  // namespace

TEST_CASE("single-point region gives one pair") {
  SeedRegion r;
  r.x = {{1.1, 1.1}};
  r.y = {{1.1, 1.1}};
  const auto pairs = make_pairs(r, 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].base.x == 1.1);
  CHECK(pairs[0].base.y == 1.1);
  CHECK(std::hypot(pairs[0].offset.x, pairs[0].offset.y) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(pairs[0].offset.x == doctest::Approx(1e-4 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(make_pairs(r, 2), std::invalid_argument);
}

TEST_CASE("default lattice over four patches") {
  const auto r = SeedRegion::symmetric(1.1, 1.5);
  const auto pairs = make_pairs(r);
  REQUIRE(pairs.size() == 60);
  std::set<std::pair<double, double>> bases;
  for (const auto& p : pairs) {
    CHECK(r.contains(p.base.x, p.base.y));
    bases.insert({p.base.x, p.base.y});
    CHECK(p.offset.x == p.offset.y);
  }
  CHECK(bases.size() == 60);
  // 8 x 8 lattice (4 points per interval), row-major from the lower left.
  CHECK(pairs[0].base.x == -1.5);
  CHECK(pairs[0].base.y == -1.5);
  CHECK(pairs[7].base.x == 1.5);
  CHECK(pairs[8].base.y == doctest::Approx(-1.5 + 0.4 / 3));
  const auto again = make_pairs(r);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(again[i].base.x == pairs[i].base.x);
    CHECK(again[i].base.y == pairs[i].base.y);
  }
  CHECK_THROWS_AS(make_pairs(r, 60, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_pairs(r, 0), std::invalid_argument);
}

TEST_CASE("separation of a pair") {
  const auto a = synthetic(1.0, 0.5, 50, 0.3);
  const auto b = synthetic(1.0001, 0.5, 50, 0.31);
  const auto s = separation(a, b, 4);
  CHECK(s.id == 4);
  REQUIRE(s.ln_xi.size() == 50);
  CHECK(s.ln_xi[0] == 0.0);
  CHECK_FALSE(s.truncated);
  // Relabelling the members changes nothing.
  const auto r = separation(b, a, 4);
  for (std::size_t k = 0; k < s.ln_xi.size(); ++k) CHECK(r.ln_xi[k] == s.ln_xi[k]);
  CHECK_THROWS_AS(separation(a, a), ZeroInitialSeparation);

  auto c = b;
  c.samples.resize(20);
  c.status = TrajectoryStatus::node_proximity;
  const auto cut = separation(a, c);
  CHECK(cut.truncated);
  CHECK(cut.ln_xi.size() == 20);

  auto d = b;
  for (auto& st : d.samples) st.t *= 2;
  CHECK_THROWS_AS(separation(a, d), std::invalid_argument);
}

TEST_CASE("separation in a stationary field stays zero") {
  const auto f = sample_eigenstate(kSmallGrid, PhysParams{}, 0, 0);
  auto s = std::make_shared<SnapshotSeries>();
  s->grid = f.grid;
  s->params = f.params;
  s->dt_snap = 0.01;
  s->snapshots = {f, f};
  s->snapshots[1].t = 0.01;
  // Ground state: Psi(t) = exp(-i t) psi00.
  for (auto& v : s->snapshots[1].values) v *= std::polar(1.0, -0.01);
  const FieldInterpolant in(s, false);
  IntegratorSettings st;
  st.out_every = 50;
  InterpolantFrameStream frames(in, 0);
  const auto seps = integrate_pairs(frames, make_pairs(SeedRegion::symmetric(0.5, 1.0), 4), 0.01, st);
  REQUIRE(seps.size() == 4);
  for (const auto& p : seps) {
    CHECK(p.id < 4);
    REQUIRE(p.ln_xi.size() == 21);
    for (double v : p.ln_xi) CHECK(std::abs(v) < 1e-8);
  }
}

TEST_CASE("ensemble mean") {
  SUBCASE("identical series") {
    const auto p = line(0, 0.2, 0.1, 40);
    auto q = p;
    q.id = 1;
    const auto s = ensemble_mean({p, q, p}, 19.5);
    REQUIRE(s.mean_ln_xi.size() == p.ln_xi.size());
    for (std::size_t k = 0; k < p.ln_xi.size(); ++k) CHECK(s.mean_ln_xi[k] == doctest::Approx(p.ln_xi[k]).epsilon(1e-15));
    CHECK(s.n_effective.front() == 3);
    CHECK(s.mean_ln_xi[0] == 0.0);
  }

  SUBCASE("pair order does not matter") {
    std::vector<PairSeparation> pairs;
    for (std::size_t i = 0; i < 30; ++i) pairs.push_back(line(i, 0.1 + 0.01 * i, -0.3, 60, 0.2, i + 1));
    const auto ref = ensemble_mean(pairs, 29.5);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
      std::shuffle(pairs.begin(), pairs.end(), rng);
      const auto s = ensemble_mean(pairs, 29.5);
      for (std::size_t k = 0; k < s.t.size(); ++k) CHECK(s.mean_ln_xi[k] == ref.mean_ln_xi[k]);
    }
  }

  SUBCASE("early truncation excludes a pair, late truncation shortens it") {
    auto early = line(0, 1.0, 0.0, 10);
    early.truncated = true;
    auto late = line(1, 1.0, 0.0, 35);
    late.truncated = true;
    const auto full = line(2, 0.0, 0.0, 40);
    const auto full2 = line(3, 0.0, 0.0, 40);
    const auto s = ensemble_mean({early, late, full, full2}, 19.5);
    CHECK(s.excluded == std::vector<std::size_t>{0});
    CHECK_FALSE(s.included(s.pairs[0]));
    CHECK(s.included(s.pairs[1]));
    REQUIRE(s.t.size() == 40);
    CHECK(s.n_effective[34] == 3);
    CHECK(s.n_effective[35] == 2);
    CHECK(s.mean_ln_xi[34] == doctest::Approx(17.0 / 3));
    CHECK(s.mean_ln_xi[36] == 0.0);
  }

  SUBCASE("preconditions") {
    CHECK_THROWS_AS(ensemble_mean({line(0, 1, 0, 20)}, 9.5), std::invalid_argument);
    auto p = line(0, 1, 0, 20);
    auto q = line(1, 1, 0, 20);
    for (auto& t : q.t) t *= 1.5;
    CHECK_THROWS_AS(ensemble_mean({p, q}, 9.5), std::invalid_argument);
  }
}

TEST_CASE("slope fit") {
  const auto s = ensemble_mean({line(0, 0.25, 0.5, 101), line(1, 0.35, -0.5, 101)}, 50.0);
  const auto f = fit_slope(s);
  CHECK(f.t_begin == doctest::Approx(10.0));
  CHECK(f.t_end == doctest::Approx(50.0));
  CHECK(f.samples == 81);
  CHECK(f.slope == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(f.residual < 1e-20);
  CHECK(fit_slope(s, 20.0, 24.5).samples == 10);
}

TEST_CASE("slope fit preconditions") {
  const auto s = ensemble_mean({line(0, 0.25, 0.5, 101), line(1, 0.35, -0.5, 101)}, 50.0);
  CHECK_THROWS_AS(fit_slope(s, 20.0, 23.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_slope(s, 40.0, 60.0), std::invalid_argument);
  CHECK_THROWS_AS(fit_slope(s, 30.0, 10.0), std::invalid_argument);
}

TEST_CASE("bootstrap interval") {
  std::vector<PairSeparation> pairs;
  for (std::size_t i = 0; i < 60; ++i) pairs.push_back(line(i, 0.2 + 0.05 * std::sin(1.0 + i), 0.0, 101, 0.5, 100 + i));
  const auto s = ensemble_mean(pairs, 50.0);
  auto f = fit_slope(s);
  bootstrap_slope(s, f);
  CHECK(f.has_interval);
  CHECK(f.ci_low < f.slope);
  CHECK(f.ci_high > f.slope);
  CHECK(f.ci_low > 0.0);
  CHECK(f.ci_low < 0.2);
  CHECK(f.ci_high > 0.2);
  auto again = fit_slope(s);
  bootstrap_slope(s, again);
  CHECK(again.ci_low == f.ci_low);
  CHECK(again.ci_high == f.ci_high);

  // No trend: the interval straddles zero.
  std::vector<PairSeparation> flat;
  for (std::size_t i = 0; i < 60; ++i) flat.push_back(line(i, 0.0, 0.0, 101, 0.5, 500 + i));
  const auto z = ensemble_mean(flat, 50.0);
  auto fz = fit_slope(z);
  bootstrap_slope(z, fz);
  CHECK(fz.ci_low < 0.0);
  CHECK(fz.ci_high > 0.0);
}

TEST_CASE("mirrored ensembles give the same mean") {
  const auto f = initial_state(kSmallGrid, PhysParams::anharmonic(1.0, 1.0));
  const FieldInterpolant in(std::make_shared<SnapshotSeries>(evolve(f, 2.0, 1e-2, 1e-2)), false);
  IntegratorSettings st;
  st.dt = 1e-4;
  st.out_every = 100;
  auto pairs = make_pairs(SeedRegion::symmetric(1.1, 1.5), 6);
  std::vector<PairSpec> mirrored;
  for (const auto& p : pairs) mirrored.push_back({{p.base.y, p.base.x}, {p.offset.y, p.offset.x}});
  InterpolantFrameStream s1(in, 0), s2(in, 0);
  const auto a = ensemble_mean(integrate_pairs(s1, pairs, 2.0, st), 2.0);
  const auto b = ensemble_mean(integrate_pairs(s2, mirrored, 2.0, st), 2.0);
  REQUIRE(a.t.size() == b.t.size());
  for (std::size_t k = 0; k < a.t.size(); ++k) CHECK(std::abs(a.mean_ln_xi[k] - b.mean_ln_xi[k]) < 1e-6);
  CHECK(std::abs(a.mean_ln_xi.back()) > 1e-3);
}

TEST_CASE("csv export") {
  const auto s = ensemble_mean({line(0, 0.25, 0.5, 3), line(1, 0.75, -0.5, 3)}, 1.0);
  std::ostringstream m, p;
  write_mean_csv(m, s);
  write_pairs_csv(p, s);
  CHECK(m.str() == "t,mean_ln_xi,n_effective\n0,0,2\n0.5,0.25,2\n1,0.5,2\n");
  CHECK(p.str().rfind("pair_id,t,ln_xi\n0,0,0\n0,0.5,0.625\n", 0) == 0);
}
