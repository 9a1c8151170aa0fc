#include <cmath>
#include <filesystem>
#include <sstream>

#include "bohm/app/io.hpp"
#include "bohm/app/runs.hpp"
#include "bohm/app/svg.hpp"
#include "doctest.h"

using namespace bohm;
using namespace bohm::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bohm_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_with(Command c, const fs::path& out, std::vector<std::string> overrides,
             std::optional<std::string> preset = "base", int jobs = 1) {
  RunOptions o;
  o.preset = std::move(preset);
  o.out = out;
  o.jobs = jobs;
  o.overrides = std::move(overrides);
  std::ostringstream log;
  const int code = run(c, o, log);
  if (code != 0) MESSAGE(log.str());
  return code;
}

// Small, quick grid for the pipeline tests.
const std::vector<std::string> kSmall = {"grid.half_width=8", "grid.n=127"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("config text parses with sections, qualifiers and comments") {
  const Config c = Config::parse(R"(
# comment
[physics]
kappa = 0.5   ; trailing
hbar = 1
[grid@hbar=0.05]
half_width = 3
)");
  CHECK(c.get("physics.kappa") == "0.5");
  CHECK_FALSE(c.get("grid.half_width", 1.0, 1.0).has_value());
  CHECK(c.get("grid.half_width", 1.0, 0.05) == "3");
  const Config again = Config::parse(c.dump());
  CHECK(again.dump() == c.dump());
}

TEST_CASE("unknown keys and sections are configuration errors") {
  CHECK_THROWS_AS(Config::parse("[physics]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[nowhere]\nkappa = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::preset("fig9"), ConfigError);
  const auto dir = scratch("unknown");
  CHECK(run_with(Command::evolve, dir, {"physics.bogus=1"}) == kExitConfig);
  CHECK(run_with(Command::evolve, dir, {}, "nope") == kExitConfig);
  CHECK(run_with(Command::evolve, dir, {"physics.hbar=-1"}) == kExitConfig);
}

TEST_CASE("presets pin the reference parameters") {
  for (const auto& name : Config::preset_names()) {
    const Config c = Config().resolved(name);
    for (const auto& p : sweep_points(c)) {
      const RunConfig rc = make_run_config(c, p);
      CHECK(rc.params.reference_couplings());
      CHECK(rc.params.mass == 1.0);
      CHECK(rc.trajectories.integrator.dt == doctest::Approx(1e-5));
      CHECK(rc.chaos.epsilon == doctest::Approx(1e-4));
      CHECK(rc.chaos.count == 60);
    }
  }
  const Config fig4r = Config().resolved("fig4R");
  const auto points = sweep_points(fig4r);
  REQUIRE(points.size() == 3);
  CHECK(points[0].label == "kappa_1_hbar_0.05");
  CHECK(make_run_config(fig4r, points[0]).grid.half_width == 3.0);
  CHECK(make_run_config(fig4r, points[2]).grid.half_width == 8.0);
  CHECK(sweep_points(Config().resolved("fig4L")).size() == 4);
  const RunConfig fig3 = make_run_config(Config().resolved("fig3"), sweep_points(Config().resolved("fig3"))[1]);
  REQUIRE(fig3.trajectories.seeds.size() == 4);
  CHECK(fig3.trajectories.seeds[1].x == 0.5);
  CHECK(fig3.trajectories.seeds[1].y == 1.4);
}

TEST_CASE("snapshot files round-trip bit for bit and reject damage") {
  const auto dir = scratch("snapfile");
  SnapshotSeries s;
  s.grid = {8.0, 31};
  s.params = PhysParams::anharmonic(1.0, 1.0);
  s.dt_snap = 0.5;
  for (int k = 0; k < 3; ++k) {
    WaveField f = initial_state(s.grid, s.params);
    f.t = 0.5 * k;
    for (auto& v : f.values) v *= std::polar(1.0, 0.3 * k);
    s.snapshots.push_back(f);
  }
  write_snapshots(dir / "a.bin", s);
  const SnapshotSeries r = read_snapshots(dir / "a.bin");
  CHECK(r.grid == s.grid);
  CHECK(r.params.kappa == 1.0);
  CHECK(r.dt_snap == 0.5);
  REQUIRE(r.snapshots.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(r.snapshots[k].t == s.snapshots[k].t);
    CHECK(r.snapshots[k].values == s.snapshots[k].values);
  }

  const std::string bytes = read_text(dir / "a.bin");
  write_text(dir / "short.bin", bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(read_snapshots(dir / "short.bin"), SchemaError);
  std::string bad = bytes;
  bad[0] = 'X';
  write_text(dir / "bad.bin", bad);
  CHECK_THROWS_AS(read_snapshots(dir / "bad.bin"), SchemaError);
  CHECK_THROWS_AS(read_snapshots(dir / "missing.bin"), IoError);
}

TEST_CASE("evolve with t_end = 0 stores only the initial snapshot") {
  const auto dir = scratch("evolve0");
  REQUIRE(run_with(Command::evolve, dir, with(kSmall, {"solver.t_end=0"})) == kExitOk);
  const SnapshotSeries s = read_snapshots(dir / "snapshots.bin");
  REQUIRE(s.snapshots.size() == 1);
  CHECK(s.snapshots[0].values == initial_state(s.grid, s.params).values);
  const Manifest m = Manifest::read(dir / "manifest.txt");
  CHECK(m.find("status") == "ok");
  CHECK(m.find("output.snapshots.bin.sha256") == sha256_file(dir / "snapshots.bin"));
  CHECK(m.find("config_sha256") == sha256_file(dir / "config.effective"));
  const auto history = read_csv(dir / "history.csv", "t,norm,energy");
  CHECK(history.size() == 1);
}

TEST_CASE("a domain too small for the packet is a numerical failure") {
  const auto dir = scratch("tiny");
  CHECK(run_with(Command::evolve, dir, {"grid.half_width=3", "grid.n=63", "solver.t_end=1"}) == kExitNumerical);
  const Manifest m = Manifest::read(dir / "manifest.txt");
  CHECK(m.find("status") == "failed");
  CHECK(m.find("error").find("boundary") != std::string::npos);
}

TEST_CASE("unwritable output is an i/o failure") {
  const auto dir = scratch("io");
  write_text(dir / "file", "x");
  CHECK(run_with(Command::evolve, dir / "file" / "sub", with(kSmall, {"solver.t_end=0"})) == kExitIo);
}

TEST_CASE("trajectories from a snapshot file chain its manifest and rerun byte-identically") {
  const auto dir = scratch("traj");
  REQUIRE(run_with(Command::evolve, dir / "evolve",
                   with(kSmall, {"solver.t_end=0.2", "solver.dt_snap=0.01", "solver.history_every=0.01"})) ==
          kExitOk);
  const std::vector<std::string> traj = with(
      kSmall, {"solver.snapshots=" + (dir / "evolve" / "snapshots.bin").string(),
               "trajectories.seeds=1.4:0.5, 0.5:1.4", "trajectories.t_end=0.2", "trajectories.dt=1e-4",
               "trajectories.out_every=100"});
  REQUIRE(run_with(Command::traj, dir / "a", traj) == kExitOk);
  REQUIRE(run_with(Command::traj, dir / "b", traj) == kExitOk);
  for (const char* f : {"traj_0.csv", "traj_1.csv", "config.effective"})
    CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));
  const Manifest m = Manifest::read(dir / "a" / "manifest.txt");
  CHECK(m.find("parent_manifest_sha256") == sha256_file(dir / "evolve" / "snapshots.manifest"));
  CHECK(m.find("snapshot_sha256") == sha256_file(dir / "evolve" / "snapshots.bin"));
  CHECK(read_csv(dir / "a" / "traj_0.csv", "t,x,y,px,py,flag").size() == 21);

  // The effective config alone reproduces the run.
  RunOptions again;
  again.config = dir / "a" / "config.effective";
  again.out = dir / "c";
  std::ostringstream log;
  REQUIRE(run(Command::traj, again, log) == kExitOk);
  CHECK(read_text(dir / "a" / "traj_0.csv") == read_text(dir / "c" / "traj_0.csv"));
  CHECK(read_text(dir / "a" / "manifest.txt") == read_text(dir / "c" / "manifest.txt"));

  // Parameters that disagree with the file are rejected.
  CHECK(run_with(Command::traj, dir / "d", with(traj, {"physics.kappa=0.5"})) == kExitConfig);
}

TEST_CASE("a sweep writes one directory per point and is independent of --jobs") {
  const auto dir = scratch("sweep");
  const std::vector<std::string> o =
      with(kSmall, {"sweep.kappa=0, 1", "trajectories.seeds=1.4:0.5", "trajectories.t_end=0.1",
                    "trajectories.dt=1e-4", "trajectories.out_every=100"});
  REQUIRE(run_with(Command::traj, dir / "serial", o, "base", 1) == kExitOk);
  REQUIRE(run_with(Command::traj, dir / "parallel", o, "base", 2) == kExitOk);
  for (const char* point : {"kappa_0_hbar_1", "kappa_1_hbar_1"})
    for (const char* f : {"traj_0.csv", "manifest.txt"})
      CHECK(read_text(dir / "serial" / point / f) == read_text(dir / "parallel" / point / f));
  CHECK(read_text(dir / "serial" / "kappa_0_hbar_1" / "traj_0.csv") !=
        read_text(dir / "serial" / "kappa_1_hbar_1" / "traj_0.csv"));
}

TEST_CASE("chaos runs are byte-deterministic and report the fit") {
  const auto dir = scratch("chaos");
  const std::vector<std::string> o =
      with(kSmall, {"chaos.x_intervals=-1.5:-1.1, 1.1:1.5", "chaos.count=4", "chaos.t_end=1", "chaos.dt=1e-3",
                    "chaos.out_every=10", "chaos.bootstrap=50"});
  REQUIRE(run_with(Command::chaos, dir / "a", o) == kExitOk);
  REQUIRE(run_with(Command::chaos, dir / "b", o) == kExitOk);
  for (const char* f : {"mean.csv", "pairs.csv", "seeds.csv", "manifest.txt"})
    CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));
  const auto mean = read_csv(dir / "a" / "mean.csv", "t,mean_ln_xi,n_effective");
  REQUIRE(mean.size() == 101);
  CHECK(mean[0][1] == "0");
  const Manifest m = Manifest::read(dir / "a" / "manifest.txt");
  CHECK_FALSE(m.find("fit.slope").empty());
  CHECK_FALSE(m.find("fit.ci95_low").empty());
  CHECK(m.find("pairs.excluded") == "none");
}

TEST_CASE("vortex runs record degenerate frames and write the CSV tables") {
  const auto dir = scratch("vortex");
  REQUIRE(run_with(Command::vortex, dir, with(kSmall, {"vortices.t_begin=0", "vortices.t_end=0.03"}), "fig2") ==
          kExitOk);
  const Manifest m = Manifest::read(dir / "manifest.txt");
  CHECK(m.find("frames.degenerate") == "1");
  CHECK_FALSE(m.find("warning.frame.0").empty());
  CHECK_NOTHROW(read_csv(dir / "tracks.csv", "track_id,t,x,y,winding"));
  CHECK_NOTHROW(read_csv(dir / "events.csv", "event_type,t,x,y,track_id_a,track_id_b"));
  CHECK_NOTHROW(read_csv(dir / "nodes.csv", "t,x,y,winding,residual"));
}

TEST_CASE("density plot of the initial state is symmetric about y = x") {
  const GridSpec g{8.0, 127};
  const WaveField f = initial_state(g, PhysParams::anharmonic(1.0, 1.0));
  WaveField swapped = f;
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) swapped.at(ix, iy) = f.at(iy, ix);
  const std::string svg = density_svg(f, "t = 0");
  CHECK(svg == density_svg(swapped, "t = 0"));
  CHECK(svg == density_svg(f, "t = 0"));
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("quiver plot around a vortex circulates") {
  const GridSpec g{8.0, 127};
  WaveField f;
  f.grid = g;
  f.params = PhysParams::anharmonic(0.0, 1.0);
  f.values.resize(static_cast<std::size_t>(g.n) * g.n);
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) {
      const double x = g.coord(ix) - 0.3, y = g.coord(iy) + 0.2;
      f.at(ix, iy) = Complex(x, y) * std::exp(-0.5 * (x * x + y * y));
    }
  FrameBuilder builder(g, f.params, false, false);
  const auto frame = builder.build(f);
  const FrameWindow w(frame, frame);
  const Region region{-0.7, 1.3, -1.2, 0.8};
  const auto arrows = quiver_arrows(w, 0.0, region, 12);
  REQUIRE(arrows.size() >= 100);
  for (const auto& a : arrows) CHECK((a.x - 0.3) * a.vy - (a.y + 0.2) * a.vx > 0.0);
  const std::string svg = quiver_svg(arrows, region, "vortex");
  CHECK(svg == quiver_svg(arrows, region, "vortex"));
  CHECK(svg.find("<path") != std::string::npos);
}

TEST_CASE("mean log separation plot has one labelled line per series") {
  const auto dir = scratch("plot");
  write_text(dir / "a.csv", "t,mean_ln_xi,n_effective\n0,0,60\n1,0.5,60\n2,1.1,60\n");
  write_text(dir / "b.csv", "t,mean_ln_xi,n_effective\n0,0,60\n1,0.1,60\n2,0.15,59\n");
  REQUIRE(run_with(Command::plot, dir / "out",
                   {"plot.kind=lnxi", "plot.inputs=" + (dir / "a.csv").string() + "," + (dir / "b.csv").string(),
                    "plot.labels=kappa = 1,kappa = 0"}) == kExitOk);
  const std::string svg = read_text(dir / "out" / "plot.svg");
  std::size_t lines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++lines;
  CHECK(lines == 2);
  CHECK(svg.find(">kappa = 1<") != std::string::npos);
  CHECK(svg.find(">kappa = 0<") != std::string::npos);

  REQUIRE(run_with(Command::plot, dir / "again",
                   {"plot.kind=lnxi", "plot.inputs=" + (dir / "a.csv").string() + "," + (dir / "b.csv").string(),
                    "plot.labels=kappa = 1,kappa = 0"}) == kExitOk);
  CHECK(read_text(dir / "again" / "plot.svg") == svg);

  // A trajectory plot fed a mean file is a schema mismatch.
  CHECK(run_with(Command::plot, dir / "wrong", {"plot.kind=trajectory", "plot.inputs=" + (dir / "a.csv").string()}) ==
        kExitConfig);
}
