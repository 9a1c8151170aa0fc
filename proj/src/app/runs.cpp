#include "bohm/app/runs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "bohm/app/io.hpp"
#include "bohm/app/svg.hpp"

namespace bohm::app {

namespace {

namespace fs = std::filesystem;

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

struct Context {
  const RunConfig& rc;
  fs::path dir;
  Manifest& manifest;
  std::ostream& log;
  std::mutex& log_mutex;
  std::vector<std::string> outputs;

  void say(const std::string& line) {
    std::lock_guard lock(log_mutex);
    log << rc.point.label << ": " << line << '\n';
  }

  /// Writes a text output and records it for the manifest hash list.
  void emit(const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    outputs.push_back(name);
  }
};

void add_params(Manifest& m, const RunConfig& rc) {
  const auto& p = rc.params;
  m.add("physics.mass", p.mass);
  m.add("physics.omega_x", p.omega_x);
  m.add("physics.omega_y", p.omega_y);
  m.add("physics.kappa", p.kappa);
  m.add("physics.alpha", p.alpha);
  m.add("physics.beta", p.beta);
  m.add("physics.hbar", p.hbar);
  m.add("grid.half_width", rc.grid.half_width);
  m.add("grid.n", std::to_string(rc.grid.n));
  m.add("grid.dx", rc.grid.dx());
  const auto& s = rc.solver;
  m.add("solver.dt_max", s.dt_max);
  m.add("solver.dt_min", s.dt_min);
  m.add("solver.tol_step", s.tol_step);
  m.add("solver.norm_tolerance", s.norm_tolerance);
  m.add("solver.leak_threshold", s.leak_threshold);
}

void add_stats(Manifest& m, const StepStats& s) {
  m.add("steps.accepted", std::to_string(s.accepted));
  m.add("steps.rejected", std::to_string(s.rejected));
  m.add("steps.forced", std::to_string(s.forced));
  m.add("steps.dt_smallest", s.dt_smallest);
  m.add("steps.dt_largest", s.dt_largest);
  m.add("steps.max_error", s.max_error);
}

void add_integrator(Manifest& m, const std::string& prefix, const IntegratorSettings& s) {
  m.add(prefix + ".dt", s.dt);
  m.add(prefix + ".out_every", std::to_string(s.out_every));
  m.add(prefix + ".adaptive", s.adaptive ? "true" : "false");
  if (s.adaptive) {
    m.add(prefix + ".rtol", s.rtol);
    m.add(prefix + ".atol", s.atol);
  }
  m.add(prefix + ".threads", std::to_string(s.threads));
}

std::string csv_text(const std::function<void(std::ostream&)>& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

/// Reads a snapshot file given in the config and checks it belongs to this
/// sweep point.
std::shared_ptr<const SnapshotSeries> load_series(Context& cx) {
  const fs::path path = cx.rc.snapshots;
  auto series = std::make_shared<SnapshotSeries>(read_snapshots(path));
  const auto& p = series->params;
  const auto& q = cx.rc.params;
  if (p.mass != q.mass || p.omega_x != q.omega_x || p.omega_y != q.omega_y || p.kappa != q.kappa ||
      p.alpha != q.alpha || p.beta != q.beta || p.hbar != q.hbar)
    throw SchemaError(path.string() + ": physical parameters differ from the configuration");
  if (series->snapshots.empty()) throw SchemaError(path.string() + ": no snapshots");
  cx.manifest.add("snapshot_source", path.string());
  cx.manifest.add("snapshot_sha256", sha256_file(path));
  const fs::path sidecar = fs::path(path).replace_extension(".manifest");
  if (fs::exists(sidecar)) cx.manifest.add("parent_manifest_sha256", sha256_file(sidecar));
  return series;
}

std::size_t snapshot_index(const SnapshotSeries& s, double t, const std::string& what) {
  for (std::size_t k = 0; k < s.snapshots.size(); ++k)
    if (same_time(s.snapshots[k].t, t)) return k;
  throw SchemaError("snapshot file has no snapshot at " + what + " = " + format_number(t));
}

struct StreamSource {
  std::shared_ptr<const SnapshotSeries> series;
  std::unique_ptr<FrameStream> stream;
  const EvolvingFrameStream* evolving = nullptr;
};

/// Frames from t_begin to t_end, read from the snapshot file or produced by
/// the solver as they are needed.
StreamSource open_stream(Context& cx, double t_begin, double t_end, bool with_laplacian) {
  StreamSource src;
  const auto& rc = cx.rc;
  if (!rc.snapshots.empty()) {
    src.series = load_series(cx);
    const std::size_t first = snapshot_index(*src.series, t_begin, "t_begin");
    if (src.series->snapshots.back().t < t_end - 1e-9 * std::max(1.0, t_end))
      throw SchemaError("snapshot file ends at t = " + format_number(src.series->snapshots.back().t) +
                        " before t_end = " + format_number(t_end));
    src.stream = std::make_unique<SeriesFrameStream>(src.series, with_laplacian, first);
    return src;
  }
  cx.manifest.add("snapshot_source", "inline");
  cx.manifest.add("solver.frame_interval", rc.trajectory_dt_snap);
  WaveField start = initial_state(rc.grid, rc.params);
  if (t_begin > 0) {
    Evolver ev(start, rc.solver);
    ev.advance_to(t_begin);
    start = ev.state();
    start.t = t_begin;
  }
  auto stream = std::make_unique<EvolvingFrameStream>(start, t_end, rc.trajectory_dt_snap, rc.solver, with_laplacian);
  src.evolving = stream.get();
  src.stream = std::move(stream);
  return src;
}

void run_evolve(Context& cx) {
  const auto& rc = cx.rc;
  const auto intervals = snapshot_intervals(0.0, rc.t_end, rc.dt_snap, rc.solver.dt_max);
  snapshot_intervals(0.0, rc.t_end, rc.history_every, rc.solver.dt_max);
  const auto ratio = std::llround(rc.dt_snap / rc.history_every);
  const WaveField init = initial_state(rc.grid, rc.params);

  cx.manifest.add("solver.t_end", rc.t_end);
  cx.manifest.add("solver.dt_snap", rc.dt_snap);
  cx.manifest.add("solver.history_every", rc.history_every);

  SnapshotWriter writer(cx.dir / "snapshots.bin", rc.grid, rc.params, rc.dt_snap,
                        static_cast<std::uint64_t>(intervals + 1));
  std::vector<NormSample> history;
  std::int64_t k = 0;
  double max_dev = 0.0;
  auto sink = [&](const WaveField& f, const NormSample& s) {
    history.push_back(s);
    max_dev = std::max(max_dev, std::abs(s.norm - 1.0));
    if (k % ratio == 0) {
      writer.append(f);
      cx.say("t = " + format_number(f.t) + " norm = " + format_number(s.norm));
    }
    ++k;
  };
  StepStats stats;
  auto write_history = [&] { cx.emit("history.csv", csv_text([&](std::ostream& os) { write_history_csv(os, history); })); };
  try {
    stats = evolve_streaming(init, rc.t_end, rc.history_every, rc.solver, sink);
  } catch (...) {
    write_history();
    cx.manifest.add("norm.max_deviation", max_dev);
    throw;
  }
  writer.close();
  write_history();

  Manifest side;
  side.add("format", "BOHMSNAP");
  side.add("version", std::to_string(kSnapshotFormatVersion));
  side.add("byte_order", "little");
  side.add("layout", "row-major, iy outer, (re, im) float64 pairs");
  add_params(side, rc);
  side.add("dt_snap", rc.dt_snap);
  side.add("count", std::to_string(intervals + 1));
  side.add("t_first", 0.0);
  side.add("t_last", rc.t_end);
  side.add("history", "history.csv");
  side.add("history_sha256", sha256_file(cx.dir / "history.csv"));
  side.add("norm.max_deviation", max_dev);
  add_stats(side, stats);
  side.add("snapshots_sha256", sha256_file(cx.dir / "snapshots.bin"));
  side.write(cx.dir / "snapshots.manifest");
  cx.outputs.push_back("snapshots.bin");
  cx.outputs.push_back("snapshots.manifest");

  cx.manifest.add("norm.max_deviation", max_dev);
  add_stats(cx.manifest, stats);
}

void run_traj(Context& cx) {
  const auto& rc = cx.rc;
  const auto& job = rc.trajectories;
  if (job.seeds.empty()) throw ConfigError("trajectories.seeds is empty");
  cx.manifest.add("trajectories.t_begin", job.t_begin);
  cx.manifest.add("trajectories.t_end", job.t_end);
  add_integrator(cx.manifest, "trajectories", job.integrator);

  auto src = open_stream(cx, job.t_begin, job.t_end, false);
  const auto trajs = integrate_stream(*src.stream, job.seeds, job.t_end, job.integrator);
  if (src.evolving) add_stats(cx.manifest, src.evolving->stats());
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& tr = trajs[i];
    const std::string name = "traj_" + std::to_string(i) + ".csv";
    cx.emit(name, csv_text([&](std::ostream& os) { write_trajectory_csv(os, tr); }));
    const std::string key = "trajectory." + std::to_string(i);
    cx.manifest.add(key + ".seed", format_number(tr.x0) + ":" + format_number(tr.y0));
    cx.manifest.add(key + ".file", name);
    cx.manifest.add(key + ".flag", tr.truncated() ? flag_name(tr.status) : "ok");
    if (tr.truncated() && tr.last_valid) cx.manifest.add(key + ".truncated_at", tr.last_valid->t);
    cx.say(name + (tr.truncated() ? std::string(" truncated: ") + tr.message : std::string(" complete")));
  }
}

void run_vortex(Context& cx) {
  const auto& rc = cx.rc;
  const auto& job = rc.vortices;
  const double span = job.t_end - job.t_begin;
  const auto count = std::llround(span / job.frame_interval);
  if (std::abs(static_cast<double>(count) * job.frame_interval - span) > 1e-9 * std::max(1.0, span))
    throw ConfigError("vortices.frame_interval must divide t_end - t_begin");
  const auto& r = job.region;
  cx.manifest.add("vortices.region", format_number(r.x_min) + "," + format_number(r.x_max) + "," +
                                         format_number(r.y_min) + "," + format_number(r.y_max));
  cx.manifest.add("vortices.t_begin", job.t_begin);
  cx.manifest.add("vortices.t_end", job.t_end);
  cx.manifest.add("vortices.frame_interval", job.frame_interval);

  std::shared_ptr<const SnapshotSeries> series;
  std::unique_ptr<Evolver> ev;
  if (!rc.snapshots.empty()) {
    series = load_series(cx);
  } else {
    cx.manifest.add("snapshot_source", "inline");
    ev = std::make_unique<Evolver>(initial_state(rc.grid, rc.params), rc.solver);
  }

  std::vector<VortexFrame> frames;
  std::ostringstream nodes_csv;
  nodes_csv << "t,x,y,winding,residual\n";
  int degenerate = 0;
  int q_min = 0, q_max = 0;
  for (long long k = 0; k <= count; ++k) {
    const double t = job.t_begin + static_cast<double>(k) * job.frame_interval;
    WaveField field;
    if (series) {
      field = series->snapshots[snapshot_index(*series, t, "frame time")];
    } else {
      ev->advance_to(t);
      field = ev->state();
    }
    field.t = t;
    try {
      VortexFrame frame{t, find_nodes(field, r)};
      for (const auto& p : frame.nodes)
        nodes_csv << format_number(t) << ',' << format_number(p.x) << ',' << format_number(p.y) << ',' << p.winding
                  << ',' << format_number(p.residual) << '\n';
      const int q = total_winding(frame.nodes);
      if (frames.empty()) q_min = q_max = q;
      q_min = std::min(q_min, q);
      q_max = std::max(q_max, q);
      frames.push_back(std::move(frame));
    } catch (const DegenerateFieldError& e) {
      ++degenerate;
      cx.manifest.add("warning.frame." + std::to_string(k), e.what());
      cx.say(std::string("skipping degenerate frame: ") + e.what());
    }
  }
  if (ev) add_stats(cx.manifest, ev->stats());

  TrackSettings ts = TrackSettings::for_grid(rc.grid);
  if (job.match_radius > 0) ts.match_radius = job.match_radius;
  if (job.pair_radius > 0) ts.pair_radius = job.pair_radius;
  cx.manifest.add("vortices.match_radius", ts.match_radius);
  cx.manifest.add("vortices.pair_radius", ts.pair_radius);
  const TrackResult result = frames.empty() ? TrackResult{} : track(frames, ts);

  cx.emit("nodes.csv", nodes_csv.str());
  cx.emit("tracks.csv", csv_text([&](std::ostream& os) { write_tracks_csv(os, result); }));
  cx.emit("events.csv", csv_text([&](std::ostream& os) { write_events_csv(os, result); }));
  cx.manifest.add("frames", std::to_string(frames.size()));
  cx.manifest.add("frames.degenerate", std::to_string(degenerate));
  cx.manifest.add("tracks", std::to_string(result.tracks.size()));
  cx.manifest.add("total_winding.min", std::to_string(q_min));
  cx.manifest.add("total_winding.max", std::to_string(q_max));
  for (std::size_t i = 0; i < result.events.size(); ++i) {
    const auto& e = result.events[i];
    cx.manifest.add("event." + std::to_string(i), std::string(event_name(e.kind)) + " t=" + format_number(e.t) +
                                                      " x=" + format_number(e.x) + " y=" + format_number(e.y));
  }
  for (std::size_t i = 0; i < result.ambiguities.size(); ++i)
    cx.manifest.add("ambiguity." + std::to_string(i), result.ambiguities[i]);
  cx.say(std::to_string(result.tracks.size()) + " tracks, " + std::to_string(result.events.size()) + " pair events");
}

void run_chaos(Context& cx) {
  const auto& rc = cx.rc;
  const auto& job = rc.chaos;
  if (job.region.x.empty() || job.region.y.empty()) throw ConfigError("chaos.x_intervals is not set");
  const auto pairs = make_pairs(job.region, job.count, job.epsilon, job.direction_deg * std::numbers::pi / 180.0);
  cx.manifest.add("chaos.count", std::to_string(job.count));
  cx.manifest.add("chaos.epsilon", job.epsilon);
  cx.manifest.add("chaos.direction_deg", job.direction_deg);
  cx.manifest.add("chaos.t_end", job.t_end);
  cx.manifest.add("chaos.keep_fraction", job.keep_fraction);
  add_integrator(cx.manifest, "chaos", job.integrator);

  std::ostringstream seeds;
  seeds << "pair_id,x0,y0,x1,y1\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Vec2 b = pairs[i].base, q = pairs[i].partner();
    seeds << i << ',' << format_number(b.x) << ',' << format_number(b.y) << ',' << format_number(q.x) << ','
          << format_number(q.y) << '\n';
  }
  cx.emit("seeds.csv", seeds.str());

  cx.say("integrating " + std::to_string(pairs.size()) + " pairs to t = " + format_number(job.t_end));
  auto src = open_stream(cx, 0.0, job.t_end, false);
  auto separations = integrate_pairs(*src.stream, pairs, job.t_end, job.integrator);
  if (src.evolving) add_stats(cx.manifest, src.evolving->stats());
  const SeparationSeries series = ensemble_mean(std::move(separations), job.t_end, job.keep_fraction);
  cx.emit("mean.csv", csv_text([&](std::ostream& os) { write_mean_csv(os, series); }));
  cx.emit("pairs.csv", csv_text([&](std::ostream& os) { write_pairs_csv(os, series); }));

  const double t0 = series.t.empty() ? 0.0 : series.t.front();
  SlopeFit fit;
  if (job.fit_begin || job.fit_end)
    fit = fit_slope(series, job.fit_begin.value_or(t0 + (job.t_end - t0) / 5.0), job.fit_end.value_or(job.t_end));
  else
    fit = fit_slope(series);
  if (job.bootstrap > 0) bootstrap_slope(series, fit, job.bootstrap, job.bootstrap_seed);

  std::string excluded;
  for (std::size_t id : series.excluded) excluded += (excluded.empty() ? "" : ",") + std::to_string(id);
  cx.manifest.add("pairs.excluded", excluded.empty() ? "none" : excluded);
  cx.manifest.add("fit.t_begin", fit.t_begin);
  cx.manifest.add("fit.t_end", fit.t_end);
  cx.manifest.add("fit.samples", std::to_string(fit.samples));
  cx.manifest.add("fit.slope", fit.slope);
  cx.manifest.add("fit.intercept", fit.intercept);
  cx.manifest.add("fit.residual", fit.residual);
  if (fit.has_interval) {
    cx.manifest.add("fit.bootstrap", std::to_string(job.bootstrap));
    cx.manifest.add("fit.bootstrap_seed", std::to_string(job.bootstrap_seed));
    cx.manifest.add("fit.ci95_low", fit.ci_low);
    cx.manifest.add("fit.ci95_high", fit.ci_high);
  }
  cx.say("slope " + format_number(fit.slope) +
         (fit.has_interval ? " [" + format_number(fit.ci_low) + ", " + format_number(fit.ci_high) + "]" : ""));
}

double parse_cell(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw SchemaError(path.string() + ": not a number '" + s + "'");
}

const WaveField& field_at(const SnapshotSeries& s, double t) { return s.snapshots[snapshot_index(s, t, "plot.time")]; }

void run_plot(Context& cx) {
  const auto& rc = cx.rc;
  if (rc.plot_inputs.empty()) throw ConfigError("plot.inputs is empty");
  if (!rc.plot_labels.empty() && rc.plot_labels.size() != rc.plot_inputs.size())
    throw ConfigError("plot.labels must match plot.inputs");
  cx.manifest.add("plot.kind", rc.plot_kind);
  for (std::size_t i = 0; i < rc.plot_inputs.size(); ++i) {
    cx.manifest.add("input." + std::to_string(i), rc.plot_inputs[i]);
    cx.manifest.add("input." + std::to_string(i) + ".sha256", sha256_file(rc.plot_inputs[i]));
  }
  auto label = [&](std::size_t i) {
    if (!rc.plot_labels.empty()) return rc.plot_labels[i];
    const fs::path p = rc.plot_inputs[i];
    return p.has_parent_path() ? (p.parent_path().filename() / p.stem()).string() : p.stem().string();
  };

  std::string svg;
  if (rc.plot_kind == "density" || rc.plot_kind == "quiver") {
    if (rc.plot_inputs.size() != 1) throw ConfigError("plot." + rc.plot_kind + " takes one snapshot file");
    const SnapshotSeries series = read_snapshots(rc.plot_inputs[0]);
    const WaveField& f = field_at(series, rc.plot_time);
    cx.manifest.add("plot.time", f.t);
    const std::string title = "t = " + format_number(f.t);
    if (rc.plot_kind == "density") {
      svg = density_svg(f, title);
    } else {
      FrameBuilder builder(f.grid, f.params, false, false);
      const auto frame = builder.build(f);
      const FrameWindow window(frame, frame);
      svg = quiver_svg(quiver_arrows(window, f.t, rc.vortices.region, 24), rc.vortices.region, title);
    }
  } else if (rc.plot_kind == "trajectory" || rc.plot_kind == "lnxi") {
    const bool traj = rc.plot_kind == "trajectory";
    std::vector<PlotSeries> lines;
    for (std::size_t i = 0; i < rc.plot_inputs.size(); ++i) {
      const fs::path path = rc.plot_inputs[i];
      const auto rows = read_csv(path, traj ? "t,x,y,px,py,flag" : "t,mean_ln_xi,n_effective");
      PlotSeries s{label(i), {}, {}};
      for (const auto& row : rows) {
        s.x.push_back(parse_cell(row[traj ? 1 : 0], path));
        s.y.push_back(parse_cell(row[traj ? 2 : 1], path));
      }
      lines.push_back(std::move(s));
    }
    svg = traj ? line_plot_svg(lines, "x", "y", "trajectories", true)
               : line_plot_svg(lines, "t", "<ln xi>", "mean log separation");
  } else {
    throw ConfigError("plot.kind must be density, quiver, trajectory or lnxi");
  }
  cx.emit("plot.svg", svg);
}

std::mutex g_log_mutex;

}  // namespace

const char* command_name(Command c) {
  switch (c) {
    case Command::evolve: return "evolve";
    case Command::traj: return "traj";
    case Command::vortex: return "vortex";
    case Command::chaos: return "chaos";
    case Command::plot: return "plot";
  }
  return "?";
}

int exit_code_for_current_exception(std::string& message) {
  try {
    throw;
  } catch (const ConfigError& e) {
    message = std::string("configuration error: ") + e.what();
    return kExitConfig;
  } catch (const SchemaError& e) {
    message = std::string("input error: ") + e.what();
    return kExitConfig;
  } catch (const IoError& e) {
    message = std::string("i/o error: ") + e.what();
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    message = std::string("i/o error: ") + e.what();
    return kExitIo;
  } catch (const NumericalError& e) {
    message = std::string("numerical failure: ") + e.what();
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    message = std::string("invalid setting: ") + e.what();
    return kExitConfig;
  } catch (const std::exception& e) {
    message = std::string("failure: ") + e.what();
    return kExitNumerical;
  } catch (...) {
    message = "unknown failure";
    return kExitNumerical;
  }
}

Config load_config(const RunOptions& options) {
  Config c = options.config ? Config::load(*options.config) : Config{};
  for (const auto& o : options.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not section.key=value");
    c.set(o.substr(0, eq), o.substr(eq + 1));
  }
  return c.resolved(options.preset);
}

void run_point(Command command, const Config& resolved, const SweepPoint& point, const fs::path& dir,
               std::ostream& log) {
  const RunConfig rc = make_run_config(resolved, point);
  fs::create_directories(dir);
  Config effective = resolved;
  effective.set("sweep.kappa", format_value(point.kappa));
  effective.set("sweep.hbar", format_value(point.hbar));
  const std::string config_text = effective.dump();
  write_text(dir / "config.effective", config_text);

  Manifest m;
  m.add("tool", "bohmsim");
  m.add("manifest_version", "1");
  m.add("command", command_name(command));
  m.add("rerun", std::string("bohmsim ") + command_name(command) + " --config config.effective --out .");
  m.add("preset", rc.preset.empty() ? "none" : rc.preset);
  m.add("point", point.label);
  m.add("config", "config.effective");
  m.add("config_sha256", sha256_hex(config_text));
  add_params(m, rc);

  Context cx{rc, dir, m, log, g_log_mutex, {}};
  auto finish = [&](const std::string& status) {
    for (const auto& name : cx.outputs)
      if (fs::exists(dir / name)) m.add("output." + name + ".sha256", sha256_file(dir / name));
    m.add("status", status);
    m.write(dir / "manifest.txt");
  };
  try {
    switch (command) {
      case Command::evolve: run_evolve(cx); break;
      case Command::traj: run_traj(cx); break;
      case Command::vortex: run_vortex(cx); break;
      case Command::chaos: run_chaos(cx); break;
      case Command::plot: run_plot(cx); break;
    }
  } catch (...) {
    std::string message;
    exit_code_for_current_exception(message);
    m.add("error", message);
    finish("failed");
    throw;
  }
  finish("ok");
}

int run(Command command, const RunOptions& options, std::ostream& log) {
  std::vector<SweepPoint> points;
  Config resolved;
  try {
    if (options.jobs < 1) throw ConfigError("--jobs must be at least 1");
    resolved = load_config(options);
    points = sweep_points(resolved);
    if (command == Command::plot) points.resize(1);
    // Validate every point before any work starts.
    for (const auto& p : points) make_run_config(resolved, p);
  } catch (...) {
    std::string message;
    const int code = exit_code_for_current_exception(message);
    log << "bohmsim: " << message << '\n';
    return code;
  }

  std::vector<int> codes(points.size(), kExitOk);
  std::vector<std::string> messages(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < points.size();) {
      const fs::path dir = points.size() == 1 ? options.out : options.out / points[i].label;
      try {
        run_point(command, resolved, points[i], dir, log);
      } catch (...) {
        codes[i] = exit_code_for_current_exception(messages[i]);
      }
    }
  };
  const int workers = std::min<int>(options.jobs, static_cast<int>(points.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  int code = kExitOk;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (codes[i] != kExitOk) {
      log << "bohmsim: " << points[i].label << ": " << messages[i] << '\n';
      if (code == kExitOk) code = codes[i];
    }
  return code;
}

}  // namespace bohm::app
