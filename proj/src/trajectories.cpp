#include "bohm/trajectories.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <thread>

namespace bohm {

namespace {

// Dormand-Prince 8(5,3) tableau, 12 stages plus the FSAL evaluation.
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;

constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

// Embedded third- and fifth-order error estimates.
constexpr double bhh1 = 0.244094488188976377952755905512e+00;
constexpr double bhh2 = 0.733846688281611857341361741547e+00;
constexpr double bhh3 = 0.220588235294117647058823529412e-01;
constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;

struct StepResult {
  Vec2 y;
  Vec2 k13;     // velocity at the new point
  double error;  // scaled error norm, adaptive mode only
};

// One DOP853 step from (t, y) with derivative k1. Field errors propagate.
StepResult dop853_step(const FrameWindow& w, double t, Vec2 y, Vec2 k1, double h, bool estimate,
                       double rtol, double atol) {
  auto f = [&](double tt, double x, double yy) { return w.velocity(tt, x, yy); };
  const Vec2 k2 = f(t + c2 * h, y.x + h * a21 * k1.x, y.y + h * a21 * k1.y);
  const Vec2 k3 = f(t + c3 * h, y.x + h * (a31 * k1.x + a32 * k2.x), y.y + h * (a31 * k1.y + a32 * k2.y));
  const Vec2 k4 = f(t + c4 * h, y.x + h * (a41 * k1.x + a43 * k3.x), y.y + h * (a41 * k1.y + a43 * k3.y));
  const Vec2 k5 = f(t + c5 * h, y.x + h * (a51 * k1.x + a53 * k3.x + a54 * k4.x),
                    y.y + h * (a51 * k1.y + a53 * k3.y + a54 * k4.y));
  const Vec2 k6 = f(t + c6 * h, y.x + h * (a61 * k1.x + a64 * k4.x + a65 * k5.x),
                    y.y + h * (a61 * k1.y + a64 * k4.y + a65 * k5.y));
  const Vec2 k7 = f(t + c7 * h, y.x + h * (a71 * k1.x + a74 * k4.x + a75 * k5.x + a76 * k6.x),
                    y.y + h * (a71 * k1.y + a74 * k4.y + a75 * k5.y + a76 * k6.y));
  const Vec2 k8 = f(t + c8 * h, y.x + h * (a81 * k1.x + a84 * k4.x + a85 * k5.x + a86 * k6.x + a87 * k7.x),
                    y.y + h * (a81 * k1.y + a84 * k4.y + a85 * k5.y + a86 * k6.y + a87 * k7.y));
  const Vec2 k9 = f(t + c9 * h,
                    y.x + h * (a91 * k1.x + a94 * k4.x + a95 * k5.x + a96 * k6.x + a97 * k7.x + a98 * k8.x),
                    y.y + h * (a91 * k1.y + a94 * k4.y + a95 * k5.y + a96 * k6.y + a97 * k7.y + a98 * k8.y));
  const Vec2 k10 = f(t + c10 * h,
                     y.x + h * (a101 * k1.x + a104 * k4.x + a105 * k5.x + a106 * k6.x + a107 * k7.x +
                                a108 * k8.x + a109 * k9.x),
                     y.y + h * (a101 * k1.y + a104 * k4.y + a105 * k5.y + a106 * k6.y + a107 * k7.y +
                                a108 * k8.y + a109 * k9.y));
  const Vec2 k11 = f(t + c11 * h,
                     y.x + h * (a111 * k1.x + a114 * k4.x + a115 * k5.x + a116 * k6.x + a117 * k7.x +
                                a118 * k8.x + a119 * k9.x + a1110 * k10.x),
                     y.y + h * (a111 * k1.y + a114 * k4.y + a115 * k5.y + a116 * k6.y + a117 * k7.y +
                                a118 * k8.y + a119 * k9.y + a1110 * k10.y));
  const Vec2 k12 = f(t + h,
                     y.x + h * (a121 * k1.x + a124 * k4.x + a125 * k5.x + a126 * k6.x + a127 * k7.x +
                                a128 * k8.x + a129 * k9.x + a1210 * k10.x + a1211 * k11.x),
                     y.y + h * (a121 * k1.y + a124 * k4.y + a125 * k5.y + a126 * k6.y + a127 * k7.y +
                                a128 * k8.y + a129 * k9.y + a1210 * k10.y + a1211 * k11.y));
  const Vec2 bk{b1 * k1.x + b6 * k6.x + b7 * k7.x + b8 * k8.x + b9 * k9.x + b10 * k10.x + b11 * k11.x + b12 * k12.x,
                b1 * k1.y + b6 * k6.y + b7 * k7.y + b8 * k8.y + b9 * k9.y + b10 * k10.y + b11 * k11.y + b12 * k12.y};
  StepResult r;
  r.y = {y.x + h * bk.x, y.y + h * bk.y};
  r.error = 0.0;
  if (estimate) {
    const double skx = atol + rtol * std::max(std::abs(y.x), std::abs(r.y.x));
    const double sky = atol + rtol * std::max(std::abs(y.y), std::abs(r.y.y));
    const double e3x = (bk.x - bhh1 * k1.x - bhh2 * k9.x - bhh3 * k12.x) / skx;
    const double e3y = (bk.y - bhh1 * k1.y - bhh2 * k9.y - bhh3 * k12.y) / sky;
    const double e5x = (e51 * k1.x + e56 * k6.x + e57 * k7.x + e58 * k8.x + e59 * k9.x + e510 * k10.x +
                        e511 * k11.x + e512 * k12.x) / skx;
    const double e5y = (e51 * k1.y + e56 * k6.y + e57 * k7.y + e58 * k8.y + e59 * k9.y + e510 * k10.y +
                        e511 * k11.y + e512 * k12.y) / sky;
    const double err3 = e3x * e3x + e3y * e3y;
    const double err5 = e5x * e5x + e5y * e5y;
    double deno = err5 + 0.01 * err3;
    if (deno <= 0.0) deno = 1.0;
    r.error = std::abs(h) * err5 / std::sqrt(2.0 * deno);
  }
  r.k13 = f(t + h, r.y.x, r.y.y);
  return r;
}

// Per-seed integration state carried from window to window.
struct Runner {
  Trajectory traj;
  Vec2 y;
  Vec2 k1;
  double t = 0.0;
  double h = 0.0;             // adaptive step size
  std::int64_t step = 0;      // fixed mode step counter
  std::int64_t outputs = 0;   // samples written after the first
  bool active = true;
};

void stop(Runner& r, const std::exception& e, TrajectoryStatus status, double mass) {
  r.active = false;
  r.traj.status = status;
  r.traj.message = e.what();
  r.traj.last_valid = TrajectoryState{r.t, r.y.x, r.y.y, mass * r.k1.x, mass * r.k1.y};
}

template <class Body>
void guarded(Runner& r, double mass, Body&& body) {
  try {
    body();
  } catch (const NodeProximityError& e) {
    stop(r, e, TrajectoryStatus::node_proximity, mass);
  } catch (const OutOfDomainError& e) {
    stop(r, e, TrajectoryStatus::out_of_domain, mass);
  }
}

void record(Runner& r, double mass) {
  r.traj.samples.push_back({r.t, r.y.x, r.y.y, mass * r.k1.x, mass * r.k1.y});
}

// Fixed-step advance of one runner up to step index `last`.
void advance_fixed(Runner& r, const FrameWindow& w, double t_begin, std::int64_t last, const IntegratorSettings& s) {
  const double mass = w.params().mass;
  guarded(r, mass, [&] {
    while (r.step < last) {
      const double t = t_begin + static_cast<double>(r.step) * s.dt;
      const StepResult res = dop853_step(w, t, r.y, r.k1, s.dt, false, 0.0, 0.0);
      r.y = res.y;
      r.k1 = res.k13;
      ++r.step;
      r.t = t_begin + static_cast<double>(r.step) * s.dt;
      if (r.step % s.out_every == 0) record(r, mass);
    }
  });
}

// Adaptive advance up to t_stop, landing exactly on output times.
void advance_adaptive(Runner& r, const FrameWindow& w, double t_begin, double t_stop, const IntegratorSettings& s) {
  const double mass = w.params().mass;
  const double out_dt = s.output_interval();
  guarded(r, mass, [&] {
    int rejected_in_row = 0;
    while (r.t < t_stop - 1e-13 * std::max(1.0, std::abs(t_stop))) {
      const double t_out = t_begin + static_cast<double>(r.outputs + 1) * out_dt;
      const double target = std::min(t_stop, t_out);
      double h = std::min(r.h, target - r.t);
      const bool lands = h >= target - r.t;
      const StepResult res = dop853_step(w, r.t, r.y, r.k1, h, true, s.rtol, s.atol);
      const double err = res.error;
      double fac = std::pow(std::max(err, 1e-300), 0.125) / 0.9;
      fac = std::clamp(fac, 1.0 / 6.0, 3.0);
      if (err <= 1.0) {
        r.y = res.y;
        r.k1 = res.k13;
        r.t = lands ? target : r.t + h;
        if (!lands || h >= r.h) r.h = std::min(r.h / fac, w.t_end() - w.t_begin());
        rejected_in_row = 0;
        if (lands && target == t_out) {
          ++r.outputs;
          record(r, mass);
        }
      } else {
        r.h = h / std::max(fac, 1.0);
        if (++rejected_in_row > 200 || r.h < 1e-14)
          throw OutOfDomainError("adaptive step size underflow at t=" + format_number(r.t));
      }
    }
  });
}

void check_alignment(double value, double unit, const char* what) {
  const double ratio = value / unit;
  if (std::abs(ratio - std::round(ratio)) > 1e-8 * std::max(1.0, std::abs(ratio)))
    throw std::invalid_argument(std::string("integrate: ") + what);
}

}  // namespace

const char* flag_name(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::complete:
      return "ok";
    case TrajectoryStatus::node_proximity:
      return "node_proximity";
    case TrajectoryStatus::out_of_domain:
      return "out_of_domain";
  }
  return "ok";
}

void IntegratorSettings::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("integrator: dt must be positive");
  if (out_every < 1) throw std::invalid_argument("integrator: out_every must be at least 1");
  if (adaptive && !(rtol > 0.0 && atol > 0.0)) throw std::invalid_argument("integrator: tolerances must be positive");
  if (threads < 1) throw std::invalid_argument("integrator: threads must be at least 1");
}

Vec2 velocity(const FieldInterpolant& interp, double t, double x, double y) {
  return interp.window(t).velocity(t, x, y);
}

double quantum_potential(const FieldInterpolant& interp, double t, double x, double y) {
  return interp.window(t).quantum_potential(t, x, y);
}

Vec2 quantum_force(const FieldInterpolant& interp, double t, double x, double y) {
  return interp.window(t).quantum_force(t, x, y);
}

std::vector<Trajectory> integrate_stream(FrameStream& frames, const std::vector<Vec2>& seeds, double t_end,
                                         const IntegratorSettings& settings) {
  settings.validate();
  if (seeds.empty()) return {};
  const double t_begin = frames.t_begin();
  const double dt_snap = frames.dt_snap();
  const double t_last = t_begin + static_cast<double>(frames.frame_count() - 1) * dt_snap;
  if (t_end < t_begin || t_end > t_last + 1e-9 * std::max(1.0, std::abs(t_last)))
    throw std::invalid_argument("integrate: time span not covered by the snapshots");
  std::int64_t total_steps = 0, steps_per_window = 0;
  if (!settings.adaptive) {
    if (frames.frame_count() > 1) check_alignment(dt_snap, settings.dt, "dt_snap must be a multiple of dt");
    check_alignment(t_end - t_begin, settings.dt, "t_end - t_begin must be a multiple of dt");
    total_steps = std::llround((t_end - t_begin) / settings.dt);
    steps_per_window = std::max<std::int64_t>(1, std::llround(dt_snap / settings.dt));
  }

  std::vector<Runner> runners(seeds.size());
  auto current = frames.next();
  if (!current) throw std::invalid_argument("integrate: empty frame stream");
  {
    const FrameWindow w0(current, current);
    const double mass = w0.params().mass;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      Runner& r = runners[i];
      r.traj.x0 = seeds[i].x;
      r.traj.y0 = seeds[i].y;
      r.traj.settings = settings;
      r.t = t_begin;
      r.y = seeds[i];
      r.h = settings.dt;
      guarded(r, mass, [&] {
        r.k1 = w0.velocity(t_begin, r.y.x, r.y.y);
        record(r, mass);
      });
    }
  }

  const int threads = std::min<int>(settings.threads, static_cast<int>(seeds.size()));
  std::int64_t window = 0;
  while (true) {
    const double ta = t_begin + static_cast<double>(window) * dt_snap;
    if (ta >= t_end - 1e-12 * std::max(1.0, std::abs(t_end))) break;
    if (std::none_of(runners.begin(), runners.end(), [](const Runner& r) { return r.active; })) break;
    auto following = frames.next();
    if (!following) break;
    const FrameWindow w(current, following);
    const std::int64_t last = std::min(total_steps, (window + 1) * steps_per_window);
    const double t_stop = std::min(t_end, w.t_end());
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t i = begin; i < runners.size(); i += stride) {
        if (!runners[i].active) continue;
        if (settings.adaptive)
          advance_adaptive(runners[i], w, t_begin, t_stop, settings);
        else
          advance_fixed(runners[i], w, t_begin, last, settings);
      }
    };
    if (threads <= 1) {
      work(0, 1);
    } else {
      std::vector<std::jthread> pool;
      for (int k = 0; k < threads; ++k) pool.emplace_back(work, static_cast<std::size_t>(k), static_cast<std::size_t>(threads));
    }
    current = std::move(following);
    ++window;
  }

  std::vector<Trajectory> out;
  out.reserve(runners.size());
  for (auto& r : runners) out.push_back(std::move(r.traj));
  return out;
}

std::vector<Trajectory> integrate_batch(const FieldInterpolant& interp, const std::vector<Vec2>& seeds,
                                        double t_begin, double t_end, const IntegratorSettings& settings) {
  const auto& series = interp.series();
  const double t0 = interp.t_begin();
  std::size_t first = 0;
  if (series.snapshots.size() > 1) {
    check_alignment(t_begin - t0, series.dt_snap, "t_begin must be a snapshot time");
    const auto k = std::llround((t_begin - t0) / series.dt_snap);
    if (k < 0 || static_cast<std::size_t>(k) >= series.snapshots.size())
      throw std::invalid_argument("integrate: t_begin outside the snapshot series");
    first = static_cast<std::size_t>(k);
  } else if (std::abs(t_begin - t0) > 1e-12) {
    throw std::invalid_argument("integrate: t_begin outside the snapshot series");
  }
  InterpolantFrameStream stream(interp, first);
  return integrate_stream(stream, seeds, t_end, settings);
}

Trajectory integrate(const FieldInterpolant& interp, double x0, double y0, double t_begin, double t_end,
                     const IntegratorSettings& settings) {
  return std::move(integrate_batch(interp, {Vec2{x0, y0}}, t_begin, t_end, settings).front());
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,x,y,px,py,flag\n";
  auto row = [&](const TrajectoryState& s, const char* flag) {
    os << format_number(s.t) << ',' << format_number(s.x) << ',' << format_number(s.y) << ','
       << format_number(s.px) << ',' << format_number(s.py) << ',' << flag << '\n';
  };
  for (const auto& s : traj.samples) row(s, "ok");
  if (traj.truncated() && traj.last_valid) row(*traj.last_valid, flag_name(traj.status));
}

}  // namespace bohm
