#include "bohm/tdse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bohm {

namespace {

double sum_squares(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

std::string format_time(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

}  // namespace

double norm(const WaveField& field) {
  const double dx = field.grid.dx();
  return sum_squares(field.values) * dx * dx;
}

std::vector<double> sample_potential(const GridSpec& grid, const PhysParams& params) {
  std::vector<double> v(static_cast<std::size_t>(grid.n) * grid.n);
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = 0; ix < grid.n; ++ix)
      v[static_cast<std::size_t>(iy) * grid.n + ix] = potential(params, grid.coord(ix), grid.coord(iy));
  return v;
}

double energy(const WaveField& field) {
  const GridSpec& g = field.grid;
  DirichletSpectral spectral(g);
  ComplexBuffer coeffs(field.values.begin(), field.values.end());
  spectral.analyze(coeffs);

  const auto& k = spectral.wavenumbers();
  double kinetic = 0.0;
  for (int ky = 0; ky < g.n; ++ky)
    for (int kx = 0; kx < g.n; ++kx)
      kinetic += (k[kx] * k[kx] + k[ky] * k[ky]) * std::norm(coeffs[static_cast<std::size_t>(ky) * g.n + kx]);
  // Parseval for the sine basis: sum_i |Psi_i|^2 = ((n+1)/2)^2 sum |a|^2.
  const double parseval = 0.25 * static_cast<double>(g.n + 1) * (g.n + 1);
  const double dx2 = g.dx() * g.dx();
  const double hbar = field.params.hbar;
  kinetic *= hbar * hbar / (2.0 * field.params.mass) * parseval * dx2;

  const auto v = sample_potential(g, field.params);
  double pot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) pot += v[i] * std::norm(field.values[i]);
  return kinetic + pot * dx2;
}

void apply_hamiltonian(const DirichletSpectral& spectral, std::span<const double> potential_values,
                       const PhysParams& params, std::span<const Complex> coeffs,
                       std::span<const Complex> values, std::span<Complex> out) {
  spectral.laplacian(coeffs, out);
  const double c = -params.hbar * params.hbar / (2.0 * params.mass);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * out[i] + potential_values[i] * values[i];
}

SplitStepPropagator::SplitStepPropagator(const GridSpec& grid, const PhysParams& params)
    : spectral_(grid), params_(params), potential_(sample_potential(grid, params)) {
  params_.validate();
}

const SplitStepPropagator::PhaseTables& SplitStepPropagator::tables(double dt) {
  if (auto it = tables_.find(dt); it != tables_.end()) return it->second;
  const int n = grid().n;
  const std::size_t size = static_cast<std::size_t>(n) * n;
  PhaseTables t{ComplexBuffer(size), ComplexBuffer(size)};
  const double hbar = params_.hbar;
  for (std::size_t i = 0; i < size; ++i) t.potential_half[i] = std::polar(1.0, -potential_[i] * dt / (2.0 * hbar));
  const auto& k = spectral_.wavenumbers();
  const double scale = spectral_.roundtrip_scale();
  const double c = hbar * dt / (2.0 * params_.mass);
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < n; ++kx)
      t.kinetic[static_cast<std::size_t>(ky) * n + kx] = std::polar(scale, -c * (k[kx] * k[kx] + k[ky] * k[ky]));
  return tables_.emplace(dt, std::move(t)).first->second;
}

void SplitStepPropagator::step(std::span<Complex> psi, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const auto& t = tables(dt);
  const std::size_t size = psi.size();
  for (std::size_t i = 0; i < size; ++i) psi[i] *= t.potential_half[i];
  spectral_.transform(psi);
  for (std::size_t i = 0; i < size; ++i) psi[i] *= t.kinetic[i];
  spectral_.transform(psi);
  for (std::size_t i = 0; i < size; ++i) psi[i] *= t.potential_half[i];
}

WaveField step(const WaveField& field, double dt) {
  SplitStepPropagator prop(field.grid, field.params);
  ComplexBuffer psi(field.values.begin(), field.values.end());
  prop.step(psi, dt);
  WaveField out{field.grid, field.params, field.t + dt, std::vector<Complex>(psi.begin(), psi.end())};
  return out;
}

Evolver::Evolver(const WaveField& initial, const SolverSettings& settings)
    : prop_(initial.grid, initial.params),
      settings_(settings),
      t0_(initial.t),
      psi_(initial.values.begin(), initial.values.end()),
      full_(initial.values.size()) {
  if (!(settings.dt_max > 0.0) || !(settings.dt_min > 0.0) || settings.dt_min > settings.dt_max)
    throw std::invalid_argument("solver needs 0 < dt_min <= dt_max");
  if (!(settings.tol_step > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  if (initial.values.size() != static_cast<std::size_t>(initial.grid.n) * initial.grid.n)
    throw std::invalid_argument("wave field size does not match its grid");
  max_level_ = 0;
  while (settings.dt_max / std::ldexp(1.0, max_level_ + 1) >= settings.dt_min * (1.0 - 1e-12)) ++max_level_;
  unit_ = settings.dt_max / std::ldexp(1.0, max_level_);
  const double dx = initial.grid.dx();
  cell_area_ = dx * dx;
  stats_.dt_smallest = settings.dt_max;
}

double Evolver::time() const { return t0_ + static_cast<double>(ticks_) * unit_; }

double Evolver::step_size(int level) const { return settings_.dt_max / std::ldexp(1.0, level); }

WaveField Evolver::state() const {
  return WaveField{prop_.grid(), prop_.params(), time(), std::vector<Complex>(psi_.begin(), psi_.end())};
}

void Evolver::advance_to(double t_target) {
  const double span = (t_target - t0_) / unit_;
  const auto target = static_cast<std::int64_t>(std::llround(span));
  if (std::abs(span - static_cast<double>(target)) > 1e-6 || target < ticks_)
    throw std::invalid_argument("advance_to: t=" + format_time(t_target) +
                                " is not ahead of the solver on its step lattice");

  const std::size_t size = psi_.size();
  while (ticks_ < target) {
    int level = level_;
    auto width = std::int64_t{1} << (max_level_ - level);
    while (ticks_ % width != 0 || ticks_ + width > target) {
      ++level;
      width >>= 1;
    }
    for (;;) {
      const double dt = step_size(level);
      std::copy(psi_.begin(), psi_.end(), full_.begin());
      prop_.step(full_, dt);
      // psi_ is overwritten by the two half steps; keep the old state in
      // case the step is rejected.
      ComplexBuffer half(psi_);
      prop_.step(half, 0.5 * dt);
      prop_.step(half, 0.5 * dt);
      double err2 = 0.0;
      for (std::size_t i = 0; i < size; ++i) err2 += std::norm(full_[i] - half[i]);
      const double err = std::sqrt(err2 * cell_area_);

      if (err <= settings_.tol_step || level == max_level_) {
        if (err > settings_.tol_step) ++stats_.forced;
        psi_.swap(half);
        ticks_ += width;
        ++stats_.accepted;
        stats_.max_error = std::max(stats_.max_error, err);
        stats_.dt_smallest = std::min(stats_.dt_smallest, dt);
        stats_.dt_largest = std::max(stats_.dt_largest, dt);
        // Strang local error scales as dt^3: doubling costs a factor 8.
        if (err < settings_.tol_step / 16.0 && level > 0)
          level_ = level - 1;
        else
          level_ = level;
        break;
      }
      ++stats_.rejected;
      ++level;
      width >>= 1;
    }
  }

  const double nrm = sum_squares(psi_) * cell_area_;
  if (std::abs(nrm - 1.0) > settings_.norm_tolerance)
    throw NormDriftError("norm drifted to " + format_time(nrm) + " at t=" + format_time(time()));
  const WaveField current = state();
  if (boundary_amplitude(current) > settings_.leak_threshold * peak_amplitude(current))
    throw BoundaryLeakError("wave packet reached the domain boundary at t=" + format_time(time()) +
                            "; enlarge the half width");
}

std::int64_t snapshot_intervals(double t0, double t_end, double dt_snap, double dt_max) {
  if (t_end < t0) throw std::invalid_argument("evolve: t_end precedes the field time");
  if (!(dt_snap > 0.0)) throw std::invalid_argument("evolve: dt_snap must be positive");
  const double ratio = dt_snap / dt_max;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0)
    throw std::invalid_argument("evolve: dt_snap must be an integer multiple of dt_max");
  const double count_real = (t_end - t0) / dt_snap;
  const auto count = static_cast<std::int64_t>(std::llround(count_real));
  if (std::abs(count_real - static_cast<double>(count)) > 1e-9 * std::max(1.0, count_real))
    throw std::invalid_argument("evolve: t_end - t0 must be a multiple of dt_snap");
  return count;
}

StepStats evolve_streaming(const WaveField& field, double t_end, double dt_snap, const SolverSettings& settings,
                           const SnapshotSink& sink) {
  const std::int64_t count = snapshot_intervals(field.t, t_end, dt_snap, settings.dt_max);
  Evolver ev(field, settings);
  auto emit = [&](std::int64_t k) {
    WaveField snap = ev.state();
    snap.t = field.t + static_cast<double>(k) * dt_snap;
    const NormSample sample{snap.t, norm(snap), energy(snap)};
    sink(snap, sample);
  };
  emit(0);
  for (std::int64_t k = 1; k <= count; ++k) {
    ev.advance_to(field.t + static_cast<double>(k) * dt_snap);
    emit(k);
  }
  return ev.stats();
}

SnapshotSeries evolve(const WaveField& field, double t_end, double dt_snap, double dt_max, SolverSettings settings) {
  settings.dt_max = dt_max;
  SnapshotSeries series{field.grid, field.params, settings, dt_snap, {}, {}, {}};
  series.stats = evolve_streaming(field, t_end, dt_snap, settings, [&](const WaveField& w, const NormSample& s) {
    series.snapshots.push_back(w);
    series.history.push_back(s);
  });
  return series;
}

}  // namespace bohm
