#include "bohm/interpolant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bohm {

namespace {

std::string where(double t, double x, double y) {
  std::ostringstream os;
  os << "t=" << t << " (x, y)=(" << x << ", " << y << ")";
  return os.str();
}

// Cubic Hermite basis on [0, 1]: values, first and second derivatives of
// h00, h10, h01, h11.
struct Basis {
  double v[4], d[4], dd[4];
};

Basis hermite_basis(double u) {
  const double u2 = u * u, u3 = u2 * u;
  return {{2 * u3 - 3 * u2 + 1, u3 - 2 * u2 + u, -2 * u3 + 3 * u2, u3 - u2},
          {6 * u2 - 6 * u, 3 * u2 - 4 * u + 1, -6 * u2 + 6 * u, 3 * u2 - 2 * u},
          {12 * u - 6, 6 * u - 4, -12 * u + 6, 6 * u - 2}};
}

}  // namespace

FrameBuilder::FrameBuilder(const GridSpec& grid, const PhysParams& params, bool with_laplacian,
                           bool with_time_derivative)
    : spectral_(grid),
      params_(params),
      with_laplacian_(with_laplacian),
      with_time_derivative_(with_time_derivative),
      potential_(sample_potential(grid, params)),
      coeffs_(static_cast<std::size_t>(grid.n) * grid.n),
      coeffs_t_(coeffs_.size()),
      scratch_(coeffs_.size()),
      mesh_(static_cast<std::size_t>(grid.n + 2) * (grid.n + 2)) {}

void FrameBuilder::fill(std::span<const Complex> coeffs, std::vector<NodeData>& out,
                        std::span<const Complex> nodal) {
  out.resize(mesh_.size());
  if (nodal.empty()) {
    spectral_.synthesize_mesh(coeffs, 0, 0, mesh_);
  } else {
    embed_in_mesh(spectral_.grid(), nodal, mesh_);
  }
  for (std::size_t i = 0; i < mesh_.size(); ++i) out[i].f = mesh_[i];
  spectral_.synthesize_mesh(coeffs, 1, 0, mesh_);
  for (std::size_t i = 0; i < mesh_.size(); ++i) out[i].fx = mesh_[i];
  spectral_.synthesize_mesh(coeffs, 0, 1, mesh_);
  for (std::size_t i = 0; i < mesh_.size(); ++i) out[i].fy = mesh_[i];
  spectral_.synthesize_mesh(coeffs, 1, 1, mesh_);
  for (std::size_t i = 0; i < mesh_.size(); ++i) out[i].fxy = mesh_[i];
}

std::shared_ptr<const SnapshotFrame> FrameBuilder::build(const WaveField& field) {
  const GridSpec& g = spectral_.grid();
  if (!(field.grid == g)) throw std::invalid_argument("frame builder: grid mismatch");
  auto frame = std::make_shared<SnapshotFrame>();
  frame->t = field.t;
  frame->grid = g;
  frame->params = params_;
  frame->peak_abs = peak_amplitude(field);

  std::copy(field.values.begin(), field.values.end(), coeffs_.begin());
  spectral_.analyze(coeffs_);
  fill(coeffs_, frame->psi, field.values);
  const auto& k = spectral_.wavenumbers();
  const int n = g.n;
  auto laplace = [&](const ComplexBuffer& in) {
    for (int ky = 0; ky < n; ++ky)
      for (int kx = 0; kx < n; ++kx) {
        const std::size_t idx = static_cast<std::size_t>(ky) * n + kx;
        scratch_[idx] = -(k[kx] * k[kx] + k[ky] * k[ky]) * in[idx];
      }
  };
  if (!with_time_derivative_) {
    if (with_laplacian_) {
      laplace(coeffs_);
      fill(scratch_, frame->lap, {});
    }
    return frame;
  }

  // dPsi/dt = -(i/hbar) (-(hbar^2/2m) lap Psi + V Psi), assembled in the sine basis.
  for (std::size_t i = 0; i < scratch_.size(); ++i) scratch_[i] = potential_[i] * field.values[i];
  spectral_.analyze(scratch_);
  const double hbar = params_.hbar;
  const double c = hbar * hbar / (2.0 * params_.mass);
  const Complex factor(0.0, -1.0 / hbar);
  for (int ky = 0; ky < n; ++ky)
    for (int kx = 0; kx < n; ++kx) {
      const std::size_t idx = static_cast<std::size_t>(ky) * n + kx;
      coeffs_t_[idx] = factor * (c * (k[kx] * k[kx] + k[ky] * k[ky]) * coeffs_[idx] + scratch_[idx]);
    }
  fill(coeffs_t_, frame->psi_t, {});

  if (with_laplacian_) {
    laplace(coeffs_);
    fill(scratch_, frame->lap, {});
    laplace(coeffs_t_);
    fill(scratch_, frame->lap_t, {});
  }
  return frame;
}

struct FrameWindow::Weights {
  std::size_t base;  // mesh index of the lower-left corner
  std::size_t stride;
  double tw[4];      // temporal weights for f(a), f_t(a), f(b), f_t(b)
  Basis bx, by;
  double h;
};

FrameWindow::FrameWindow(std::shared_ptr<const SnapshotFrame> a, std::shared_ptr<const SnapshotFrame> b)
    : a_(std::move(a)), b_(std::move(b)) {
  if (!a_ || !b_) throw std::invalid_argument("frame window: missing frame");
  if (!(a_->grid == b_->grid)) throw std::invalid_argument("frame window: grids differ");
  if (b_->t < a_->t) throw std::invalid_argument("frame window: frames out of order");
  if (a_ != b_ && (a_->psi_t.empty() || b_->psi_t.empty()))
    throw std::invalid_argument("frame window: frames lack the time derivative");
  if (a_->has_laplacian() != b_->has_laplacian() || (a_->has_laplacian() && a_ != b_ && a_->lap_t.empty()))
    throw std::invalid_argument("frame window: inconsistent Laplacian layers");
  guard_ = 1e-6 * std::max(a_->peak_abs, b_->peak_abs);
}

FrameWindow::Weights FrameWindow::weights(double t, double x, double y) const {
  const GridSpec& g = a_->grid;
  const double L = g.half_width;
  if (!(x > -L && x < L && y > -L && y < L)) throw OutOfDomainError("query outside the domain at " + where(t, x, y));
  const double span = b_->t - a_->t;
  const double slack = 1e-12 * std::max(1.0, std::abs(b_->t));
  if (t < a_->t - slack || t > b_->t + slack)
    throw OutOfDomainError("query outside the frame window at " + where(t, x, y));

  Weights w;
  w.h = g.dx();
  const double sx = (x + L) / w.h, sy = (y + L) / w.h;
  const int cx = std::min(static_cast<int>(sx), g.n);
  const int cy = std::min(static_cast<int>(sy), g.n);
  w.stride = static_cast<std::size_t>(g.n + 2);
  w.base = static_cast<std::size_t>(cy) * w.stride + cx;
  w.bx = hermite_basis(sx - cx);
  w.by = hermite_basis(sy - cy);
  if (a_ != b_ && span > 0.0) {
    const double tau = std::clamp((t - a_->t) / span, 0.0, 1.0);
    const Basis bt = hermite_basis(tau);
    w.tw[0] = bt.v[0];
    w.tw[1] = bt.v[1] * span;
    w.tw[2] = bt.v[2];
    w.tw[3] = bt.v[3] * span;
  } else {
    w.tw[0] = 1.0;
    w.tw[1] = w.tw[2] = w.tw[3] = 0.0;
  }
  return w;
}

namespace {

// Node data of the four cell corners, combined across the two frames.
struct Corners {
  NodeData c[4];
};

Corners combine(const double tw[4], const std::vector<NodeData>& fa, const std::vector<NodeData>& ta,
                const std::vector<NodeData>& fb, const std::vector<NodeData>& tb, std::size_t base,
                std::size_t stride) {
  Corners out;
  const std::size_t idx[4] = {base, base + 1, base + stride, base + stride + 1};
  if (tw[1] == 0.0 && tw[2] == 0.0 && tw[3] == 0.0) {
    for (int k = 0; k < 4; ++k) out.c[k] = fa[idx[k]];
    return out;
  }
  for (int k = 0; k < 4; ++k) {
    const NodeData& p = fa[idx[k]];
    const NodeData& q = ta[idx[k]];
    const NodeData& r = fb[idx[k]];
    const NodeData& s = tb[idx[k]];
    NodeData& o = out.c[k];
    o.f = tw[0] * p.f + tw[1] * q.f + tw[2] * r.f + tw[3] * s.f;
    o.fx = tw[0] * p.fx + tw[1] * q.fx + tw[2] * r.fx + tw[3] * s.fx;
    o.fy = tw[0] * p.fy + tw[1] * q.fy + tw[2] * r.fy + tw[3] * s.fy;
    o.fxy = tw[0] * p.fxy + tw[1] * q.fxy + tw[2] * r.fxy + tw[3] * s.fxy;
  }
  return out;
}

// Bicubic Hermite patch. ux, uy hold h00, h10, h01, h11 (or a derivative of
// them) along each axis; corner k = (i, j), i = k & 1 along x, j = k >> 1
// along y, takes value weight u[2i] and slope weight u[2i + 1] * h.
Complex patch(const Corners& c, const double* ux, const double* uy, double sx, double sy) {
  Complex acc{};
  for (int k = 0; k < 4; ++k) {
    const int i = k & 1, j = k >> 1;
    const double vx = ux[2 * i], px = ux[2 * i + 1] * sx;
    const double vy = uy[2 * j], py = uy[2 * j + 1] * sy;
    acc += c.c[k].f * (vx * vy) + c.c[k].fx * (px * vy) + c.c[k].fy * (vx * py) + c.c[k].fxy * (px * py);
  }
  return acc;
}

}  // namespace

FieldSample FrameWindow::sample(double t, double x, double y) const {
  const Weights w = weights(t, x, y);
  const Corners c = combine(w.tw, a_->psi, a_->psi_t, b_->psi, b_->psi_t, w.base, w.stride);
  const double *vx = w.bx.v, *dx = w.bx.d;
  const double *vy = w.by.v, *dy = w.by.d;
  const double h = w.h, ih = 1.0 / h;
  FieldSample s;
  s.psi = patch(c, vx, vy, h, h);
  s.psi_x = patch(c, dx, vy, h, h) * ih;
  s.psi_y = patch(c, vx, dy, h, h) * ih;
  return s;
}

FieldSample2 FrameWindow::sample2(double t, double x, double y) const {
  if (!a_->has_laplacian() || !b_->has_laplacian())
    throw std::logic_error("quantum potential queries need frames built with Laplacian layers");
  const Weights w = weights(t, x, y);
  const Corners c = combine(w.tw, a_->psi, a_->psi_t, b_->psi, b_->psi_t, w.base, w.stride);
  const Corners l = combine(w.tw, a_->lap, a_->lap_t, b_->lap, b_->lap_t, w.base, w.stride);
  const double h = w.h, ih = 1.0 / h, ih2 = ih * ih;
  const double *vx = w.bx.v, *dx = w.bx.d, *ddx = w.bx.dd;
  const double *vy = w.by.v, *dy = w.by.d, *ddy = w.by.dd;
  FieldSample2 s;
  s.psi = patch(c, vx, vy, h, h);
  s.psi_x = patch(c, dx, vy, h, h) * ih;
  s.psi_y = patch(c, vx, dy, h, h) * ih;
  s.psi_xx = patch(c, ddx, vy, h, h) * ih2;
  s.psi_yy = patch(c, vx, ddy, h, h) * ih2;
  s.psi_xy = patch(c, dx, dy, h, h) * ih2;
  s.lap = patch(l, vx, vy, h, h);
  s.lap_x = patch(l, dx, vy, h, h) * ih;
  s.lap_y = patch(l, vx, dy, h, h) * ih;
  return s;
}

Vec2 FrameWindow::velocity(double t, double x, double y) const {
  const FieldSample s = sample(t, x, y);
  const double r2 = std::norm(s.psi);
  if (!(r2 > guard_ * guard_)) throw NodeProximityError("too close to a node of the wave function at " + where(t, x, y));
  const double c = a_->params.hbar / a_->params.mass / r2;
  const Complex cc = std::conj(s.psi);
  return {c * (cc * s.psi_x).imag(), c * (cc * s.psi_y).imag()};
}

double FrameWindow::quantum_potential(double t, double x, double y) const {
  const FieldSample2 s = sample2(t, x, y);
  if (!(std::abs(s.psi) > guard_)) throw NodeProximityError("too close to a node of the wave function at " + where(t, x, y));
  const Complex inv = 1.0 / s.psi;
  const double gx = (s.psi_x * inv).imag(), gy = (s.psi_y * inv).imag();
  const double hbar = a_->params.hbar;
  // lap R / R = Re(lap Psi / Psi) + |Im(grad Psi / Psi)|^2
  return -hbar * hbar / (2.0 * a_->params.mass) * ((s.lap * inv).real() + gx * gx + gy * gy);
}

Vec2 FrameWindow::quantum_force(double t, double x, double y) const {
  const FieldSample2 s = sample2(t, x, y);
  if (!(std::abs(s.psi) > guard_)) throw NodeProximityError("too close to a node of the wave function at " + where(t, x, y));
  const Complex inv = 1.0 / s.psi;
  const Complex bx = s.psi_x * inv, by = s.psi_y * inv, a = s.lap * inv;
  // d/dj (G_i / Psi) = H_ij / Psi - (G_i / Psi)(G_j / Psi)
  const Complex dbx_dx = s.psi_xx * inv - bx * bx;
  const Complex dbx_dy = s.psi_xy * inv - bx * by;
  const Complex dby_dy = s.psi_yy * inv - by * by;
  const Complex da_dx = s.lap_x * inv - a * bx;
  const Complex da_dy = s.lap_y * inv - a * by;
  const double gx = bx.imag(), gy = by.imag();
  const double dqx = da_dx.real() + 2.0 * (gx * dbx_dx.imag() + gy * dbx_dy.imag());
  const double dqy = da_dy.real() + 2.0 * (gx * dbx_dy.imag() + gy * dby_dy.imag());
  const double hbar = a_->params.hbar;
  const double c = hbar * hbar / (2.0 * a_->params.mass);
  // F = -grad Q = +c grad(lap R / R)
  return {c * dqx, c * dqy};
}

SeriesFrameStream::SeriesFrameStream(std::shared_ptr<const SnapshotSeries> series, bool with_laplacian,
                                     std::size_t first)
    : series_(std::move(series)),
      builder_(series_->grid, series_->params, with_laplacian),
      first_(first),
      index_(first) {
  if (first_ >= series_->snapshots.size()) throw std::invalid_argument("frame stream: start beyond the series");
}

double SeriesFrameStream::t_begin() const { return series_->snapshots[first_].t; }

std::shared_ptr<const SnapshotFrame> SeriesFrameStream::next() {
  if (index_ >= series_->snapshots.size()) return nullptr;
  return builder_.build(series_->snapshots[index_++]);
}

EvolvingFrameStream::EvolvingFrameStream(const WaveField& initial, double t_end, double dt_snap,
                                         const SolverSettings& settings, bool with_laplacian, SnapshotSink observer)
    : evolver_(initial, settings),
      builder_(initial.grid, initial.params, with_laplacian),
      observer_(std::move(observer)),
      t0_(initial.t),
      dt_snap_(dt_snap),
      count_(static_cast<std::size_t>(snapshot_intervals(initial.t, t_end, dt_snap, settings.dt_max))) {}

std::shared_ptr<const SnapshotFrame> EvolvingFrameStream::next() {
  if (index_ > count_) return nullptr;
  const double t = t0_ + static_cast<double>(index_) * dt_snap_;
  if (index_ > 0) evolver_.advance_to(t);
  ++index_;
  WaveField snap = evolver_.state();
  snap.t = t;
  if (observer_) observer_(snap, NormSample{t, norm(snap), energy(snap)});
  return builder_.build(snap);
}

FieldInterpolant::FieldInterpolant(std::shared_ptr<const SnapshotSeries> series, bool with_laplacian,
                                   std::size_t cache_frames)
    : series_(std::move(series)), with_laplacian_(with_laplacian), capacity_(std::max<std::size_t>(cache_frames, 2)) {
  if (!series_ || series_->snapshots.empty()) throw std::invalid_argument("interpolant: empty snapshot series");
}

double FieldInterpolant::t_begin() const { return series_->snapshots.front().t; }
double FieldInterpolant::t_end() const { return series_->snapshots.back().t; }

std::shared_ptr<const SnapshotFrame> FieldInterpolant::frame(std::size_t k) const {
  if (k >= series_->snapshots.size()) throw OutOfDomainError("snapshot index out of range");
  {
    std::lock_guard lock(mutex_);
    for (auto it = cache_.begin(); it != cache_.end(); ++it)
      if (it->first == k) {
        cache_.splice(cache_.begin(), cache_, it);
        return cache_.front().second;
      }
  }
  // Built outside the lock; a concurrent duplicate build is harmless.
  FrameBuilder builder(series_->grid, series_->params, with_laplacian_);
  auto built = builder.build(series_->snapshots[k]);
  std::lock_guard lock(mutex_);
  cache_.emplace_front(k, built);
  while (cache_.size() > capacity_) cache_.pop_back();
  return built;
}

FrameWindow FieldInterpolant::window_at(std::size_t k) const {
  const std::size_t count = series_->snapshots.size();
  if (count == 1) {
    auto f = frame(0);
    return FrameWindow(f, f);
  }
  if (k + 1 >= count) throw OutOfDomainError("snapshot window index out of range");
  return FrameWindow(frame(k), frame(k + 1));
}

FrameWindow FieldInterpolant::window(double t) const {
  const double t0 = t_begin(), t1 = t_end();
  const double slack = 1e-12 * std::max(1.0, std::abs(t1));
  if (t < t0 - slack || t > t1 + slack) {
    std::ostringstream os;
    os << "time " << t << " outside the snapshot range [" << t0 << ", " << t1 << "]";
    throw OutOfDomainError(os.str());
  }
  const std::size_t count = series_->snapshots.size();
  if (count == 1) return window_at(0);
  const double pos = (t - t0) / series_->dt_snap;
  auto k = static_cast<std::size_t>(std::max(0.0, std::floor(pos)));
  k = std::min(k, count - 2);
  return window_at(k);
}

InterpolantFrameStream::InterpolantFrameStream(const FieldInterpolant& interp, std::size_t first)
    : interp_(interp), first_(first), index_(first) {
  if (first_ >= interp_.series().snapshots.size()) throw std::invalid_argument("frame stream: start beyond the series");
}

double InterpolantFrameStream::t_begin() const { return interp_.series().snapshots[first_].t; }

std::shared_ptr<const SnapshotFrame> InterpolantFrameStream::next() {
  if (index_ >= interp_.series().snapshots.size()) return nullptr;
  return interp_.frame(index_++);
}

}  // namespace bohm
