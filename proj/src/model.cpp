#include "bohm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bohm {

PhysParams PhysParams::anharmonic(double kappa, double hbar) {
  PhysParams p;
  p.kappa = kappa;
  p.alpha = 3.0 * 0.05;
  p.beta = 4.0 * 0.04;
  p.hbar = hbar;
  return p;
}

bool PhysParams::reference_couplings() const {
  return std::abs(alpha / 3.0 - 0.05) < 1e-12 && std::abs(beta / 4.0 - 0.04) < 1e-12;
}

void PhysParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (!(omega_x > 0.0) || !(omega_y > 0.0)) throw std::invalid_argument("frequencies must be positive");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("quartic coefficient beta must be non-negative");
  if (!std::isfinite(kappa) || !std::isfinite(alpha)) throw std::invalid_argument("couplings must be finite");
}

double GridSpec::coord(int i) const {
  return static_cast<double>(2 * i - (n - 1)) * half_width / (n + 1);
}

double GridSpec::mesh_coord(int m) const {
  return static_cast<double>(2 * m - (n + 1)) * half_width / (n + 1);
}

void GridSpec::validate() const {
  if (!(half_width > 0.0)) throw std::invalid_argument("grid half width must be positive");
  if (n < 16) throw std::invalid_argument("grid needs at least 16 interior nodes per axis");
  if (!is_fast_transform_size(n))
    throw std::invalid_argument("grid size n=" + std::to_string(n) +
                                " unsupported: n+1 must factor into primes 2, 3, 5, 7");
}

bool is_fast_transform_size(int n) {
  if (n < 1) return false;
  int m = n + 1;
  for (int p : {2, 3, 5, 7})
    while (m % p == 0) m /= p;
  return m == 1;
}

int fast_transform_size(int n) {
  n = std::max(n, 16);
  for (int d = 0;; ++d) {
    if (is_fast_transform_size(n + d)) return n + d;
    if (n - d >= 16 && is_fast_transform_size(n - d)) return n - d;
  }
}

GridSpec default_grid(double hbar) {
  const double half_width = hbar == 1.0 ? 8.0 : std::max(6.0, 8.0 * std::sqrt(hbar)) + 2.0;
  return default_grid(hbar, half_width);
}

GridSpec default_grid(double hbar, double half_width) {
  GridSpec g;
  g.half_width = half_width;
  g.n = fast_transform_size(static_cast<int>(std::ceil(256.0 * (half_width / 8.0) / std::sqrt(hbar) - 1e-9)));
  return g;
}

double potential(const PhysParams& p, double x, double y) {
  const double x2 = x * x;
  const double y2 = y * y;
  return 0.5 * (p.omega_x * p.omega_x * x2 + p.omega_y * p.omega_y * y2) - p.kappa * (x * y) +
         (p.alpha / 3.0) * (x2 * x + y2 * y) + (p.beta / 4.0) * (x2 * x2 + y2 * y2);
}

Vec2 grad_potential(const PhysParams& p, double x, double y) {
  return {p.omega_x * p.omega_x * x - p.kappa * y + p.alpha * x * x + p.beta * x * x * x,
          p.omega_y * p.omega_y * y - p.kappa * x + p.alpha * y * y + p.beta * y * y * y};
}

double laplacian_potential(const PhysParams& p, double x, double y) {
  return p.omega_x * p.omega_x + p.omega_y * p.omega_y + 2.0 * p.alpha * (x + y) +
         3.0 * p.beta * (x * x + y * y);
}

double hermite(int order, double x) {
  if (order < 0) throw std::invalid_argument("Hermite order must be non-negative");
  if (order == 0) return 1.0;
  double prev = 1.0;
  double cur = 2.0 * x;
  for (int k = 1; k < order; ++k) {
    const double next = 2.0 * x * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double eigenstate(int n, int m, double hbar, double x, double y) {
  if (n < 0 || m < 0) throw std::invalid_argument("eigenstate orders must be non-negative");
  const double s = std::sqrt(hbar);
  const double norm = std::sqrt(std::ldexp(1.0, n + m) * std::tgamma(n + 1.0) * std::tgamma(m + 1.0) *
                                std::numbers::pi * hbar);
  return std::exp(-(x * x + y * y) / (2.0 * hbar)) * hermite(n, x / s) * hermite(m, y / s) / norm;
}

double boundary_amplitude(const WaveField& f) {
  const int n = f.grid.n;
  double b = 0.0;
  for (int i = 0; i < n; ++i) {
    b = std::max({b, std::abs(f.at(i, 0)), std::abs(f.at(i, n - 1)), std::abs(f.at(0, i)),
                  std::abs(f.at(n - 1, i))});
  }
  return b;
}

double peak_amplitude(const WaveField& f) {
  double p = 0.0;
  for (const auto& v : f.values) p = std::max(p, std::abs(v));
  return p;
}

namespace {

// One-dimensional oscillator eigenfunction; psi_nm(x, y) = u_n(x) u_m(y).
double oscillator_1d(int n, double hbar, double x) {
  const double norm = std::sqrt(std::ldexp(1.0, n) * std::tgamma(n + 1.0) * std::sqrt(std::numbers::pi * hbar));
  return std::exp(-x * x / (2.0 * hbar)) * hermite(n, x / std::sqrt(hbar)) / norm;
}

}  // namespace

WaveField sample_eigenstate(const GridSpec& grid, const PhysParams& params, int n, int m) {
  grid.validate();
  params.validate();
  if (n < 0 || m < 0) throw std::invalid_argument("eigenstate orders must be non-negative");
  std::vector<double> ux(grid.n), uy(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    ux[i] = oscillator_1d(n, params.hbar, grid.coord(i));
    uy[i] = oscillator_1d(m, params.hbar, grid.coord(i));
  }
  WaveField f{grid, params, 0.0, std::vector<Complex>(static_cast<std::size_t>(grid.n) * grid.n)};
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = 0; ix < grid.n; ++ix) f.at(ix, iy) = ux[ix] * uy[iy];
  return f;
}

WaveField initial_state(const GridSpec& grid, const PhysParams& params) {
  grid.validate();
  params.validate();
  // (psi00 + psi01 + psi10 + psi11)/2 = g(x) g(y)/2 with g = u0 + u1; the
  // product form keeps the sampled field exactly symmetric under x <-> y.
  std::vector<double> g(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.coord(i);
    g[i] = oscillator_1d(0, params.hbar, x) + oscillator_1d(1, params.hbar, x);
  }
  WaveField f{grid, params, 0.0, std::vector<Complex>(static_cast<std::size_t>(grid.n) * grid.n)};
  for (int iy = 0; iy < grid.n; ++iy)
    for (int ix = 0; ix < grid.n; ++ix) f.at(ix, iy) = 0.5 * g[ix] * g[iy];
  const double peak = peak_amplitude(f);
  if (boundary_amplitude(f) > 1e-8 * peak)
    throw DomainTooSmallError("initial wave packet reaches the boundary: half width " +
                              std::to_string(grid.half_width) + " too small for hbar " +
                              std::to_string(params.hbar));
  return f;
}

}  // namespace bohm
