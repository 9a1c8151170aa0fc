#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace bohm {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by numerical routines (norm drift, node proximity, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The square domain cannot contain the wave packet.
class DomainTooSmallError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Constants of the anharmonic Hamiltonian
///   H = p^2/2m + (wx^2 x^2 + wy^2 y^2)/2 - kappa x y
///       + (alpha/3)(x^3 + y^3) + (beta/4)(x^4 + y^4).
struct PhysParams {
  double mass = 1.0;
  double omega_x = 1.0;
  double omega_y = 1.0;
  double kappa = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double hbar = 1.0;

  /// m = wx = wy = 1, alpha/3 = 0.05, beta/4 = 0.04.
  static PhysParams anharmonic(double kappa, double hbar);

  /// True when the cubic and quartic couplings match the reference regime.
  bool reference_couplings() const;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Uniform square mesh on [-L, L]^2. Only the n x n interior nodes carry
/// unknowns; the wavefunction vanishes on the boundary.
///
/// n + 1 must factor into primes {2, 3, 5, 7}: the sine transforms run on
/// FFTs of length 2(n + 1) and are an order of magnitude slower otherwise.
struct GridSpec {
  double half_width = 8.0;
  int n = 255;

  double dx() const { return 2.0 * half_width / (n + 1); }
  /// Coordinate of interior node i in [0, n). Exactly antisymmetric:
  /// coord(i) == -coord(n - 1 - i).
  double coord(int i) const;
  /// Coordinate of mesh node m in [0, n + 1], boundaries included.
  double mesh_coord(int m) const;

  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

bool is_fast_transform_size(int n);
/// Fast transform size nearest to n (ties resolved upward), never below 16.
int fast_transform_size(int n);

/// Default grid for a given hbar: L = 8 at hbar = 1, otherwise
/// max(6, 8 sqrt(hbar)) + 2; n = ceil(256 (L/8)/sqrt(hbar)) moved to the
/// nearest fast transform size (255 at hbar = 1).
GridSpec default_grid(double hbar);
/// Same resolution rule with an explicit half width.
GridSpec default_grid(double hbar, double half_width);

double potential(const PhysParams& p, double x, double y);
Vec2 grad_potential(const PhysParams& p, double x, double y);
/// Laplacian of the potential.
double laplacian_potential(const PhysParams& p, double x, double y);

/// Physicists' Hermite polynomial H_n(x) by three-term recurrence.
double hermite(int order, double x);

/// Eigenstate psi_nm of the isotropic unit oscillator with Planck constant
/// hbar: exp(-(x^2+y^2)/2hbar) H_n(x/sqrt(hbar)) H_m(y/sqrt(hbar)) /
/// sqrt(2^(n+m) n! m! pi hbar).
double eigenstate(int n, int m, double hbar, double x, double y);

using Complex = std::complex<double>;

/// Complex wavefunction on the interior nodes at one time instant.
/// values[iy * n + ix] is Psi(coord(ix), coord(iy)).
struct WaveField {
  GridSpec grid;
  PhysParams params;
  double t = 0.0;
  std::vector<Complex> values;

  Complex& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * grid.n + ix]; }
  const Complex& at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * grid.n + ix]; }
};

/// Largest |Psi| on the outermost ring of interior nodes.
double boundary_amplitude(const WaveField& f);
double peak_amplitude(const WaveField& f);

/// Samples psi_nm on the interior nodes (real valued).
WaveField sample_eigenstate(const GridSpec& grid, const PhysParams& params, int n, int m);

/// (psi00 + psi01 + psi10 + psi11) / 2. Throws DomainTooSmallError when the
/// outer ring carries more than 1e-8 of the peak amplitude.
WaveField initial_state(const GridSpec& grid, const PhysParams& params);

}  // namespace bohm
