#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <vector>

#include "bohm/model.hpp"

namespace bohm {

namespace detail {
void* fftw_allocate(std::size_t bytes);
void fftw_release(void* p) noexcept;
}  // namespace detail

/// Allocator returning SIMD-aligned storage from fftw_malloc.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}
  T* allocate(std::size_t count) { return static_cast<T*>(detail::fftw_allocate(count * sizeof(T))); }
  void deallocate(T* p, std::size_t) noexcept { detail::fftw_release(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

using ComplexBuffer = std::vector<Complex, FftwAllocator<Complex>>;

/// Sine-series representation of complex fields that vanish on the boundary
/// of the square [-L, L]^2:
///
///   Psi(x, y) = sum_{j,k} a_jk sin(kx_j (x + L)) sin(ky_k (y + L)),
///   k_j = pi (j + 1) / 2L,  j = 0 .. n-1.
///
/// Coefficient arrays use the same row-major n x n layout as nodal values
/// (row = y index). Thread-safe: plans are shared and executed with the
/// new-array interface.
class DirichletSpectral {
 public:
  explicit DirichletSpectral(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  double wavenumber(int j) const { return wavenumbers_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& wavenumbers() const { return wavenumbers_; }

  /// In place: nodal values -> coefficients a_jk.
  void analyze(std::span<Complex> data) const;
  /// In place: coefficients -> nodal values.
  void synthesize(std::span<Complex> data) const;

  /// Unnormalized in-place DST-I along both axes; applying it twice scales by
  /// 1 / roundtrip_scale().
  void transform(std::span<Complex> data) const;
  double roundtrip_scale() const { return 0.25 / (static_cast<double>(grid_.n + 1) * (grid_.n + 1)); }

  /// Evaluates d^(ox+oy) Psi / dx^ox dy^oy (orders 0..3 per axis) on the full
  /// (n+2) x (n+2) mesh including boundary nodes; mesh_out is row-major with
  /// row = y mesh index. Odd orders use cosine synthesis, so derivatives on
  /// the boundary come out of the series rather than being assumed zero.
  void synthesize_mesh(std::span<const Complex> coeffs, int order_x, int order_y,
                       std::span<Complex> mesh_out) const;

  /// Nodal values of the Laplacian of the series, on interior nodes.
  void laplacian(std::span<const Complex> coeffs, std::span<Complex> values_out) const;

 private:
  GridSpec grid_;
  std::vector<double> wavenumbers_;
};

/// Copies interior-node values into the (n+2)^2 mesh layout, zero boundary.
void embed_in_mesh(const GridSpec& grid, std::span<const Complex> interior, std::span<Complex> mesh);

}  // namespace bohm
