#include "bohm/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace bohm {

namespace detail {

void* fftw_allocate(std::size_t bytes) {
  void* p = fftw_malloc(bytes == 0 ? 1 : bytes);
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

void fftw_release(void* p) noexcept { fftw_free(p); }

}  // namespace detail

namespace {

// 2D real-to-real transform applied to both halves of an interleaved complex
// array (howmany = 2, stride 2).
struct PlanKey {
  int rows;
  int cols;
  fftw_r2r_kind kind_rows;
  fftw_r2r_kind kind_cols;
  auto operator<=>(const PlanKey&) const = default;
};

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const PlanKey& key) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    ComplexBuffer scratch(static_cast<std::size_t>(key.rows) * key.cols);
    auto* p = reinterpret_cast<double*>(scratch.data());
    int dims[2] = {key.rows, key.cols};
    fftw_r2r_kind kinds[2] = {key.kind_rows, key.kind_cols};
    fftw_plan plan = fftw_plan_many_r2r(2, dims, 2, p, nullptr, 2, 1, p, nullptr, 2, 1, kinds, FFTW_ESTIMATE);
    if (plan == nullptr) throw Error("FFTW failed to create a transform plan");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

// Plans are made on fftw_malloc storage; arrays with a different SIMD
// alignment go through an aligned copy.
void execute(const PlanKey& key, Complex* data) {
  fftw_plan plan = PlanCache::instance().get(key);
  auto* p = reinterpret_cast<double*>(data);
  if (fftw_alignment_of(p) == 0) {
    fftw_execute_r2r(plan, p, p);
    return;
  }
  const std::size_t count = static_cast<std::size_t>(key.rows) * key.cols;
  ComplexBuffer aligned(data, data + count);
  auto* q = reinterpret_cast<double*>(aligned.data());
  fftw_execute_r2r(plan, q, q);
  std::copy(aligned.begin(), aligned.end(), data);
}

}  // namespace

DirichletSpectral::DirichletSpectral(const GridSpec& grid) : grid_(grid), wavenumbers_(grid.n) {
  grid_.validate();
  for (int j = 0; j < grid_.n; ++j)
    wavenumbers_[static_cast<std::size_t>(j)] = std::numbers::pi * (j + 1) / (2.0 * grid_.half_width);
}

void DirichletSpectral::analyze(std::span<Complex> data) const {
  const int n = grid_.n;
  if (data.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("analyze: size mismatch");
  execute({n, n, FFTW_RODFT00, FFTW_RODFT00}, data.data());
  // RODFT00 gives 2 sum f sin per axis; orthogonality sum sin^2 = (n+1)/2.
  const double scale = 1.0 / (static_cast<double>(n + 1) * (n + 1));
  for (auto& v : data) v *= scale;
}

void DirichletSpectral::synthesize(std::span<Complex> data) const {
  const int n = grid_.n;
  if (data.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("synthesize: size mismatch");
  execute({n, n, FFTW_RODFT00, FFTW_RODFT00}, data.data());
  for (auto& v : data) v *= 0.25;
}

void DirichletSpectral::transform(std::span<Complex> data) const {
  const int n = grid_.n;
  if (data.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("transform: size mismatch");
  execute({n, n, FFTW_RODFT00, FFTW_RODFT00}, data.data());
}

void DirichletSpectral::synthesize_mesh(std::span<const Complex> coeffs, int order_x, int order_y,
                                        std::span<Complex> mesh_out) const {
  const int n = grid_.n;
  const int m = n + 2;
  if (coeffs.size() != static_cast<std::size_t>(n) * n || mesh_out.size() != static_cast<std::size_t>(m) * m)
    throw std::invalid_argument("synthesize_mesh: size mismatch");
  if (order_x < 0 || order_x > 3 || order_y < 0 || order_y > 3)
    throw std::invalid_argument("synthesize_mesh: derivative order out of range");

  const bool cos_x = order_x % 2 == 1;
  const bool cos_y = order_y % 2 == 1;
  // d^o/dx^o sin(kx) = s k^o sin or cos with s = +1, +1, -1, -1 for o = 0..3.
  const double sign = ((order_x >= 2) != (order_y >= 2)) ? -1.0 : 1.0;
  const int cols = cos_x ? m : n;
  const int rows = cos_y ? m : n;
  const int off_x = cos_x ? 1 : 0;
  const int off_y = cos_y ? 1 : 0;

  ComplexBuffer work(static_cast<std::size_t>(rows) * cols, Complex{});
  for (int ky = 0; ky < n; ++ky) {
    const double fy = std::pow(wavenumbers_[ky], order_y);
    const Complex* src = coeffs.data() + static_cast<std::size_t>(ky) * n;
    Complex* dst = work.data() + static_cast<std::size_t>(ky + off_y) * cols + off_x;
    for (int kx = 0; kx < n; ++kx) dst[kx] = src[kx] * (sign * fy * std::pow(wavenumbers_[kx], order_x));
  }
  execute({rows, cols, cos_y ? FFTW_REDFT00 : FFTW_RODFT00, cos_x ? FFTW_REDFT00 : FFTW_RODFT00}, work.data());

  // RODFT00 output index i is interior node i (mesh node i+1); REDFT00 output
  // index i is mesh node i.
  std::fill(mesh_out.begin(), mesh_out.end(), Complex{});
  for (int r = 0; r < rows; ++r) {
    const int mesh_row = cos_y ? r : r + 1;
    const Complex* src = work.data() + static_cast<std::size_t>(r) * cols;
    Complex* dst = mesh_out.data() + static_cast<std::size_t>(mesh_row) * m + (cos_x ? 0 : 1);
    for (int c = 0; c < cols; ++c) dst[c] = 0.25 * src[c];
  }
}

void DirichletSpectral::laplacian(std::span<const Complex> coeffs, std::span<Complex> values_out) const {
  const int n = grid_.n;
  if (coeffs.size() != static_cast<std::size_t>(n) * n || values_out.size() != coeffs.size())
    throw std::invalid_argument("laplacian: size mismatch");
  ComplexBuffer work(coeffs.size());
  for (int ky = 0; ky < n; ++ky) {
    const double k2y = wavenumbers_[ky] * wavenumbers_[ky];
    for (int kx = 0; kx < n; ++kx) {
      const std::size_t idx = static_cast<std::size_t>(ky) * n + kx;
      work[idx] = -(k2y + wavenumbers_[kx] * wavenumbers_[kx]) * coeffs[idx];
    }
  }
  synthesize(work);
  std::copy(work.begin(), work.end(), values_out.begin());
}

void embed_in_mesh(const GridSpec& grid, std::span<const Complex> interior, std::span<Complex> mesh) {
  const int n = grid.n;
  const int m = n + 2;
  std::fill(mesh.begin(), mesh.end(), Complex{});
  for (int iy = 0; iy < n; ++iy)
    std::copy_n(interior.data() + static_cast<std::size_t>(iy) * n, n,
                mesh.data() + static_cast<std::size_t>(iy + 1) * m + 1);
}

}  // namespace bohm
