#include <cmath>
#include <random>

#include "bohm/spectral.hpp"
#include "doctest.h"

using namespace bohm;

namespace {

// Smooth test field, negligible on the boundary of [-8, 8]^2.
Complex field(double x, double y) {
  return std::exp(-(x * x + 0.8 * y * y) / 2.0) * std::polar(1.0, 0.7 * x - 0.3 * y + 0.2 * x * y);
}

// Analytic derivatives of field().
struct Derivs {
  Complex fx, fy, fxy, fxx, lap;
};

Derivs derivs(double x, double y) {
  const Complex f = field(x, y);
  const Complex I(0, 1);
  const Complex gx = -x + I * (0.7 + 0.2 * y);  // d(log f)/dx
  const Complex gy = -0.8 * y + I * (-0.3 + 0.2 * x);
  const Complex gxx = -1.0, gyy = -0.8, gxy = 0.2 * I;
  Derivs d;
  d.fx = f * gx;
  d.fy = f * gy;
  d.fxy = f * (gxy + gx * gy);
  d.fxx = f * (gxx + gx * gx);
  d.lap = f * (gxx + gx * gx + gyy + gy * gy);
  return d;
}

std::vector<Complex> sample(const GridSpec& g) {
  std::vector<Complex> v(static_cast<std::size_t>(g.n) * g.n);
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix) v[static_cast<std::size_t>(iy) * g.n + ix] = field(g.coord(ix), g.coord(iy));
  return v;
}

}  // namespace

TEST_CASE("analyze/synthesize round trip") {
  const GridSpec g{8.0, 63};
  DirichletSpectral s(g);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<Complex> v(static_cast<std::size_t>(g.n) * g.n);
  for (auto& z : v) z = {nd(rng), nd(rng)};
  auto w = v;
  s.analyze(w);
  s.synthesize(w);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(w[i] - v[i]) < 1e-12);

  ComplexBuffer raw(v.begin(), v.end());
  s.transform(raw);
  s.transform(raw);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(raw[i] * s.roundtrip_scale() - v[i]) < 1e-12);
}

TEST_CASE("single sine mode analyzes to one coefficient") {
  const GridSpec g{3.0, 31};
  DirichletSpectral s(g);
  std::vector<Complex> v(static_cast<std::size_t>(g.n) * g.n);
  const int jx = 4, jy = 9;
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix)
      v[static_cast<std::size_t>(iy) * g.n + ix] = Complex(0.5, -2.0) *
                                                   std::sin(s.wavenumber(jx) * (g.coord(ix) + g.half_width)) *
                                                   std::sin(s.wavenumber(jy) * (g.coord(iy) + g.half_width));
  s.analyze(v);
  for (int ky = 0; ky < g.n; ++ky)
    for (int kx = 0; kx < g.n; ++kx) {
      const Complex expect = (kx == jx && ky == jy) ? Complex(0.5, -2.0) : Complex{};
      CHECK(std::abs(v[static_cast<std::size_t>(ky) * g.n + kx] - expect) < 1e-12);
    }
}

TEST_CASE("mesh derivatives match analytic derivatives, boundary nodes included") {
  const GridSpec g{8.0, 127};
  DirichletSpectral s(g);
  auto coeffs = sample(g);
  s.analyze(coeffs);
  const int m = g.n + 2;
  std::vector<Complex> mesh(static_cast<std::size_t>(m) * m);

  auto check = [&](int ox, int oy, auto pick) {
    s.synthesize_mesh(coeffs, ox, oy, mesh);
    double worst = 0.0;
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) {
        const Derivs d = derivs(g.mesh_coord(c), g.mesh_coord(r));
        worst = std::max(worst, std::abs(mesh[static_cast<std::size_t>(r) * m + c] - pick(d, g.mesh_coord(c), g.mesh_coord(r))));
      }
    return worst;
  };
  CHECK(check(0, 0, [](const Derivs&, double x, double y) { return field(x, y); }) < 1e-10);
  CHECK(check(1, 0, [](const Derivs& d, double, double) { return d.fx; }) < 1e-9);
  CHECK(check(0, 1, [](const Derivs& d, double, double) { return d.fy; }) < 1e-9);
  CHECK(check(1, 1, [](const Derivs& d, double, double) { return d.fxy; }) < 1e-9);
  CHECK(check(2, 0, [](const Derivs& d, double, double) { return d.fxx; }) < 1e-8);
}

TEST_CASE("spectral Laplacian matches analytic Laplacian") {
  const GridSpec g{8.0, 127};
  DirichletSpectral s(g);
  auto coeffs = sample(g);
  s.analyze(coeffs);
  std::vector<Complex> lap(coeffs.size());
  s.laplacian(coeffs, lap);
  double worst = 0.0;
  for (int iy = 0; iy < g.n; ++iy)
    for (int ix = 0; ix < g.n; ++ix)
      worst = std::max(worst, std::abs(lap[static_cast<std::size_t>(iy) * g.n + ix] -
                                       derivs(g.coord(ix), g.coord(iy)).lap));
  CHECK(worst < 1e-8);
}

TEST_CASE("unaligned input goes through an aligned copy") {
  const GridSpec g{8.0, 31};
  DirichletSpectral s(g);
  std::vector<Complex> storage(static_cast<std::size_t>(g.n) * g.n + 1);
  std::span<Complex> shifted(storage.data() + 1, static_cast<std::size_t>(g.n) * g.n);
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = Complex(std::sin(0.1 * i), 0.0);
  const std::vector<Complex> copy(shifted.begin(), shifted.end());
  s.analyze(shifted);
  s.synthesize(shifted);
  for (std::size_t i = 0; i < copy.size(); ++i) CHECK(std::abs(shifted[i] - copy[i]) < 1e-12);
}

TEST_CASE("size mismatches are rejected") {
  DirichletSpectral s(GridSpec{8.0, 31});
  std::vector<Complex> wrong(10);
  CHECK_THROWS_AS(s.analyze(wrong), std::invalid_argument);
  std::vector<Complex> coeffs(31 * 31), mesh(33 * 33);
  CHECK_THROWS_AS(s.synthesize_mesh(coeffs, 4, 0, mesh), std::invalid_argument);
}
