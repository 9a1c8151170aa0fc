#include "bohm/app/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace bohm::app {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 55;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s(buf);
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

std::string tick_label(double v, double step) {
  const int digits = std::max(0, static_cast<int>(-std::floor(std::log10(step) + 1e-9)));
  return fmt(v, digits);
}

double nice_step(double range) {
  if (!(range > 0)) return 1.0;
  const double raw = range / 5.0;
  const double p = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0})
    if (m * p >= raw) return m * p;
  return 10.0 * p;
}

struct Frame {
  double x0, x1, y0, y1;
  double px0, px1, py0, py1;

  double sx(double x) const { return px0 + (x - x0) / (x1 - x0) * (px1 - px0); }
  double sy(double y) const { return py1 - (y - y0) / (y1 - y0) * (py1 - py0); }
};

void axes(std::ostringstream& os, const Frame& f, const std::string& xl, const std::string& yl,
          const std::string& title) {
  os << "<rect x=\"" << fmt(f.px0) << "\" y=\"" << fmt(f.py0) << "\" width=\"" << fmt(f.px1 - f.px0)
     << "\" height=\"" << fmt(f.py1 - f.py0) << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double xs = nice_step(f.x1 - f.x0), ys = nice_step(f.y1 - f.y0);
  for (double v = std::ceil(f.x0 / xs - 1e-9) * xs; v <= f.x1 + 1e-9 * xs; v += xs) {
    const double px = f.sx(v);
    os << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(f.py1) << "\" x2=\"" << fmt(px) << "\" y2=\""
       << fmt(f.py1 + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(f.py1 + 18) << "\" text-anchor=\"middle\">"
       << tick_label(v, xs) << "</text>\n";
  }
  for (double v = std::ceil(f.y0 / ys - 1e-9) * ys; v <= f.y1 + 1e-9 * ys; v += ys) {
    const double py = f.sy(v);
    os << "<line x1=\"" << fmt(f.px0 - 5) << "\" y1=\"" << fmt(py) << "\" x2=\"" << fmt(f.px0) << "\" y2=\""
       << fmt(py) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(f.px0 - 8) << "\" y=\"" << fmt(py + 4) << "\" text-anchor=\"end\">"
       << tick_label(v, ys) << "</text>\n";
  }
  os << "<text x=\"" << fmt(0.5 * (f.px0 + f.px1)) << "\" y=\"" << fmt(f.py1 + 42)
     << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  os << "<text x=\"18\" y=\"" << fmt(0.5 * (f.py0 + f.py1)) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << fmt(0.5 * (f.py0 + f.py1)) << ")\">" << escape(yl) << "</text>\n";
  os << "<text x=\"" << fmt(0.5 * (f.px0 + f.px1)) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << escape(title) << "</text>\n";
}

std::string open_svg(double w, double h) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w, 0) << "\" height=\"" << fmt(h, 0)
     << "\" viewBox=\"0 0 " << fmt(w, 0) << ' ' << fmt(h, 0)
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os.str();
}

// Viridis sampled at nine points, linear in between.
std::string viridis(double u) {
  static constexpr std::array<std::array<int, 3>, 9> stops{{{68, 1, 84},
                                                            {71, 45, 123},
                                                            {59, 82, 139},
                                                            {44, 114, 142},
                                                            {33, 145, 140},
                                                            {40, 174, 128},
                                                            {94, 201, 98},
                                                            {173, 220, 48},
                                                            {253, 231, 37}}};
  u = std::clamp(u, 0.0, 1.0) * 8.0;
  const int i = std::min(7, static_cast<int>(u));
  const double f = u - i;
  char buf[8];
  int c[3];
  for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::lround(stops[i][k] * (1 - f) + stops[i + 1][k] * f));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

}  // namespace

std::string line_plot_svg(const std::vector<PlotSeries>& series, const std::string& x_label,
                          const std::string& y_label, const std::string& title, bool equal_aspect) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double padx = 0.03 * (x1 - x0), pady = 0.05 * (y1 - y0);
  Frame f{x0 - padx, x1 + padx, y0 - pady, y1 + pady, kLeft, kWidth - kRight, kTop, kHeight - kBottom};
  if (equal_aspect) {
    const double sx = (f.px1 - f.px0) / (f.x1 - f.x0), sy = (f.py1 - f.py0) / (f.y1 - f.y0);
    const double s = std::min(sx, sy);
    const double cx = 0.5 * (f.x0 + f.x1), cy = 0.5 * (f.y0 + f.y1);
    const double hx = 0.5 * (f.px1 - f.px0) / s, hy = 0.5 * (f.py1 - f.py0) / s;
    f.x0 = cx - hx, f.x1 = cx + hx, f.y0 = cy - hy, f.y1 = cy + hy;
  }
  std::ostringstream os;
  os << open_svg(kWidth, kHeight);
  axes(os, f, x_label, y_label, title);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      os << (first ? "" : " ") << fmt(f.sx(s.x[i])) << ',' << fmt(f.sy(s.y[i]));
      first = false;
    }
    os << "\"/>\n";
    const double ly = f.py0 + 16 + 16 * static_cast<double>(k);
    os << "<line x1=\"" << fmt(f.px1 - 120) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(f.px1 - 100)
       << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt(f.px1 - 95) << "\" y=\"" << fmt(ly) << "\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string density_svg(const WaveField& field, const std::string& title, int max_cells) {
  const auto& g = field.grid;
  const int n = g.n;
  double peak = 0.0;
  for (const auto& v : field.values) peak = std::max(peak, std::norm(v));
  // Smallest centred square holding all nodes above 1e-4 of the peak.
  int lo = n, hi = -1;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      if (std::norm(field.values[static_cast<std::size_t>(iy) * n + ix]) > 1e-4 * peak) {
        lo = std::min({lo, ix, iy});
        hi = std::max({hi, ix, iy});
      }
  if (hi < 0) lo = 0, hi = n - 1;
  lo = std::min(lo, n - 1 - hi);
  hi = n - 1 - lo;
  const int span = hi - lo + 1;
  const int block = std::max(1, (span + max_cells - 1) / max_cells);
  const int cells = (span + block - 1) / block;

  std::vector<double> avg(static_cast<std::size_t>(cells) * cells, 0.0);
  double top = 0.0;
  for (int by = 0; by < cells; ++by)
    for (int bx = 0; bx < cells; ++bx) {
      double s = 0.0;
      int m = 0;
      for (int iy = lo + by * block; iy < std::min(hi + 1, lo + (by + 1) * block); ++iy)
        for (int ix = lo + bx * block; ix < std::min(hi + 1, lo + (bx + 1) * block); ++ix) {
          s += std::norm(field.values[static_cast<std::size_t>(iy) * n + ix]);
          ++m;
        }
      avg[static_cast<std::size_t>(by) * cells + bx] = s / m;
      top = std::max(top, s / m);
    }

  const double side = kHeight - kTop - kBottom;
  const double w = kLeft + side + kRight + 60;
  const double x0 = g.coord(lo) - 0.5 * g.dx(), x1 = g.coord(hi) + 0.5 * g.dx();
  Frame f{x0, x1, x0, x1, kLeft, kLeft + side, kTop, kTop + side};
  std::ostringstream os;
  os << open_svg(w, kHeight);
  const double cell = side / cells;
  for (int by = 0; by < cells; ++by)
    for (int bx = 0; bx < cells; ++bx) {
      const double u = top > 0 ? avg[static_cast<std::size_t>(by) * cells + bx] / top : 0.0;
      os << "<rect x=\"" << fmt(f.px0 + bx * cell) << "\" y=\"" << fmt(f.py1 - (by + 1) * cell) << "\" width=\""
         << fmt(cell + 0.05) << "\" height=\"" << fmt(cell + 0.05) << "\" fill=\"" << viridis(u) << "\"/>\n";
    }
  axes(os, f, "x", "y", title);
  // Colour bar.
  const double bx = f.px1 + 15;
  for (int k = 0; k < 50; ++k) {
    const double y = f.py1 - (k + 1) * side / 50;
    os << "<rect x=\"" << fmt(bx) << "\" y=\"" << fmt(y) << "\" width=\"14\" height=\"" << fmt(side / 50 + 0.05)
       << "\" fill=\"" << viridis((k + 0.5) / 50) << "\"/>\n";
  }
  os << "<text x=\"" << fmt(bx + 18) << "\" y=\"" << fmt(f.py0 + 10) << "\">" << fmt(top, 3) << "</text>\n";
  os << "<text x=\"" << fmt(bx + 18) << "\" y=\"" << fmt(f.py1) << "\">0</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::vector<Arrow> quiver_arrows(const FrameWindow& window, double t, const Region& region, int per_axis) {
  std::vector<Arrow> out;
  const double hx = (region.x_max - region.x_min) / per_axis, hy = (region.y_max - region.y_min) / per_axis;
  for (int j = 0; j < per_axis; ++j)
    for (int i = 0; i < per_axis; ++i) {
      const double x = region.x_min + (i + 0.5) * hx, y = region.y_min + (j + 0.5) * hy;
      try {
        const Vec2 v = window.velocity(t, x, y);
        out.push_back({x, y, v.x, v.y});
      } catch (const NodeProximityError&) {
      }
    }
  return out;
}

std::string quiver_svg(const std::vector<Arrow>& arrows, const Region& region, const std::string& title) {
  const double side = kHeight - kTop - kBottom;
  const double sx = side / (region.x_max - region.x_min), sy = side / (region.y_max - region.y_min);
  const double s = std::min(sx, sy);
  Frame f{region.x_min, region.x_max, region.y_min, region.y_max, kLeft, kLeft + (region.x_max - region.x_min) * s,
          kTop, kTop + (region.y_max - region.y_min) * s};
  // Arrow length: the lattice spacing for the 90th-percentile speed.
  std::vector<double> speeds;
  for (const auto& a : arrows) speeds.push_back(std::hypot(a.vx, a.vy));
  std::sort(speeds.begin(), speeds.end());
  const double ref = speeds.empty() ? 1.0 : std::max(1e-300, speeds[speeds.size() * 9 / 10]);
  const double per_axis = std::max(1.0, std::sqrt(static_cast<double>(arrows.size())));
  const double len = 0.9 * (f.px1 - f.px0) / per_axis;
  std::ostringstream os;
  os << open_svg(f.px1 + kRight + 10, kHeight);
  axes(os, f, "x", "y", title);
  for (const auto& a : arrows) {
    const double speed = std::hypot(a.vx, a.vy);
    const double l = len * std::min(1.0, speed / ref);
    if (l < 0.5) continue;
    const double ux = a.vx / speed, uy = a.vy / speed;
    const double px = f.sx(a.x), py = f.sy(a.y);
    const double ex = px + l * ux, ey = py - l * uy;
    const double hx = -3 * ux - 2 * uy, hy = 3 * uy - 2 * ux;
    const double kx = -3 * ux + 2 * uy, ky = 3 * uy + 2 * ux;
    os << "<path d=\"M" << fmt(px) << ',' << fmt(py) << " L" << fmt(ex) << ',' << fmt(ey) << " M" << fmt(ex + hx)
       << ',' << fmt(ey + hy) << " L" << fmt(ex) << ',' << fmt(ey) << " L" << fmt(ex + kx) << ',' << fmt(ey + ky)
       << "\" stroke=\"#1f3b73\" fill=\"none\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace bohm::app
