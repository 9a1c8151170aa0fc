#pragma once

#include <string>
#include <vector>

#include "bohm/interpolant.hpp"
#include "bohm/vortices.hpp"

namespace bohm::app {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

/// Polylines with axes and a legend. Equal aspect for parametric paths.
std::string line_plot_svg(const std::vector<PlotSeries>& series, const std::string& x_label,
                          const std::string& y_label, const std::string& title, bool equal_aspect = false);

/// |Psi|^2 heatmap (viridis, linear from 0 to the peak), cropped to the
/// square that holds everything above 1e-4 of the peak and block-averaged
/// to at most max_cells per axis.
std::string density_svg(const WaveField& field, const std::string& title, int max_cells = 128);

struct Arrow {
  double x, y, vx, vy;
};

/// Velocity samples on a regular lattice; points near nodes are skipped.
std::vector<Arrow> quiver_arrows(const FrameWindow& window, double t, const Region& region, int per_axis);
std::string quiver_svg(const std::vector<Arrow>& arrows, const Region& region, const std::string& title);

}  // namespace bohm::app
