#pragma once

#include <string>
#include <vector>

#include "morl/trainer.hpp"

namespace morl {

// Hand-rolled SVG line charts: fixed geometry, printf-formatted coordinates,
// byte-deterministic output for identical input.

// single-run chart geometry (pixel coordinates)
constexpr double kSvgWidth = 720.0;
constexpr double kSvgHeight = 480.0;
constexpr double kPlotLeft = 60.0;
constexpr double kPlotRight = 560.0;
constexpr double kPlotTop = 20.0;
constexpr double kPlotBottom = 440.0;

// Linear axis maps. Values live in [0,1] (reward means and nd_fraction).
double svg_x(double iteration, double it_min, double it_max);
double svg_y(double value);

// Rows are grouped by iteration and averaged across the reward-conditioned
// rows, giving one curve per reward plus the nd_fraction curve.
std::string render_metrics_svg(const std::vector<IterationMetrics>& rows,
                               int K);

struct RunSeries {
  std::string label;
  int K = 0;
  std::vector<IterationMetrics> rows;
};

// K small-multiple panels (one per reward), one polyline per run in each,
// aligned by iteration index.
std::string render_compare_svg(const std::vector<RunSeries>& runs);

// union of iterations; one column per (run, reward), blank where a run has
// no row for that iteration
std::string combined_csv(const std::vector<RunSeries>& runs);

}  // namespace morl
