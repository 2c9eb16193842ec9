#include "morl/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "morl/errors.hpp"

namespace morl {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};
constexpr const char* kNdColor = "#777777";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// per-iteration aggregation: average the rows that share an iteration
struct SeriesPoint {
  int iteration;
  Vec means;  // K reward means
  double nd;
};

std::vector<SeriesPoint> aggregate(const std::vector<IterationMetrics>& rows) {
  std::map<int, std::pair<Vec, std::pair<double, int>>> acc;
  for (const auto& m : rows) {
    auto it = acc.find(m.iteration);
    if (it == acc.end()) {
      acc.emplace(m.iteration,
                  std::make_pair(m.mean_rewards,
                                 std::make_pair(m.nd_fraction, 1)));
    } else {
      it->second.first += m.mean_rewards;
      it->second.second.first += m.nd_fraction;
      it->second.second.second += 1;
    }
  }
  std::vector<SeriesPoint> points;
  points.reserve(acc.size());
  for (const auto& [iter, v] : acc) {
    const int n = v.second.second;
    points.push_back({iter, v.first / n, v.second.first / n});
  }
  return points;
}

void axes(std::ostringstream& os, double left, double right, double top,
          double bottom) {
  os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(bottom) << "\" x2=\""
     << fmt(right) << "\" y2=\"" << fmt(bottom)
     << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\""
     << fmt(left) << "\" y2=\"" << fmt(bottom)
     << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = 0.25 * i;
    const double y = bottom - v * (bottom - top);
    os << "<line x1=\"" << fmt(left - 4) << "\" y1=\"" << fmt(y) << "\" x2=\""
       << fmt(left) << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(y + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
}

std::string polyline(const std::vector<std::pair<double, double>>& pts,
                     const std::string& color, bool dashed) {
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
  if (dashed) os << " stroke-dasharray=\"5,3\"";
  os << " points=\"";
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i) os << ' ';
    os << fmt(pts[i].first) << ',' << fmt(pts[i].second);
  }
  os << "\"/>\n";
  return os.str();
}

}  // namespace

double svg_x(double iteration, double it_min, double it_max) {
  if (it_max <= it_min) return 0.5 * (kPlotLeft + kPlotRight);
  return kPlotLeft +
         (iteration - it_min) / (it_max - it_min) * (kPlotRight - kPlotLeft);
}

double svg_y(double value) {
  return kPlotBottom - value * (kPlotBottom - kPlotTop);
}

std::string render_metrics_svg(const std::vector<IterationMetrics>& rows,
                               int K) {
  const auto points = aggregate(rows);
  double it_min = 0.0, it_max = 0.0;
  if (!points.empty()) {
    it_min = points.front().iteration;
    it_max = points.back().iteration;
  }

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgWidth
     << "\" height=\"" << kSvgHeight << "\" viewBox=\"0 0 " << kSvgWidth << ' '
     << kSvgHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  axes(os, kPlotLeft, kPlotRight, kPlotTop, kPlotBottom);
  os << "<text x=\"" << fmt(0.5 * (kPlotLeft + kPlotRight)) << "\" y=\""
     << fmt(kPlotBottom + 28)
     << "\" font-size=\"12\" text-anchor=\"middle\">iteration</text>\n";

  if (!points.empty()) {
    for (int k = 0; k < K; ++k) {
      std::vector<std::pair<double, double>> pts;
      pts.reserve(points.size());
      for (const auto& p : points) {
        pts.emplace_back(svg_x(p.iteration, it_min, it_max), svg_y(p.means[k]));
      }
      os << polyline(pts, kPalette[k % 8], false);
    }
    std::vector<std::pair<double, double>> nd_pts;
    nd_pts.reserve(points.size());
    for (const auto& p : points) {
      nd_pts.emplace_back(svg_x(p.iteration, it_min, it_max), svg_y(p.nd));
    }
    os << polyline(nd_pts, kNdColor, true);
  }

  // legend
  double ly = kPlotTop + 10;
  for (int k = 0; k < K; ++k) {
    os << "<rect x=\"" << fmt(kPlotRight + 16) << "\" y=\"" << fmt(ly - 8)
       << "\" width=\"14\" height=\"4\" fill=\"" << kPalette[k % 8] << "\"/>\n";
    os << "<text x=\"" << fmt(kPlotRight + 36) << "\" y=\"" << fmt(ly)
       << "\" font-size=\"12\">mean_r" << (k + 1) << "</text>\n";
    ly += 18;
  }
  os << "<rect x=\"" << fmt(kPlotRight + 16) << "\" y=\"" << fmt(ly - 8)
     << "\" width=\"14\" height=\"4\" fill=\"" << kNdColor << "\"/>\n";
  os << "<text x=\"" << fmt(kPlotRight + 36) << "\" y=\"" << fmt(ly)
     << "\" font-size=\"12\">nd_fraction</text>\n";
  os << "</svg>\n";
  return os.str();
}

std::string render_compare_svg(const std::vector<RunSeries>& runs) {
  if (runs.size() < 2) {
    throw ConfigError("compare: need at least two runs");
  }
  const int K = runs[0].K;
  for (const auto& r : runs) {
    if (r.K != K) throw ConfigError("compare: runs have mismatched K");
  }

  constexpr double panel_w = 300.0, panel_h = 260.0, gap = 20.0;
  const double width = gap + (panel_w + gap) * K;
  const double height = panel_h + 2 * gap + 20.0 * runs.size();

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
     << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  std::vector<std::vector<SeriesPoint>> series;
  series.reserve(runs.size());
  double it_min = 0.0, it_max = 0.0;
  bool any = false;
  for (const auto& r : runs) {
    series.push_back(aggregate(r.rows));
    if (!series.back().empty()) {
      const double lo = series.back().front().iteration;
      const double hi = series.back().back().iteration;
      it_min = any ? std::min(it_min, lo) : lo;
      it_max = any ? std::max(it_max, hi) : hi;
      any = true;
    }
  }

  for (int k = 0; k < K; ++k) {
    const double left = gap + (panel_w + gap) * k + 36.0;
    const double right = gap + (panel_w + gap) * k + panel_w - 8.0;
    const double top = gap + 16.0;
    const double bottom = gap + panel_h - 24.0;
    os << "<text x=\"" << fmt(0.5 * (left + right)) << "\" y=\"" << fmt(gap + 4)
       << "\" font-size=\"12\" text-anchor=\"middle\">mean_r" << (k + 1)
       << "</text>\n";
    axes(os, left, right, top, bottom);
    for (size_t r = 0; r < runs.size(); ++r) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& p : series[r]) {
        double x = it_max <= it_min
                       ? 0.5 * (left + right)
                       : left + (p.iteration - it_min) / (it_max - it_min) *
                                    (right - left);
        pts.emplace_back(x, bottom - p.means[k] * (bottom - top));
      }
      if (!pts.empty()) os << polyline(pts, kPalette[r % 8], false);
    }
  }

  // run legend under the panels
  double ly = panel_h + gap + 14.0;
  for (size_t r = 0; r < runs.size(); ++r) {
    os << "<rect x=\"" << fmt(gap + 16) << "\" y=\"" << fmt(ly - 8)
       << "\" width=\"14\" height=\"4\" fill=\"" << kPalette[r % 8] << "\"/>\n";
    os << "<text x=\"" << fmt(gap + 36) << "\" y=\"" << fmt(ly)
       << "\" font-size=\"12\">" << runs[r].label << "</text>\n";
    ly += 20.0;
  }
  os << "</svg>\n";
  return os.str();
}

std::string combined_csv(const std::vector<RunSeries>& runs) {
  if (runs.size() < 2) {
    throw ConfigError("compare: need at least two runs");
  }
  const int K = runs[0].K;
  for (const auto& r : runs) {
    if (r.K != K) throw ConfigError("compare: runs have mismatched K");
  }

  std::vector<std::map<int, Vec>> by_iter(runs.size());
  std::set<int> iterations;
  for (size_t r = 0; r < runs.size(); ++r) {
    for (const auto& p : aggregate(runs[r].rows)) {
      by_iter[r].emplace(p.iteration, p.means);
      iterations.insert(p.iteration);
    }
  }

  std::ostringstream os;
  os << "iteration";
  for (const auto& r : runs) {
    for (int k = 1; k <= K; ++k) {
      os << ',' << r.label << "_mean_r" << k;
    }
  }
  os << '\n';
  for (int iter : iterations) {
    os << iter;
    for (size_t r = 0; r < runs.size(); ++r) {
      auto it = by_iter[r].find(iter);
      for (int k = 0; k < K; ++k) {
        os << ',';
        if (it != by_iter[r].end()) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.17g", it->second[k]);
          os << buf;
        }
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace morl
