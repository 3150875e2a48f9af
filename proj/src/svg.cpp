#include "sddestab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace sddestab {

namespace {

constexpr int kWidth = 880;
constexpr int kHeight = 420;
constexpr int kLeft = 62;
constexpr int kRight = 18;
constexpr int kTop = 34;
constexpr int kBottom = 42;
constexpr int kPlotW = kWidth - kLeft - kRight;
constexpr int kPlotH = kHeight - kTop - kBottom;

const char* kSeriesColors[] = {"#1f5fbf", "#c2571a", "#2e8540", "#8033a6", "#a61b3c"};
const char* kModeFills[] = {"#e8f0fb", "#fdefe2", "#e9f6ea", "#f3eafa", "#fbe9ee"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double map_x(double t, double t0, double t1) {
  if (t1 <= t0) return kLeft;
  return kLeft + (t - t0) / (t1 - t0) * kPlotW;
}

double map_y(double v, double v0, double v1) {
  if (v1 <= v0) return kTop + kPlotH / 2.0;
  return kTop + kPlotH - (v - v0) / (v1 - v0) * kPlotH;
}

std::string header(const std::string& title) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"12\">\n",
                kWidth, kHeight, kWidth, kHeight);
  s += buf;
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(kWidth / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">";
  s += title;
  s += "</text>\n";
  return s;
}

std::string axes(double t0, double t1, double v0, double v1, const std::string& y_label) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                "stroke=\"#444\"/>\n",
                kLeft, kTop, kPlotW, kPlotH);
  s += buf;
  for (int k = 0; k <= 5; ++k) {
    const double t = t0 + (t1 - t0) * k / 5.0;
    const double x = map_x(t, t0, t1);
    s += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(kTop + kPlotH) + "\" x2=\"" + fmt(x) +
         "\" y2=\"" + fmt(kTop + kPlotH + 5) + "\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(kTop + kPlotH + 18) +
         "\" text-anchor=\"middle\">" + fmt(t) + "</text>\n";

    const double v = v0 + (v1 - v0) * k / 5.0;
    const double y = map_y(v, v0, v1);
    s += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(kLeft) +
         "\" y2=\"" + fmt(y) + "\" stroke=\"#444\"/>\n";
    s += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\">" +
         fmt(v) + "</text>\n";
  }
  s += "<text x=\"" + fmt(kLeft + kPlotW / 2.0) + "\" y=\"" + fmt(kHeight - 8) +
       "\" text-anchor=\"middle\">t</text>\n";
  s += "<text x=\"14\" y=\"" + fmt(kTop + kPlotH / 2.0) + "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
       fmt(kTop + kPlotH / 2.0) + ")\">" + y_label + "</text>\n";
  return s;
}

std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                     const char* color) {
  std::string s = "<polyline fill=\"none\" stroke=\"";
  s += color;
  s += "\" stroke-width=\"1.3\" points=\"";
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ' ';
    s += fmt(xs[i]) + "," + fmt(ys[i]);
  }
  s += "\"/>\n";
  return s;
}

} // namespace

std::string trajectory_svg(const Trajectory& traj, const std::string& title) {
  const size_t n = traj.n_points();
  std::string s = header(title);
  if (n == 0) return s + "</svg>\n";

  const double t0 = traj.times.front();
  const double t1 = traj.times.back() > t0 ? traj.times.back() : t0 + 1.0;
  double v0 = std::numeric_limits<double>::infinity();
  double v1 = -v0;
  for (size_t k = 0; k < n; ++k) {
    for (int c = 0; c < traj.dim; ++c) {
      v0 = std::min(v0, traj.x(k, c));
      v1 = std::max(v1, traj.x(k, c));
    }
  }
  if (!(v1 > v0)) {
    v0 -= 1.0;
    v1 += 1.0;
  }
  const double pad = 0.05 * (v1 - v0);
  v0 -= pad;
  v1 += pad;

  // mode occupation band in the background
  size_t seg_start = 0;
  for (size_t k = 1; k <= n; ++k) {
    if (k == n || traj.mode[k] != traj.mode[seg_start]) {
      const double xa = map_x(traj.times[seg_start], t0, t1);
      const double xb = map_x(k == n ? traj.times[n - 1] : traj.times[k], t0, t1);
      const int mode = traj.mode[seg_start];
      const char* fill = kModeFills[static_cast<size_t>(mode) % 5];
      s += "<rect x=\"" + fmt(xa) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(xb - xa) +
           "\" height=\"" + fmt(kPlotH) + "\" fill=\"" + fill + "\"/>\n";
      seg_start = k;
    }
  }

  s += axes(t0, t1, v0, v1, "x");
  if (v0 < 0.0 && v1 > 0.0) {
    const double yz = map_y(0.0, v0, v1);
    s += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(yz) + "\" x2=\"" + fmt(kLeft + kPlotW) +
         "\" y2=\"" + fmt(yz) + "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
  }

  const size_t stride = std::max<size_t>(1, n / 4000);
  for (int c = 0; c < traj.dim; ++c) {
    std::vector<double> xs, ys;
    for (size_t k = 0; k < n; k += stride) {
      xs.push_back(map_x(traj.times[k], t0, t1));
      ys.push_back(map_y(traj.x(k, c), v0, v1));
    }
    if ((n - 1) % stride != 0) {
      xs.push_back(map_x(traj.times[n - 1], t0, t1));
      ys.push_back(map_y(traj.x(n - 1, c), v0, v1));
    }
    s += polyline(xs, ys, kSeriesColors[static_cast<size_t>(c) % 5]);
  }

  if (traj.exploded) {
    s += "<text x=\"" + fmt(kLeft + kPlotW - 6) + "\" y=\"" + fmt(kTop + 16) +
         "\" text-anchor=\"end\" fill=\"#a61b3c\">exploded at t = " + fmt(traj.explosion_time) +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string moments_svg(const MomentSeries& series, const std::string& title) {
  std::string s = header(title);
  if (series.times.empty() || series.qbars.empty()) return s + "</svg>\n";

  const double t0 = series.times.front();
  const double t1 = series.times.back() > t0 ? series.times.back() : t0 + 1.0;
  double v0 = std::numeric_limits<double>::infinity();
  double v1 = -v0;
  for (size_t qi = 0; qi < series.qbars.size(); ++qi) {
    for (double m : series.m[qi]) {
      if (m > 0.0) {
        const double lg = std::log10(m);
        v0 = std::min(v0, lg);
        v1 = std::max(v1, lg);
      }
    }
  }
  if (!(v1 > v0)) {
    if (!std::isfinite(v0)) {
      v0 = -1.0;
      v1 = 1.0;
    } else {
      v0 -= 1.0;
      v1 += 1.0;
    }
  }
  const double pad = 0.05 * (v1 - v0);
  v0 -= pad;
  v1 += pad;

  s += axes(t0, t1, v0, v1, "log10 moment");
  for (size_t qi = 0; qi < series.qbars.size(); ++qi) {
    std::vector<double> xs, ys;
    std::string paths;
    for (size_t k = 0; k < series.times.size(); ++k) {
      const double m = series.m[qi][k];
      if (m > 0.0) {
        xs.push_back(map_x(series.times[k], t0, t1));
        ys.push_back(map_y(std::log10(m), v0, v1));
      } else if (!xs.empty()) {
        paths += polyline(xs, ys, kSeriesColors[qi % 5]);
        xs.clear();
        ys.clear();
      }
    }
    if (!xs.empty()) paths += polyline(xs, ys, kSeriesColors[qi % 5]);
    s += paths;
    s += "<text x=\"" + fmt(kLeft + kPlotW - 8) + "\" y=\"" + fmt(kTop + 16 + 15 * qi) +
         "\" text-anchor=\"end\" fill=\"" + kSeriesColors[qi % 5] + "\">order " +
         fmt(series.qbars[qi]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

} // namespace sddestab
