#pragma once

// CSV rows and a small self-contained SVG line chart.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace unb {

inline constexpr const char* kCsvHeader =
    "param,protocol,scheme,association,engine,value,ci_half,realizations,seed";

/// One CSV line.
struct CsvRow {
  double param = 0.0;
  std::string protocol;
  std::string scheme;
  std::string association;
  std::string engine;
  double value = 0.0;
  double ci_half = 0.0;
  std::uint64_t realizations = 0;
  std::uint64_t seed = 0;
};

/// %.9g; NaN and infinities spelled out.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string to_csv(const std::vector<CsvRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += format_real(r.param);
    out += ',' + r.protocol + ',' + r.scheme + ',' + r.association + ',' + r.engine + ',';
    out += format_real(r.value);
    out += ',';
    out += format_real(r.ci_half);
    out += ',' + std::to_string(r.realizations) + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool markers = false;  // Monte-Carlo points are drawn as markers
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  std::vector<double> ticks;
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return ticks;
}

}  // namespace detail

/// Renders series as an SVG line chart.
inline std::string render_svg(const ChartSpec& chart, const std::vector<Series>& series) {
  constexpr double W = 760, H = 480, left = 70, right = 220, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y) || (chart.log_y && y <= 0)) continue;
      const double yy = chart.log_y ? std::log10(y) : y;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, yy);
      ymax = std::max(ymax, yy);
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (chart.log_y) {
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
  } else {
    ymin = std::min(ymin, 0.0);
  }
  if (ymax == ymin) ymax = ymin + 1;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) {
    const double yy = chart.log_y ? std::log10(y) : y;
    return top + ph - (yy - ymin) / (ymax - ymin) * ph;
  };

  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::xml_escape(chart.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : detail::nice_ticks(xmin, xmax)) {
    os << "<line x1=\"" << px(t) << "\" y1=\"" << top << "\" x2=\"" << px(t) << "\" y2=\"" << top + ph
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << px(t) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
       << format_real(t) << "</text>\n";
  }
  if (chart.log_y) {
    for (double e = ymin; e <= ymax + 1e-9; e += 1.0) {
      const double y = top + ph - (e - ymin) / (ymax - ymin) * ph;
      os << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + pw << "\" y2=\"" << y
         << "\" stroke=\"#ddd\"/>\n";
      os << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e"
         << static_cast<int>(e) << "</text>\n";
    }
  } else {
    for (double t : detail::nice_ticks(ymin, ymax)) {
      os << "<line x1=\"" << left << "\" y1=\"" << py(t) << "\" x2=\"" << left + pw << "\" y2=\""
         << py(t) << "\" stroke=\"#ddd\"/>\n";
      os << "<text x=\"" << left - 6 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">"
         << format_real(t) << "</text>\n";
    }
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">"
     << detail::xml_escape(chart.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::xml_escape(chart.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = palette[k % std::size(palette)];
    std::ostringstream path;
    path.setf(std::ios::fixed);
    path.precision(2);
    bool first = true;
    for (auto [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y) || (chart.log_y && y <= 0)) {
        first = true;
        continue;
      }
      if (s.markers) {
        os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"none\" stroke=\""
           << colour << "\"/>\n";
      } else {
        path << (first ? 'M' : 'L') << px(x) << ',' << py(y) << ' ';
        first = false;
      }
    }
    if (!s.markers)
      os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << colour
         << "\" stroke-width=\"1.5\"/>\n";
    const double ly = top + 12 + 16.0 * static_cast<double>(k);
    const double lx = left + pw + 12;
    if (s.markers)
      os << "<circle cx=\"" << lx + 10 << "\" cy=\"" << ly - 4 << "\" r=\"3\" fill=\"none\" stroke=\""
         << colour << "\"/>\n";
    else
      os << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 20 << "\" y2=\"" << ly - 4
         << "\" stroke=\"" << colour << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << lx + 26 << "\" y=\"" << ly << "\">" << detail::xml_escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Groups CSV rows into series keyed by protocol label and engine.
inline std::vector<Series> series_from_rows(const std::vector<CsvRow>& rows) {
  std::vector<Series> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    if (r.engine != "analytic" && r.engine != "mc") continue;
    const std::string key = r.protocol + " (" + r.engine + ")";
    auto [it, fresh] = index.try_emplace(key, out.size());
    if (fresh) out.push_back(Series{key, {}, r.engine == "mc"});
    out[it->second].points.emplace_back(r.param, r.value);
  }
  return out;
}

}  // namespace unb
