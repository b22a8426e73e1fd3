#pragma once

// CSV tables and static log-log SVG charts. Numbers are written with
// std::to_chars (shortest round-trip form, always '.' as separator), so the
// output does not depend on the process locale.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "noisysde/harness.hpp"

namespace noisysde {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_errors_csv(std::ostream& out, const ErrorTable& table) {
  out << "scheme,n,delta1,delta2,q,error,stderr,seconds\n";
  for (const auto& r : table.rows) {
    out << to_string(r.scheme) << ',' << std::to_string(r.n) << ',' << format_double(r.delta1) << ','
        << format_double(r.delta2) << ',' << format_double(r.q) << ','
        << format_double(r.error) << ',' << format_double(r.standard_error) << ','
        << format_double(r.seconds) << '\n';
  }
}

/// Degenerate fits are written as nan.
inline void write_rates_csv(std::ostream& out, std::span<const RateRow> rates) {
  out << "scheme,delta-schedule,slope,r2\n";
  for (const auto& r : rates) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out << to_string(r.scheme) << ',' << r.schedule << ','
        << format_double(r.fit ? r.fit->slope : nan) << ','
        << format_double(r.fit ? r.fit->r2 : nan) << '\n';
  }
}

/// (t, X(t)) rows of one recorded trajectory.
inline void write_trajectory_csv(std::ostream& out, const Mesh& mesh,
                                 std::span<const double> values) {
  out << "t,x\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << format_double(mesh.node(static_cast<std::int64_t>(i))) << ','
        << format_double(values[i]) << '\n';
  }
}

/// Log-log chart of error against n, one polyline per (scheme, schedule).
inline void write_svg_plot(std::ostream& out, const ErrorTable& table, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 440, kLeft = 70, kRight = 190, kTop = 40,
                   kBottom = 50;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::vector<std::pair<std::string, std::vector<const ErrorRow*>>> series;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& r : table.rows) {
    if (!(r.error > 0.0)) continue;
    const std::string label = std::string(to_string(r.scheme)) + " " + r.schedule;
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const auto& s) { return s.first == label; });
    if (it == series.end()) {
      series.push_back({label, {}});
      it = std::prev(series.end());
    }
    it->second.push_back(&r);
    xmin = std::min(xmin, std::log10(static_cast<double>(r.n)));
    xmax = std::max(xmax, std::log10(static_cast<double>(r.n)));
    ymin = std::min(ymin, std::log10(r.error));
    ymax = std::max(ymax, std::log10(r.error));
  }
  if (series.empty()) {
    xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  }
  xmin = std::floor(xmin), xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin), ymax = std::max(std::ceil(ymax), ymin + 1);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto px = [&](double lx) { return kLeft + (lx - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double ly) { return kTop + (ymax - ly) / (ymax - ymin) * ph; };
  const auto f = [](double v) { return format_double(std::round(v * 100.0) / 100.0); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f(kWidth) << "\" height=\""
      << f(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << f(kLeft) << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  out << "<rect x=\"" << f(kLeft) << "\" y=\"" << f(kTop) << "\" width=\"" << f(pw)
      << "\" height=\"" << f(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = xmin; d <= xmax; d += 1.0) {
    out << "<line x1=\"" << f(px(d)) << "\" y1=\"" << f(kTop) << "\" x2=\"" << f(px(d))
        << "\" y2=\"" << f(kTop + ph) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << f(px(d)) << "\" y=\"" << f(kTop + ph + 18)
        << "\" text-anchor=\"middle\">1e" << static_cast<int>(d) << "</text>\n";
  }
  for (double d = ymin; d <= ymax; d += 1.0) {
    out << "<line x1=\"" << f(kLeft) << "\" y1=\"" << f(py(d)) << "\" x2=\"" << f(kLeft + pw)
        << "\" y2=\"" << f(py(d)) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << f(kLeft - 6) << "\" y=\"" << f(py(d) + 4)
        << "\" text-anchor=\"end\">1e" << static_cast<int>(d) << "</text>\n";
  }
  out << "<text x=\"" << f(kLeft + pw / 2) << "\" y=\"" << f(kHeight - 10)
      << "\" text-anchor=\"middle\">n</text>\n";
  out << "<text x=\"16\" y=\"" << f(kTop + ph / 2) << "\" transform=\"rotate(-90 16 "
      << f(kTop + ph / 2) << ")\" text-anchor=\"middle\">error</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].second.size(); ++i) {
      const auto* r = series[s].second[i];
      out << (i ? " " : "") << f(px(std::log10(static_cast<double>(r->n)))) << ','
          << f(py(std::log10(r->error)));
    }
    out << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << f(kLeft + pw + 12) << "\" y1=\"" << f(ly - 4) << "\" x2=\""
        << f(kLeft + pw + 32) << "\" y2=\"" << f(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << f(kLeft + pw + 38) << "\" y=\"" << f(ly) << "\">" << series[s].first
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace noisysde
