#include "specfid/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "specfid/errors.hpp"

namespace specfid {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void PlotSpec::validate() const {
  if (series.empty()) throw UsageError("plot needs at least one series");
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw UsageError("plot series '" + s.label + "': x and y lengths differ");
    if (s.band && s.band->size() != s.y.size()) throw UsageError("plot series '" + s.label + "': band length differs");
    for (double v : s.x)
      if (!std::isfinite(v)) throw NumericError("plot series '" + s.label + "': non-finite x");
    for (double v : s.y)
      if (!std::isfinite(v)) throw NumericError("plot series '" + s.label + "': non-finite y");
  }
}

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_svg(const PlotSpec& spec) {
  spec.validate();
  const bool log_y = spec.y_scale == YScale::kLog;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  double min_positive = std::numeric_limits<double>::infinity();
  auto visit_y = [&](double v) {
    if (v > 0.0) min_positive = std::min(min_positive, v);
  };
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      const double half = s.band ? std::abs((*s.band)[i]) : 0.0;
      visit_y(s.y[i]);
      visit_y(s.y[i] - half);
      visit_y(s.y[i] + half);
    }
  }
  if (!std::isfinite(min_positive)) min_positive = 1.0;

  auto transform = [&](double v) { return log_y ? std::log10(std::max(v, min_positive)) : v; };
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double half = s.band ? std::abs((*s.band)[i]) : 0.0;
      for (double v : {s.y[i] - half, s.y[i], s.y[i] + half}) {
        y_min = std::min(y_min, transform(v));
        y_max = std::max(y_max, transform(v));
      }
    }
  }
  if (!std::isfinite(x_min)) x_min = 0.0, x_max = 1.0;
  if (!std::isfinite(y_min)) y_min = 0.0, y_max = 1.0;
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double v) { return kTop + (1.0 - (transform(v) - y_min) / (y_max - y_min)) * plot_h; };
  auto py_raw = [&](double t) { return kTop + (1.0 - (t - y_min) / (y_max - y_min)) * plot_h; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << xml_escape(spec.title) << "</text>\n"
      << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w) << "\" height=\""
      << num(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";

  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double xv = x_min + (x_max - x_min) * i / kTicks;
    const double tv = y_min + (y_max - y_min) * i / kTicks;
    svg << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kHeight - kBottom + 16)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(xv) << "</text>\n";
    const std::string label = log_y ? "1e" + tick_label(std::round(tv * 10.0) / 10.0) : tick_label(tv);
    svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py_raw(tv) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(label) << "</text>\n"
        << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py_raw(tv)) << "\" x2=\"" << num(kLeft + plot_w)
        << "\" y2=\"" << num(py_raw(tv)) << "\" stroke=\"#dddddd\"/>\n";
  }
  svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(spec.x_label)
      << "</text>\n"
      << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\" transform=\"rotate(-90 16 " << num(kTop + plot_h / 2) << ")\">"
      << xml_escape(spec.y_label + (log_y ? " (log)" : "")) << "</text>\n";

  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    if (s.band && !s.y.empty()) {
      svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.y.size(); ++i) svg << num(px(s.x[i])) << ',' << num(py(s.y[i] + std::abs((*s.band)[i]))) << ' ';
      for (std::size_t i = s.y.size(); i-- > 0;) svg << num(px(s.x[i])) << ',' << num(py(s.y[i] - std::abs((*s.band)[i]))) << ' ';
      svg << "\"/>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.y.size(); ++i) svg << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    svg << "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(si);
    svg << "<line x1=\"" << num(kWidth - kRight + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kWidth - kRight + 30)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(kWidth - kRight + 36) << "\" y=\"" << num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg(const PlotSpec& spec, const std::filesystem::path& path) {
  const std::string text = render_svg(spec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace specfid
