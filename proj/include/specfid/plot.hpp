#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace specfid {

enum class YScale { kLinear, kLog };

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Half-width of a shaded band around y (e.g. one std).
  std::optional<std::vector<double>> band;
};

struct PlotSpec {
  std::vector<PlotSeries> series;
  YScale y_scale = YScale::kLog;
  std::string title;
  std::string x_label = "r";
  std::string y_label = "power";

  /// Throws UsageError on an empty series list or mismatched lengths.
  void validate() const;
};

/// Self-contained SVG line chart. On a log axis, non-positive values are
/// floored to the smallest positive value present.
std::string render_svg(const PlotSpec& spec);
void write_svg(const PlotSpec& spec, const std::filesystem::path& path);

/// Escapes &, <, >, " and ' for XML text and attributes.
std::string xml_escape(std::string_view text);

}  // namespace specfid
