#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "finlab/experiments.hpp"

namespace finlab {

/// CSV layout: "# key: value" header comments, then the column line
/// "series,<x>,value,se,replicas" and one row per point. Numbers use 17
/// significant digits so a rerun is byte-identical.
void write_csv(std::ostream& out, const ConvergenceReport& report,
               const std::vector<std::pair<std::string, std::string>>& header = {});
void write_csv(const std::filesystem::path& path, const ConvergenceReport& report,
               const std::vector<std::pair<std::string, std::string>>& header = {});

/// Parsed CSV as written by write_csv. Throws ConfigError on schema
/// mismatch or when there are no data rows.
struct CsvTable {
  std::string x_label;
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<Series> series;
};
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

/// {experiment, config, seed, verdicts[], timings, tool_version, ...}.
nlohmann::json manifest_json(const ConvergenceReport& report, const std::string& tool_version);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

enum class AxisScale { Linear, Log };

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label = "value";
  AxisScale x_scale = AxisScale::Linear;
  AxisScale y_scale = AxisScale::Linear;
  bool error_bars = true;
  bool lines = true;  ///< false draws markers only
  int width = 640;
  int height = 420;
};

/// SVG 1.1 line plot, one polyline per series with +/- se bars. Axis
/// scales are recorded in the <metadata> element. Points that cannot be
/// drawn on a log axis (non-positive) are skipped.
std::string render_svg(const std::vector<Series>& series, const PlotOptions& options);
void write_svg(const std::filesystem::path& path, const std::vector<Series>& series, const PlotOptions& options);

/// Default plot choice for a CSV: log x for t, t_w, eps and tau columns.
PlotOptions default_plot_options(const CsvTable& table);

}  // namespace finlab
