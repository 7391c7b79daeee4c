#include "finlab/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "finlab/errors.hpp"

namespace finlab {

namespace {

std::string number(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

std::string sanitize_label(std::string label) {
  std::replace(label.begin(), label.end(), ',', ';');
  std::replace(label.begin(), label.end(), '\n', ' ');
  return label;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, std::size_t line_number) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used == trim(field).size() || trim(field.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("CSV line " + std::to_string(line_number) + ": '" + field + "' is not a number");
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

}  // namespace

void write_csv(std::ostream& out, const ConvergenceReport& report,
               const std::vector<std::pair<std::string, std::string>>& header) {
  out << "# experiment: " << report.experiment << '\n';
  for (const auto& [key, value] : header) out << "# " << key << ": " << value << '\n';
  const std::string x_label = report.x_label.empty() ? "x" : report.x_label;
  out << "series," << x_label << ",value,se,replicas\n";
  for (const auto& s : report.series) {
    const std::string label = sanitize_label(s.label);
    for (const auto& p : s.points) {
      out << label << ',' << number(p.x) << ',' << number(p.value) << ',' << number(p.se) << ',' << p.replicas
          << '\n';
    }
  }
}

void write_csv(const std::filesystem::path& path, const ConvergenceReport& report,
               const std::vector<std::pair<std::string, std::string>>& header) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_csv(out, report, header);
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_number = 0;
  bool have_columns = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      const std::string body = trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon != std::string::npos) table.header.emplace_back(trim(body.substr(0, colon)), trim(body.substr(colon + 1)));
      continue;
    }
    const auto fields = split(line, ',');
    if (!have_columns) {
      if (fields.size() != 5 || fields[0] != "series" || fields[2] != "value" || fields[3] != "se" ||
          fields[4] != "replicas") {
        throw ConfigError("CSV line " + std::to_string(line_number) +
                          ": expected columns series,<x>,value,se,replicas");
      }
      table.x_label = fields[1];
      have_columns = true;
      continue;
    }
    if (fields.size() != 5) {
      throw ConfigError("CSV line " + std::to_string(line_number) + ": expected 5 fields, found " +
                        std::to_string(fields.size()));
    }
    SeriesPoint p;
    p.x = parse_number(fields[1], line_number);
    p.value = parse_number(fields[2], line_number);
    p.se = parse_number(fields[3], line_number);
    const double replicas = parse_number(fields[4], line_number);
    if (replicas < 0.0) throw ConfigError("CSV line " + std::to_string(line_number) + ": negative replica count");
    p.replicas = static_cast<std::size_t>(replicas);
    auto it = std::find_if(table.series.begin(), table.series.end(),
                           [&](const Series& s) { return s.label == fields[0]; });
    if (it == table.series.end()) it = table.series.insert(table.series.end(), Series{fields[0], {}});
    it->points.push_back(p);
  }
  if (!have_columns) throw ConfigError("CSV has no column header");
  if (table.series.empty()) throw ConfigError("CSV has no data rows");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return read_csv(in);
}

nlohmann::json manifest_json(const ConvergenceReport& report, const std::string& tool_version) {
  nlohmann::json j = report.manifest;
  j["experiment"] = report.experiment;
  if (!j.contains("config")) j["config"] = nlohmann::json::object();
  if (!j.contains("seed") && j["config"].contains("seed")) j["seed"] = j["config"]["seed"];
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : report.verdicts) verdicts.push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
  j["verdicts"] = verdicts;
  j["passed"] = report.passed();
  j["timings"] = {{"wall_seconds", report.wall_seconds}};
  j["tool_version"] = tool_version;
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

PlotOptions default_plot_options(const CsvTable& table) {
  PlotOptions options;
  options.x_label = table.x_label;
  for (const auto& [key, value] : table.header) {
    if (key == "experiment") options.title = value;
  }
  if (table.x_label == "t" || table.x_label == "t_w" || table.x_label == "eps" || table.x_label == "tau" ||
      table.x_label == "s" || table.x_label == "theta") {
    options.x_scale = AxisScale::Log;
  }
  return options;
}

std::string render_svg(const std::vector<Series>& series, const PlotOptions& options) {
  const bool log_x = options.x_scale == AxisScale::Log;
  const bool log_y = options.y_scale == AxisScale::Log;
  auto drawable = [&](const SeriesPoint& p) {
    return std::isfinite(p.x) && std::isfinite(p.value) && (!log_x || p.x > 0.0) && (!log_y || p.value > 0.0);
  };
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      if (!drawable(p)) continue;
      x_lo = std::min(x_lo, tx(p.x));
      x_hi = std::max(x_hi, tx(p.x));
      const double lo = options.error_bars && (!log_y || p.value - p.se > 0.0) ? p.value - p.se : p.value;
      y_lo = std::min(y_lo, ty(lo));
      y_hi = std::max(y_hi, ty(p.value + (options.error_bars ? p.se : 0.0)));
    }
  }
  if (!std::isfinite(x_lo)) {
    x_lo = 0.0;
    x_hi = 1.0;
    y_lo = 0.0;
    y_hi = 1.0;
  }
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi == y_lo) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double margin_left = 70, margin_right = 150, margin_top = 40, margin_bottom = 50;
  const double plot_w = options.width - margin_left - margin_right;
  const double plot_h = options.height - margin_top - margin_bottom;
  auto px = [&](double x) { return margin_left + (tx(x) - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return margin_top + (1.0 - (ty(y) - y_lo) / (y_hi - y_lo)) * plot_h; };

  static const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                        "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::ostringstream svg;
  svg << std::setprecision(6);
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << options.width << "\" height=\""
      << options.height << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\">\n"
      << "  <metadata>x_scale=" << (log_x ? "log" : "linear") << " y_scale=" << (log_y ? "log" : "linear")
      << " kind=" << (options.lines ? "line" : "scatter") << " x_label=" << xml_escape(options.x_label) << " y_label=" << xml_escape(options.y_label)
      << "</metadata>\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" fill=\"white\"/>\n"
      << "  <rect x=\"" << margin_left << "\" y=\"" << margin_top << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!options.title.empty()) {
    svg << "  <text x=\"" << margin_left + plot_w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(options.title) << "</text>\n";
  }
  // Ticks at five evenly spaced positions in transformed coordinates.
  for (int k = 0; k <= 4; ++k) {
    const double fx = x_lo + (x_hi - x_lo) * k / 4.0;
    const double fy = y_lo + (y_hi - y_lo) * k / 4.0;
    const double sx = margin_left + plot_w * k / 4.0;
    const double sy = margin_top + plot_h * (1.0 - k / 4.0);
    const double vx = log_x ? std::pow(10.0, fx) : fx;
    const double vy = log_y ? std::pow(10.0, fy) : fy;
    svg << "  <line x1=\"" << sx << "\" y1=\"" << margin_top + plot_h << "\" x2=\"" << sx << "\" y2=\""
        << margin_top + plot_h + 5 << "\" stroke=\"black\"/>\n"
        << "  <text x=\"" << sx << "\" y=\"" << margin_top + plot_h + 18
        << "\" text-anchor=\"middle\" font-size=\"10\">" << std::setprecision(3) << vx << "</text>\n"
        << "  <line x1=\"" << margin_left - 5 << "\" y1=\"" << sy << "\" x2=\"" << margin_left << "\" y2=\"" << sy
        << "\" stroke=\"black\"/>\n"
        << "  <text x=\"" << margin_left - 8 << "\" y=\"" << sy + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
        << vy << "</text>\n"
        << std::setprecision(6);
  }
  svg << "  <text x=\"" << margin_left + plot_w / 2 << "\" y=\"" << options.height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(options.x_label)
      << (log_x ? " (log)" : "") << "</text>\n"
      << "  <text x=\"16\" y=\"" << margin_top + plot_h / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << margin_top + plot_h / 2 << ")\">" << xml_escape(options.y_label)
      << (log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = palette[i % (sizeof(palette) / sizeof(palette[0]))];
    svg << "  <g stroke=\"" << color << "\" fill=\"" << color << "\">\n";
    if (options.lines) {
      svg << "    <polyline fill=\"none\" points=\"";
      for (const auto& p : s.points) {
        if (drawable(p)) svg << px(p.x) << ',' << py(p.value) << ' ';
      }
      svg << "\"/>\n";
    }
    for (const auto& p : s.points) {
      if (!drawable(p)) continue;
      svg << "    <circle cx=\"" << px(p.x) << "\" cy=\"" << py(p.value) << "\" r=\"2.5\"/>\n";
      if (options.error_bars && p.se > 0.0) {
        const double lo = p.value - p.se;
        const double y1 = (!log_y || lo > 0.0) ? py(lo) : margin_top + plot_h;
        svg << "    <line x1=\"" << px(p.x) << "\" y1=\"" << y1 << "\" x2=\"" << px(p.x) << "\" y2=\""
            << py(p.value + p.se) << "\"/>\n";
      }
    }
    const double ly = margin_top + 14.0 * static_cast<double>(i) + 8.0;
    svg << "    <text x=\"" << margin_left + plot_w + 10 << "\" y=\"" << ly + 4
        << "\" font-size=\"10\" stroke=\"none\">" << xml_escape(s.label) << "</text>\n  </g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_svg(const std::filesystem::path& path, const std::vector<Series>& series, const PlotOptions& options) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << render_svg(series, options);
}

}  // namespace finlab
