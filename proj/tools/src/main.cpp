#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "finlab/artifacts.hpp"
#include "finlab/errors.hpp"
#include "run_config.hpp"

#ifndef FINLAB_VERSION
#define FINLAB_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace finlab;
using namespace finlab::cli;

namespace {

enum ExitCode : int { kPass = 0, kVerdictFail = 1, kConfig = 2, kBudget = 3, kInternal = 4 };

std::string flag_name(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::map<std::string, std::set<std::string>> known_sections() {
  std::map<std::string, std::set<std::string>> sections;
  sections["common"] = all_keys();
  for (const auto& c : commands()) sections[c.name] = c.keys;
  return sections;
}

int exit_code_for(const std::exception_ptr& error, std::string& type, std::string& message) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError& e) {
    type = "ConfigError", message = e.what();
    return kConfig;
  } catch (const DomainError& e) {
    type = "DomainError", message = e.what();
    return kConfig;
  } catch (const BudgetError& e) {
    type = "BudgetError", message = e.what();
    return kBudget;
  } catch (const std::exception& e) {
    type = "InternalError", message = e.what();
    return kInternal;
  }
}

/// Runs one experiment and writes <output>/<name>.csv, manifest.json and,
/// with svg = true, <name>.svg. The manifest is written on failure too.
int execute(const Command& command, const RunConfig& cfg) {
  fs::path output;
  try {
    output = cfg.get_string("output", "results");
    fs::create_directories(output);
  } catch (const std::exception& e) {
    std::cerr << "finlab: cannot create output directory: " << e.what() << '\n';
    return kConfig;
  }

  nlohmann::json manifest;
  int code = kPass;
  try {
    if (cfg.has("threads")) {
      const std::size_t threads = cfg.get_size("threads", 0);
      if (threads == 0) throw ConfigError("field 'threads' must be positive");
      ::setenv("FINLAB_THREADS", std::to_string(threads).c_str(), 1);
    }
    const bool svg = cfg.get_bool("svg", false);
    const ConvergenceReport report = command.run(cfg);

    std::vector<std::pair<std::string, std::string>> header{{"tool_version", FINLAB_VERSION}};
    if (report.manifest.contains("config") && report.manifest["config"].contains("seed")) {
      header.emplace_back("seed", report.manifest["config"]["seed"].dump());
    }
    write_csv(output / (command.name + ".csv"), report, header);
    if (svg) {
      CsvTable table{report.x_label, header, report.series};
      table.header.emplace_back("experiment", report.experiment);
      write_svg(output / (command.name + ".svg"), report.series, default_plot_options(table));
    }
    manifest = manifest_json(report, FINLAB_VERSION);
    for (const auto& v : report.verdicts) {
      std::cout << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
    }
    code = report.passed() ? kPass : kVerdictFail;
  } catch (...) {
    std::string type, message;
    code = exit_code_for(std::current_exception(), type, message);
    std::cerr << "finlab: " << type << ": " << message << '\n';
    manifest = {{"experiment", command.name},
                {"config", nlohmann::json::object()},
                {"verdicts", nlohmann::json::array()},
                {"passed", false},
                {"tool_version", FINLAB_VERSION},
                {"error", {{"type", type}, {"message", message}}}};
  }
  manifest["settings"] = cfg.settings();
  manifest["setting_origins"] = cfg.origins();
  manifest["exit_code"] = code;
  try {
    write_json(output / "manifest.json", manifest);
  } catch (const std::exception& e) {
    std::cerr << "finlab: " << e.what() << '\n';
    return code == kPass ? kConfig : code;
  }
  return code;
}

int plot(const fs::path& csv, fs::path svg, const std::string& kind, bool log_x, bool log_y, bool linear_x,
         bool linear_y, const std::string& title) {
  try {
    const CsvTable table = read_csv(csv);
    PlotOptions options = default_plot_options(table);
    if (kind == "scatter") {
      options.lines = false;
    } else if (kind != "line") {
      throw ConfigError("unknown plot kind '" + kind + "' (expected line or scatter)");
    }
    if (log_x) options.x_scale = AxisScale::Log;
    if (linear_x) options.x_scale = AxisScale::Linear;
    if (log_y) options.y_scale = AxisScale::Log;
    if (linear_y) options.y_scale = AxisScale::Linear;
    if (!title.empty()) options.title = title;
    if (svg.empty()) svg = fs::path(csv).replace_extension(".svg");
    write_svg(svg, table.series, options);
    std::cout << svg.string() << '\n';
    return kPass;
  } catch (...) {
    std::string type, message;
    const int code = exit_code_for(std::current_exception(), type, message);
    std::cerr << "finlab plot: " << type << ": " << message << '\n';
    return code;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finlab: trap-model and FIN diffusion experiments"};
  app.set_version_flag("--version", FINLAB_VERSION);
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment");
  std::string experiment;
  std::string config_path;
  std::vector<std::string> sets;
  run->add_option("experiment", experiment, "experiment name (see `finlab list`)")->required();
  run->add_option("-c,--config", config_path, "INI file with [common] and per-experiment sections");
  run->add_option("--set", sets, "key=value override, repeatable");
  std::map<std::string, std::string> flag_values;
  for (const auto& key : all_keys()) {
    flag_values[key];
    run->add_option("--" + flag_name(key), flag_values[key], "override '" + key + "'");
  }

  auto* rerun = app.add_subcommand("rerun", "run again from a manifest.json");
  std::string manifest_path;
  std::string rerun_output;
  rerun->add_option("manifest", manifest_path, "manifest written by an earlier run")->required();
  rerun->add_option("-o,--output", rerun_output, "output directory for the new run")->required();

  auto* plot_cmd = app.add_subcommand("plot", "render a CSV from `run` as SVG");
  std::string csv_path;
  std::string svg_path;
  std::string kind = "line";
  std::string title;
  bool log_x = false, log_y = false, linear_x = false, linear_y = false;
  plot_cmd->add_option("csv", csv_path, "CSV written by `finlab run`")->required();
  plot_cmd->add_option("-o,--output", svg_path, "SVG path (default: CSV path with .svg)");
  plot_cmd->add_option("--kind", kind, "line or scatter");
  plot_cmd->add_option("--title", title, "plot title");
  plot_cmd->add_flag("--log-x", log_x, "log x axis");
  plot_cmd->add_flag("--log-y", log_y, "log y axis");
  plot_cmd->add_flag("--linear-x", linear_x, "linear x axis");
  plot_cmd->add_flag("--linear-y", linear_y, "linear y axis");

  auto* list = app.add_subcommand("list", "list experiments and their keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  if (list->parsed()) {
    for (const auto& c : commands()) {
      std::cout << c.name << ": " << c.summary << "\n  keys:";
      for (const auto& k : c.keys) std::cout << ' ' << k;
      std::cout << '\n';
    }
    return kPass;
  }

  if (plot_cmd->parsed()) return plot(csv_path, svg_path, kind, log_x, log_y, linear_x, linear_y, title);

  try {
    if (rerun->parsed()) {
      std::ifstream in(manifest_path);
      if (!in) throw ConfigError("cannot read " + manifest_path);
      nlohmann::json manifest;
      try {
        manifest = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(manifest_path + ": " + e.what());
      }
      if (!manifest.contains("experiment") || !manifest.contains("settings") || !manifest["settings"].is_object()) {
        throw ConfigError(manifest_path + ": missing 'experiment' or 'settings'");
      }
      experiment = manifest["experiment"].get<std::string>();
      const Command* command = find_command(experiment);
      if (!command) throw ConfigError("unknown experiment '" + experiment + "'");
      RunConfig cfg(command->name, command->keys);
      for (const auto& [key, value] : manifest["settings"].items()) {
        if (!value.is_string()) throw ConfigError(manifest_path + ": setting '" + key + "' is not a string");
        cfg.set(key, value.get<std::string>(), "manifest:" + manifest_path);
      }
      cfg.set("output", rerun_output, "flag");
      return execute(*command, cfg);
    }

    const Command* command = find_command(experiment);
    if (!command) throw ConfigError("unknown experiment '" + experiment + "' (see `finlab list`)");
    RunConfig cfg(command->name, command->keys);
    if (!config_path.empty()) cfg.load_ini(config_path, known_sections());
    for (const auto& [key, value] : flag_values) {
      if (run->count("--" + flag_name(key)) > 0) cfg.set(key, value, "flag --" + flag_name(key));
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1), "flag --set");
    }
    return execute(*command, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "finlab: ConfigError: " << e.what() << '\n';
    return kConfig;
  }
}
