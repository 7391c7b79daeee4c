#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "finlab/errors.hpp"

namespace finlab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  try {
    std::size_t used = 0;
    out = std::stod(t, &used);
    return used == t.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

RunConfig::RunConfig(std::string experiment, std::set<std::string> allowed_keys)
    : experiment_(std::move(experiment)), allowed_(std::move(allowed_keys)) {}

void RunConfig::load_ini(const std::filesystem::path& path,
                         const std::map<std::string, std::set<std::string>>& known_sections) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser::ini_parser_error& e) {
    std::ostringstream msg;
    msg << path.string() << ":" << e.line() << ": " << e.message();
    throw ConfigError(msg.str());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(path.string() + ": key '" + section + "' outside a section; put it under [common]");
    }
    const auto known = known_sections.find(section);
    if (known == known_sections.end()) throw ConfigError(path.string() + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (known->second.count(key) == 0) {
        throw ConfigError(path.string() + ": unknown key '" + key + "' in section [" + section + "]");
      }
    }
  }
  auto apply = [&](const std::string& section) {
    const auto it = tree.find(section);
    if (it == tree.not_found()) return;
    for (const auto& [key, value] : it->second) {
      set(key, value.data(), "file:" + path.string() + ":[" + section + "]");
    }
  };
  // [common] keys that the experiment does not use are skipped, not errors.
  if (const auto it = tree.find("common"); it != tree.not_found()) {
    for (const auto& [key, value] : it->second) {
      if (allowed_.count(key)) set(key, value.data(), "file:" + path.string() + ":[common]");
    }
  }
  apply(experiment_);
}

void RunConfig::set(const std::string& key, const std::string& value, const std::string& origin) {
  if (allowed_.count(key) == 0) {
    throw ConfigError("field '" + key + "' is not a setting of experiment '" + experiment_ + "' (from " + origin + ")");
  }
  values_[key] = Entry{trim(value), origin};
}

const RunConfig::Entry* RunConfig::find(const std::string& key) const {
  if (allowed_.count(key) == 0) throw InternalError("experiment '" + experiment_ + "' reads undeclared key " + key);
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void RunConfig::bad_value(const std::string& key, const std::string& expected) const {
  const Entry* e = find(key);
  throw ConfigError("field '" + key + "' (" + e->origin + "): expected " + expected + ", got '" + e->value + "'");
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  double v = 0.0;
  if (!parse_double(e->value, v) || !std::isfinite(v)) bad_value(key, "a finite number");
  return v;
}

std::optional<double> RunConfig::get_optional_double(const std::string& key) const {
  if (!find(key)) return std::nullopt;
  return get_double(key, 0.0);
}

std::size_t RunConfig::get_size(const std::string& key, std::size_t fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  double v = 0.0;
  if (!parse_double(e->value, v) || v < 0.0 || v != std::floor(v) || v > 1e15) {
    bad_value(key, "a nonnegative integer");
  }
  return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(e->value, &used);
    if (used == e->value.size() && e->value.front() != '-') return v;
  } catch (const std::exception&) {
  }
  bad_value(key, "an unsigned 64-bit integer");
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "yes" || e->value == "on") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no" || e->value == "off") return false;
  bad_value(key, "true or false");
}

std::vector<double> RunConfig::get_list(const std::string& key, const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  std::istringstream in(e->value);
  std::string item;
  while (std::getline(in, item, ',')) {
    double v = 0.0;
    if (!parse_double(item, v) || !std::isfinite(v)) bad_value(key, "a comma-separated list of numbers");
    out.push_back(v);
  }
  if (out.empty()) bad_value(key, "a non-empty list");
  return out;
}

nlohmann::json RunConfig::settings() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, entry] : values_) j[key] = entry.value;
  return j;
}

nlohmann::json RunConfig::origins() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, entry] : values_) j[key] = entry.origin;
  return j;
}

}  // namespace finlab::cli
