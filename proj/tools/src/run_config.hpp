#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace finlab::cli {

/// Key/value settings of one run. Values come from the config file
/// ([common] first, then the experiment's own section) and are then
/// overridden by command-line flags. Keys outside the experiment's
/// allowed set are rejected with ConfigError.
class RunConfig {
 public:
  RunConfig(std::string experiment, std::set<std::string> allowed_keys);

  /// Reads an INI file; sections other than [common] and the experiment's
  /// own are checked for unknown keys against `known_sections` but ignored.
  void load_ini(const std::filesystem::path& path, const std::map<std::string, std::set<std::string>>& known_sections);
  void set(const std::string& key, const std::string& value, const std::string& origin);

  [[nodiscard]] const std::string& experiment() const { return experiment_; }
  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) > 0; }

  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] std::optional<double> get_optional_double(const std::string& key) const;
  [[nodiscard]] std::size_t get_size(const std::string& key, std::size_t fallback) const;
  [[nodiscard]] std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated numbers, e.g. "1e2,1e4,1e6".
  [[nodiscard]] std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  /// {key: value} of every explicit setting, for the manifest.
  [[nodiscard]] nlohmann::json settings() const;
  /// {key: origin}, where origin is "file:<path>:[section]" or "flag".
  [[nodiscard]] nlohmann::json origins() const;

 private:
  struct Entry {
    std::string value;
    std::string origin;
  };
  [[nodiscard]] const Entry* find(const std::string& key) const;
  [[noreturn]] void bad_value(const std::string& key, const std::string& expected) const;

  std::string experiment_;
  std::set<std::string> allowed_;
  std::map<std::string, Entry> values_;
};

}  // namespace finlab::cli
