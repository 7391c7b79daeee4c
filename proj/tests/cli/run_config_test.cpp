#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "commands.hpp"
#include "finlab/errors.hpp"
#include "run_config.hpp"

using namespace finlab;
using namespace finlab::cli;

namespace {

std::filesystem::path write_ini(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

std::map<std::string, std::set<std::string>> sections() {
  std::map<std::string, std::set<std::string>> s{{"common", all_keys()}};
  for (const auto& c : commands()) s[c.name] = c.keys;
  return s;
}

RunConfig qt_config() { return RunConfig("qt", find_command("qt")->keys); }

}  // namespace

TEST_CASE("every documented experiment is registered") {
  for (const char* name : {"sample-env", "qt", "aging", "subaging", "novelty", "fin-q", "scaling", "self-similarity",
                           "law-convergence", "coupling-check"}) {
    CAPTURE(name);
    REQUIRE(find_command(name) != nullptr);
    CHECK(find_command(name)->keys.count("output") == 1);
  }
  CHECK(find_command("plot") == nullptr);
}

TEST_CASE("file values, section precedence and flag overrides") {
  const auto path = write_ini("finlab_cfg_a.ini", "[common]\nseed = 3\nreplicas = 20\neps = 0.1\n\n[qt]\nreplicas = 50\nt = 1e2, 1e4\n");
  RunConfig cfg = qt_config();
  cfg.load_ini(path, sections());
  CHECK(cfg.get_u64("seed", 1) == 3);
  CHECK(cfg.get_size("replicas", 1) == 50);
  CHECK(cfg.get_list("t", {}) == std::vector<double>{1e2, 1e4});
  CHECK_FALSE(cfg.has("fin_s"));
  cfg.set("replicas", "70", "flag");
  CHECK(cfg.get_size("replicas", 1) == 70);
  CHECK(cfg.origins()["seed"].get<std::string>().find("[common]") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("unknown keys and sections are rejected") {
  RunConfig cfg = qt_config();
  CHECK_THROWS_AS(cfg.set("eta_override", "1", "flag"), ConfigError);
  const auto bad_key = write_ini("finlab_cfg_b.ini", "[qt]\nrepilcas = 5\n");
  CHECK_THROWS_WITH_AS(cfg.load_ini(bad_key, sections()), doctest::Contains("repilcas"), ConfigError);
  const auto bad_section = write_ini("finlab_cfg_c.ini", "[qtt]\nseed = 5\n");
  CHECK_THROWS_WITH_AS(cfg.load_ini(bad_section, sections()), doctest::Contains("qtt"), ConfigError);
  const auto syntax = write_ini("finlab_cfg_d.ini", "[qt]\nseed 5\n");
  CHECK_THROWS_WITH_AS(cfg.load_ini(syntax, sections()), doctest::Contains(":2:"), ConfigError);
  for (const auto& p : {bad_key, bad_section, syntax}) std::filesystem::remove(p);
}

TEST_CASE("values are typed") {
  RunConfig cfg = qt_config();
  cfg.set("replicas", "2.5", "flag");
  CHECK_THROWS_AS((void)cfg.get_size("replicas", 1), ConfigError);
  cfg.set("replicas", "1e3", "flag");
  CHECK(cfg.get_size("replicas", 1) == 1000);
  cfg.set("seed", "-4", "flag");
  CHECK_THROWS_AS((void)cfg.get_u64("seed", 1), ConfigError);
  cfg.set("t", "1,,2", "flag");
  CHECK_THROWS_AS((void)cfg.get_list("t", {}), ConfigError);
  cfg.set("svg", "maybe", "flag");
  CHECK_THROWS_AS((void)cfg.get_bool("svg", false), ConfigError);
  cfg.set("alpha", "nan", "flag");
  CHECK_THROWS_AS((void)cfg.get_double("alpha", 0.5), ConfigError);
}

TEST_CASE("config values reach the experiment") {
  RunConfig cfg("coupling-check", find_command("coupling-check")->keys);
  cfg.set("samples", "5000", "flag");
  cfg.set("seed", "9", "flag");
  const ConvergenceReport r = find_command("coupling-check")->run(cfg);
  CHECK(r.manifest["config"]["samples"] == 5000);
  CHECK(r.manifest["config"]["seed"] == 9);
  cfg.set("family", "cauchy", "flag");
  CHECK_THROWS_AS(find_command("coupling-check")->run(cfg), ConfigError);
}
