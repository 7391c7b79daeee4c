#include <doctest.h>

#include <sstream>

#include "finlab/artifacts.hpp"
#include "finlab/errors.hpp"

using namespace finlab;

namespace {

ConvergenceReport sample_report() {
  ConvergenceReport r;
  r.experiment = "qt";
  r.x_label = "t";
  r.add_series("lattice", {1e2, 1e4}, {Estimate{0.3, 0.01, 10}, Estimate{1.0 / 3.0, 0.02, 10}});
  r.add_series("fin_q", {1e2, 1e4}, {Estimate{0.31, 0.015, 10}, Estimate{0.31, 0.015, 10}});
  r.verdicts.push_back({"plateau-stable", true, "ok"});
  r.manifest["config"] = {{"seed", 7}, {"replicas", 10}};
  r.wall_seconds = 1.5;
  return r;
}

}  // namespace

TEST_CASE("CSV round trip keeps every digit") {
  const ConvergenceReport r = sample_report();
  std::stringstream io;
  write_csv(io, r, {{"seed", "7"}});
  const CsvTable t = read_csv(io);
  CHECK(t.x_label == "t");
  REQUIRE(t.series.size() == 2);
  CHECK(t.series[0].label == "lattice");
  CHECK(t.series[0].points[1].value == 1.0 / 3.0);
  CHECK(t.series[1].points[0].se == 0.015);
  CHECK(t.series[0].points[0].replicas == 10);
}

TEST_CASE("CSV schema errors") {
  std::stringstream empty;
  CHECK_THROWS_AS(read_csv(empty), ConfigError);
  std::stringstream header_only("series,t,value,se,replicas\n");
  CHECK_THROWS_AS(read_csv(header_only), ConfigError);
  std::stringstream bad_cols("series,t,value\nx,1,2\n");
  CHECK_THROWS_AS(read_csv(bad_cols), ConfigError);
  std::stringstream bad_number("series,t,value,se,replicas\nx,1,abc,0,1\n");
  CHECK_THROWS_AS(read_csv(bad_number), ConfigError);
}

TEST_CASE("manifest schema") {
  const auto j = manifest_json(sample_report(), "1.2.3");
  for (const char* key : {"experiment", "config", "seed", "verdicts", "timings", "tool_version", "passed"}) {
    CAPTURE(key);
    CHECK(j.contains(key));
  }
  CHECK(j["seed"] == 7);
  CHECK(j["verdicts"][0]["name"] == "plateau-stable");
  CHECK(j["timings"]["wall_seconds"] == 1.5);
}

TEST_CASE("SVG output records scales and draws every series") {
  const ConvergenceReport r = sample_report();
  CsvTable t{r.x_label, {{"experiment", "qt"}}, r.series};
  const PlotOptions opt = default_plot_options(t);
  CHECK(opt.x_scale == AxisScale::Log);
  const std::string svg = render_svg(r.series, opt);
  CHECK(svg.find("version=\"1.1\"") != std::string::npos);
  CHECK(svg.find("x_scale=log") != std::string::npos);
  std::size_t lines = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++lines;
  CHECK(lines == 2);

  PlotOptions scatter = opt;
  scatter.lines = false;
  CHECK(render_svg(r.series, scatter).find("<polyline") == std::string::npos);
}
