#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "finlab/functionals.hpp"
#include "finlab/heavy_tail.hpp"
#include "finlab/speed_measure.hpp"
#include "finlab/stats.hpp"

namespace finlab {

struct SeriesPoint {
  double x = 0.0;
  double value = 0.0;
  double se = 0.0;
  std::size_t replicas = 0;
};

struct Series {
  std::string label;
  std::vector<SeriesPoint> points;
};

struct Verdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Result of an experiment: estimates on a grid, pass/fail verdicts and a
/// manifest with every parameter and seed needed to rerun it.
struct ConvergenceReport {
  std::string experiment;
  std::string x_label;
  std::vector<Series> series;
  std::vector<Verdict> verdicts;
  nlohmann::json manifest = nlohmann::json::object();
  double wall_seconds = 0.0;

  [[nodiscard]] bool passed() const;
  [[nodiscard]] const Series* find_series(const std::string& label) const;
  [[nodiscard]] const Verdict* find_verdict(const std::string& name) const;
  void add_series(std::string label, const std::vector<double>& x, const std::vector<Estimate>& values);
};

nlohmann::json to_json(const EnsembleSpec& ens);

/// Sequence d_0, d_1, ... is decreasing when no step goes up (rises that
/// stay at or below `floor` are ignored) and the last value is below the
/// first. A sequence entirely at or below `floor` counts as decreasing.
bool decreasing_trend(const std::vector<double>& values, double floor);

/// e^{-2x} I_0(2x): sum of squared probabilities of the simple symmetric
/// walk with jump rate 1/2 each way at time x. Summed in log space, so
/// large x does not overflow.
double homogeneous_collision(double x);

/// Smallest mesh h such that every eps in the grid is an integer multiple
/// of h, found among eps_min / q for q = 1 .. 64.
double common_mesh(const std::vector<double>& eps_grid);

// --- scaling limit of q ----------------------------------------------------

struct ScalingConfig {
  TailSpec tail = TailSpec::stable_matched(0.5);
  double s = 1.0;
  std::vector<double> eps{0.2, 0.1, 0.05, 0.02};
  std::size_t replicas = 500;
  std::uint64_t seed = 1;
  /// Reference FIN ensemble for the limit value.
  double fin_half_width = 5.0;
  double fin_delta = 1e-3;
  std::size_t fin_replicas = 500;
  WindowPolicy window{};
};

/// q at rescaled time s on coupled lattice environments for each eps (all
/// eps share one subordinator path per replica), compared with fin_q.
/// Homogeneous rates compare against e^{-2s/eps^2} I_0(2s/eps^2) instead.
ConvergenceReport scaling_convergence(const ScalingConfig& config);

/// Lattice speed measure of replica r at mesh eps, coupled through the
/// shared increments of V on the fine mesh h (eps a multiple of h).
DiscreteMeasure coupled_lattice_measure(const TailSpec& tail, double eps, double h, double half_width,
                                        const RandomStream& path_stream);

// --- self-similarity ----------------------------------------------------------

struct SelfSimilarityConfig {
  double alpha = 0.5;
  std::vector<double> s{1.0, 10.0};
  double lambda = 4.0;
  std::size_t replicas = 500;
  std::uint64_t seed = 1;
  double half_width = 5.0;
  double delta = 1e-3;
  std::vector<double> quantile_levels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t bootstrap = 200;
  std::size_t equivariance_replicas = 20;
  double equivariance_tolerance = 1e-9;
  WindowPolicy window{};
};

/// (a) fin_q at each s agrees with the first s within 2 combined se;
/// (b) quantiles of the pooled law of s^{-alpha/(alpha+1)} Z_s agree
///     within 3 combined bootstrap se;
/// (c) the map (y, w) -> (lambda^{-1/2} y, lambda^{-1/(2 alpha)} w) sends
///     sum p^2 at time s to the same value at lambda^{(alpha+1)/(2 alpha)} s,
///     per environment, within the tolerance.
ConvergenceReport self_similarity(const SelfSimilarityConfig& config);

/// The rescaling map applied to a measure.
DiscreteMeasure rescale_fin_measure(const DiscreteMeasure& mu, double alpha, double lambda);

// --- law convergence ----------------------------------------------------------

struct LawConvergenceConfig {
  TailSpec tail = TailSpec::stable_matched(0.5);
  std::vector<double> eps{0.2, 0.1, 0.05};
  double t0 = 1.0;
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  double half_width = 4.0;  ///< initial spatial window, doubled by the guard
  double delta = 1e-4;      ///< atom cutoff of the truncated limit measure
  std::size_t fine_factor = 256;  ///< fine mesh = eps_min / fine_factor (rounded to a common mesh)
  AtomBox box{};
  double weight_tolerance = 0.02;  ///< location tolerance is eps itself
  double required_fraction = 0.9;
  /// Continuous metrics at or below this value count as converged.
  double trend_floor = 1e-6;
  GuardOptions guard{};
};

struct LawComparison {
  double vague = 0.0;
  std::size_t mismatches = 0;
  double collision_gap = 0.0;  ///< |sum p^2 - sum p'^2|
};

/// Compares the law at t0 on the coupled lattice measure at each eps with
/// the law on the truncated limit measure built from the same V path.
ConvergenceReport law_convergence(const LawConvergenceConfig& config);

/// Per-replica comparisons, [replica][eps].
std::vector<std::vector<LawComparison>> law_convergence_table(const LawConvergenceConfig& config);

// --- aging and subaging -------------------------------------------------------

struct SubagingConfig {
  TailSpec tail = TailSpec::pareto(0.5);
  std::vector<double> t_w{1e3, 1e4, 1e5};
  std::vector<double> theta{0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
  std::size_t replicas = 500;
  std::uint64_t seed = 1;
  double tolerance = 0.05;
  std::optional<double> eta_override;
  WindowPolicy window{};
};

/// q*(t_w, theta t_w^eta) for each t_w; collapse score = max over theta of
/// the spread across t_w. Verdicts: score below tolerance with the chosen
/// eta (1/(1+alpha) by default) and score above 3 x tolerance with eta = 1.
ConvergenceReport subaging_collapse(const SubagingConfig& config);
/// Spread score of curves on a shared grid, [curve][point].
double collapse_score(const std::vector<std::vector<double>>& curves);

struct AgingConfig {
  TailSpec tail = TailSpec::pareto(0.5);
  std::vector<double> t_w{1e4, 1e5};
  std::vector<double> theta;  ///< default: 9 log-spaced points on [0.1, 10]
  std::size_t replicas = 400;
  std::uint64_t seed = 1;
  double plateau_time = 1e6;  ///< q_t at this time is the plateau reference
  WindowPolicy window{};
};

/// q_two_time curves vs theta at each t_w, agreement within 2 combined se
/// at every theta, decrease from near 1 towards the q_t plateau.
ConvergenceReport aging_collapse(const AgingConfig& config);

// --- localization plateau -------------------------------------------------------

struct PlateauConfig {
  TailSpec tail = TailSpec::pareto(0.5);
  std::vector<double> times{1e2, 1e4, 1e6};
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  double fin_s = 1.0;
  double fin_half_width = 5.0;
  double fin_delta = 1e-3;
  std::size_t fin_replicas = 1000;  ///< 0 skips the FIN comparison
  double plateau_lo = 0.02;
  double plateau_hi = 0.98;
  WindowPolicy window{};
};

/// q_t on the time grid; the two largest times agree within 2 combined se,
/// both agree with fin_q(s) within 2 combined se, plateau inside (lo, hi).
ConvergenceReport localization_plateau(const PlateauConfig& config);

// --- novelty -------------------------------------------------------------------

struct NoveltyConfig {
  TailSpec tail = TailSpec::pareto(0.5);
  std::vector<double> t_w{1e3, 1e4};
  double theta = 1.0;
  std::size_t replicas = 200;
  std::size_t paths_per_replica = 50;
  std::uint64_t seed = 1;
};

ConvergenceReport novelty_aging(const NoveltyConfig& config);

// --- coupling marginal ----------------------------------------------------------

struct CouplingCheckConfig {
  TailSpec tail = TailSpec::pareto(0.5);
  double eps = 1e-3;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  double level = 0.01;
};

/// KS test of coupled_tau marginals against direct sample_tau draws.
ConvergenceReport coupling_check(const CouplingCheckConfig& config);

}  // namespace finlab
