#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "finlab/errors.hpp"
#include "finlab/functionals.hpp"

namespace finlab::cli {

namespace {

std::set<std::string> merge(std::initializer_list<std::set<std::string>> parts) {
  std::set<std::string> out;
  for (const auto& p : parts) out.insert(p.begin(), p.end());
  return out;
}

const std::set<std::string> kTailKeys{"family", "alpha", "x_min"};
const std::set<std::string> kRunKeys{"seed", "replicas"};
const std::set<std::string> kWindowKeys{"window_scale", "window_pad", "guard_tolerance", "guard_edge_fraction",
                                        "max_doublings", "max_atoms"};

TailSpec read_tail(const RunConfig& cfg, const TailSpec& fallback) {
  TailSpec tail = fallback;
  if (cfg.has("family")) tail.family = tail_family_from_string(cfg.get_string("family", ""));
  tail.alpha = cfg.get_double("alpha", tail.alpha);
  tail.x_min = cfg.get_double("x_min", tail.x_min);
  tail.validate();
  return tail;
}

GuardOptions read_guard(const RunConfig& cfg, GuardOptions guard) {
  guard.tolerance = cfg.get_double("guard_tolerance", guard.tolerance);
  guard.edge_fraction = cfg.get_double("guard_edge_fraction", guard.edge_fraction);
  guard.max_doublings = static_cast<int>(cfg.get_size("max_doublings", static_cast<std::size_t>(guard.max_doublings)));
  guard.max_atoms = cfg.get_size("max_atoms", guard.max_atoms);
  if (!(guard.tolerance > 0.0)) throw ConfigError("field 'guard_tolerance' must be positive");
  if (!(guard.edge_fraction > 0.0 && guard.edge_fraction < 0.5)) {
    throw ConfigError("field 'guard_edge_fraction' must lie in (0, 0.5)");
  }
  return guard;
}

WindowPolicy read_window(const RunConfig& cfg) {
  WindowPolicy w;
  w.scale = cfg.get_double("window_scale", w.scale);
  w.pad = cfg.get_double("window_pad", w.pad);
  if (!(w.scale > 0.0) || w.pad < 0.0) throw ConfigError("window_scale must be positive and window_pad nonnegative");
  w.guard = read_guard(cfg, w.guard);
  return w;
}

std::size_t read_replicas(const RunConfig& cfg, std::size_t fallback) {
  const std::size_t r = cfg.get_size("replicas", fallback);
  if (r == 0) throw ConfigError("field 'replicas' must be positive");
  return r;
}

std::string format(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

ConvergenceReport run_sample_env(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const std::string family = cfg.get_string("family", "pareto");
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const std::size_t replica = cfg.get_size("replica", 0);
  EnsembleSpec ens;
  double half_width = 0.0;
  nlohmann::json config;
  if (family == "fin") {
    const double alpha = cfg.get_double("alpha", 0.5);
    half_width = cfg.get_double("half_width", 5.0);
    const double delta = cfg.get_double("delta", 1e-3);
    ens = EnsembleSpec::fin(alpha, half_width, delta, replica + 1, seed);
    config = {{"family", "fin"}, {"alpha", alpha}, {"half_width", half_width}, {"delta", delta}};
  } else {
    const TailSpec tail = read_tail(cfg, TailSpec::pareto(0.5));
    half_width = cfg.get_double("half_width", 100.0);
    ens = EnsembleSpec::lattice(tail, replica + 1, seed);
    config = {{"family", to_string(tail.family)}, {"alpha", tail.alpha}, {"x_min", tail.x_min},
              {"half_width", half_width}};
  }
  if (!(half_width > 0.0)) throw ConfigError("field 'half_width' must be positive");
  ens.validate();
  const DiscreteMeasure mu = replica_measure(ens, replica, half_width);

  ConvergenceReport report;
  report.experiment = "sample-env";
  report.x_label = "location";
  Series weights{"weight", {}};
  for (std::size_t k = 0; k < mu.size(); ++k) weights.points.push_back({mu.locations()[k], mu.weights()[k], 0.0, 1});
  report.series.push_back(std::move(weights));
  config["seed"] = seed;
  config["replica"] = replica;
  report.manifest["config"] = config;
  report.manifest["ensembles"] = {to_json(ens)};
  report.manifest["atoms"] = mu.size();
  report.manifest["total_mass"] = mu.total();
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ConvergenceReport run_qt(const RunConfig& cfg) {
  PlateauConfig c;
  c.tail = read_tail(cfg, c.tail);
  c.times = cfg.get_list("t", c.times);
  c.replicas = read_replicas(cfg, c.replicas);
  c.seed = cfg.get_u64("seed", c.seed);
  c.fin_s = cfg.get_double("fin_s", c.fin_s);
  c.fin_half_width = cfg.get_double("fin_half_width", c.fin_half_width);
  c.fin_delta = cfg.get_double("fin_delta", c.fin_delta);
  c.fin_replicas = cfg.get_size("fin_replicas", cfg.has("replicas") ? c.replicas : c.fin_replicas);
  c.plateau_lo = cfg.get_double("plateau_lo", c.plateau_lo);
  c.plateau_hi = cfg.get_double("plateau_hi", c.plateau_hi);
  c.window = read_window(cfg);
  return localization_plateau(c);
}

ConvergenceReport run_aging(const RunConfig& cfg) {
  AgingConfig c;
  c.tail = read_tail(cfg, c.tail);
  c.t_w = cfg.get_list("t_w", c.t_w);
  c.theta = cfg.get_list("theta", c.theta);
  c.replicas = read_replicas(cfg, c.replicas);
  c.seed = cfg.get_u64("seed", c.seed);
  c.plateau_time = cfg.get_double("plateau_time", c.plateau_time);
  c.window = read_window(cfg);
  return aging_collapse(c);
}

ConvergenceReport run_subaging(const RunConfig& cfg) {
  SubagingConfig c;
  c.tail = read_tail(cfg, c.tail);
  c.t_w = cfg.get_list("t_w", c.t_w);
  c.theta = cfg.get_list("theta", c.theta);
  c.replicas = read_replicas(cfg, c.replicas);
  c.seed = cfg.get_u64("seed", c.seed);
  c.tolerance = cfg.get_double("tolerance", c.tolerance);
  c.eta_override = cfg.get_optional_double("eta_override");
  c.window = read_window(cfg);
  return subaging_collapse(c);
}

ConvergenceReport run_novelty(const RunConfig& cfg) {
  NoveltyConfig c;
  c.tail = read_tail(cfg, c.tail);
  c.t_w = cfg.get_list("t_w", c.t_w);
  c.theta = cfg.get_double("theta", c.theta);
  c.replicas = read_replicas(cfg, c.replicas);
  c.paths_per_replica = cfg.get_size("paths", c.paths_per_replica);
  c.seed = cfg.get_u64("seed", c.seed);
  return novelty_aging(c);
}

/// fin_q on an s grid, optionally checked against the paired-path
/// collision estimate on the same environments.
ConvergenceReport run_fin_q(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const double alpha = cfg.get_double("alpha", 0.5);
  const std::vector<double> s = cfg.get_list("s", {1.0});
  const double half_width = cfg.get_double("half_width", 5.0);
  const std::size_t replicas = read_replicas(cfg, 500);
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const std::size_t pairs = cfg.get_size("pairs", 0);
  const double k_se = cfg.get_double("paired_k_se", 3.0);

  EnsembleSpec ens = EnsembleSpec::fin(alpha, half_width, 1e-3, replicas, seed);
  auto& fin = std::get<FinEnvironment>(ens.environment);
  if (cfg.has("truncation_budget")) {
    fin.truncation_budget = cfg.get_double("truncation_budget", 0.0);
    fin.params.delta = cfg.has("delta") ? cfg.get_double("delta", 0.0) : delta_for_budget(alpha, *fin.truncation_budget);
  } else {
    fin.params.delta = cfg.get_double("delta", fin.params.delta);
  }
  ens.window = read_window(cfg);
  ens.validate();

  ConvergenceReport report;
  report.experiment = "fin-q";
  report.x_label = "s";
  const std::vector<Estimate> q = fin_q(ens, s);
  report.add_series("fin_q", s, q);
  if (pairs > 0) {
    std::vector<Estimate> paired;
    for (double si : s) paired.push_back(fin_collision_probability(ens, si, pairs));
    report.add_series("paired_paths", s, paired);
    double worst = 0.0;
    bool ok = true;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double cse = combined_se(q[k], paired[k]);
      const double z = cse > 0.0 ? std::abs(q[k].value - paired[k].value) / cse : 0.0;
      worst = std::max(worst, z);
      ok = ok && agree_within(q[k], paired[k], k_se);
    }
    report.verdicts.push_back({"collision-form", ok, "max |fin_q - paired| / combined se = " + format(worst)});
  }
  nlohmann::json config = {{"alpha", alpha},     {"s", s},         {"half_width", half_width},
                           {"delta", fin.params.delta}, {"replicas", replicas}, {"seed", seed},
                           {"pairs", pairs},     {"paired_k_se", k_se}};
  if (fin.truncation_budget) config["truncation_budget"] = *fin.truncation_budget;
  report.manifest["config"] = config;
  report.manifest["ensembles"] = {to_json(ens)};
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

ConvergenceReport run_scaling(const RunConfig& cfg) {
  ScalingConfig c;
  c.tail = read_tail(cfg, c.tail);
  c.s = cfg.get_double("s", c.s);
  c.eps = cfg.get_list("eps", c.eps);
  c.replicas = read_replicas(cfg, c.replicas);
  c.seed = cfg.get_u64("seed", c.seed);
  c.fin_half_width = cfg.get_double("fin_half_width", c.fin_half_width);
  c.fin_delta = cfg.get_double("fin_delta", c.fin_delta);
  c.fin_replicas = cfg.get_size("fin_replicas", cfg.has("replicas") ? c.replicas : c.fin_replicas);
  c.window = read_window(cfg);
  return scaling_convergence(c);
}

ConvergenceReport run_self_similarity(const RunConfig& cfg) {
  SelfSimilarityConfig c;
  c.alpha = cfg.get_double("alpha", c.alpha);
  c.s = cfg.get_list("s", c.s);
  c.lambda = cfg.get_double("lambda", c.lambda);
  c.replicas = read_replicas(cfg, c.replicas);
  c.seed = cfg.get_u64("seed", c.seed);
  c.half_width = cfg.get_double("half_width", c.half_width);
  c.delta = cfg.get_double("delta", c.delta);
  c.quantile_levels = cfg.get_list("quantile_levels", c.quantile_levels);
  c.bootstrap = cfg.get_size("bootstrap", c.bootstrap);
  c.equivariance_replicas = cfg.get_size("equivariance_replicas", c.equivariance_replicas);
  c.equivariance_tolerance = cfg.get_double("equivariance_tolerance", c.equivariance_tolerance);
  c.window = read_window(cfg);
  return self_similarity(c);
}

ConvergenceReport run_law_convergence(const RunConfig& cfg) {
  LawConvergenceConfig c;
  c.tail = read_tail(cfg, c.tail);
  c.eps = cfg.get_list("eps", c.eps);
  c.t0 = cfg.get_double("t0", c.t0);
  c.replicas = read_replicas(cfg, c.replicas);
  c.seed = cfg.get_u64("seed", c.seed);
  c.half_width = cfg.get_double("half_width", c.half_width);
  c.delta = cfg.get_double("delta", c.delta);
  c.fine_factor = cfg.get_size("fine_factor", c.fine_factor);
  c.box.y_lo = cfg.get_double("box_y_lo", c.box.y_lo);
  c.box.y_hi = cfg.get_double("box_y_hi", c.box.y_hi);
  c.box.w_lo = cfg.get_double("box_w_lo", c.box.w_lo);
  c.weight_tolerance = cfg.get_double("weight_tolerance", c.weight_tolerance);
  c.required_fraction = cfg.get_double("required_fraction", c.required_fraction);
  c.trend_floor = cfg.get_double("trend_floor", c.trend_floor);
  c.guard = read_guard(cfg, c.guard);
  return law_convergence(c);
}

ConvergenceReport run_coupling_check(const RunConfig& cfg) {
  CouplingCheckConfig c;
  c.tail = read_tail(cfg, c.tail);
  c.eps = cfg.get_double("eps", c.eps);
  c.samples = cfg.get_size("samples", c.samples);
  c.seed = cfg.get_u64("seed", c.seed);
  c.level = cfg.get_double("level", c.level);
  return coupling_check(c);
}

}  // namespace

const std::set<std::string>& output_keys() {
  static const std::set<std::string> keys{"output", "svg", "threads"};
  return keys;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> table = [] {
    std::vector<Command> t;
    t.push_back({"sample-env", "draw one environment (lattice or fin) and write its atoms",
                 merge({kTailKeys, {"seed", "replica", "half_width", "delta"}}), run_sample_env});
    t.push_back({"qt", "q_t on a time grid, compared with the fin_q limit",
                 merge({kTailKeys, kRunKeys, kWindowKeys,
                        {"t", "fin_s", "fin_half_width", "fin_delta", "fin_replicas", "plateau_lo", "plateau_hi"}}),
                 run_qt});
    t.push_back({"aging", "two-time collision curves in theta at several t_w",
                 merge({kTailKeys, kRunKeys, kWindowKeys, {"t_w", "theta", "plateau_time"}}), run_aging});
    t.push_back({"subaging", "sojourn curves at t_w^eta scaled lags and their collapse score",
                 merge({kTailKeys, kRunKeys, kWindowKeys, {"t_w", "theta", "tolerance", "eta_override"}}),
                 run_subaging});
    t.push_back({"novelty", "probability that a new record trap is found after t_w",
                 merge({kTailKeys, kRunKeys, {"t_w", "theta", "paths"}}), run_novelty});
    t.push_back({"fin-q", "fin_q on an s grid, optionally checked by paired paths",
                 merge({kRunKeys, kWindowKeys,
                        {"alpha", "s", "half_width", "delta", "truncation_budget", "pairs", "paired_k_se"}}),
                 run_fin_q});
    t.push_back({"scaling", "q at rescaled time s on coupled lattices vs fin_q",
                 merge({kTailKeys, kRunKeys, kWindowKeys, {"s", "eps", "fin_half_width", "fin_delta", "fin_replicas"}}),
                 run_scaling});
    t.push_back({"self-similarity", "s-independence of fin_q, rescaled laws and exact equivariance",
                 merge({kRunKeys, kWindowKeys,
                        {"alpha", "s", "lambda", "half_width", "delta", "quantile_levels", "bootstrap",
                         "equivariance_replicas", "equivariance_tolerance"}}),
                 run_self_similarity});
    t.push_back({"law-convergence", "lattice laws vs laws on the limit measure, per replica",
                 merge({kTailKeys, kRunKeys,
                        {"guard_tolerance", "guard_edge_fraction", "max_doublings", "max_atoms", "eps", "t0",
                         "half_width", "delta", "fine_factor", "box_y_lo", "box_y_hi", "box_w_lo",
                         "weight_tolerance", "required_fraction", "trend_floor"}}),
                 run_law_convergence});
    t.push_back({"coupling-check", "KS test of coupled tau marginals against direct draws",
                 merge({kTailKeys, {"seed", "eps", "samples", "level"}}), run_coupling_check});
    for (auto& c : t) c.keys.insert(output_keys().begin(), output_keys().end());
    return t;
  }();
  return table;
}

const Command* find_command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::set<std::string> all_keys() {
  std::set<std::string> keys;
  for (const auto& c : commands()) keys.insert(c.keys.begin(), c.keys.end());
  return keys;
}

}  // namespace finlab::cli
