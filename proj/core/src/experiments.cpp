#include "finlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "finlab/errors.hpp"
#include "finlab/gap_chain.hpp"
#include "finlab/parallel.hpp"

namespace finlab {

namespace {

// Experiment ids for the substream tree below each seed.
constexpr std::uint64_t kMainEnsemble = 0;
constexpr std::uint64_t kReferenceEnsemble = 1;
constexpr std::uint64_t kBootstrap = 2;
constexpr std::uint64_t kDirectDraws = 3;

class Timer {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

void require_positive(std::span<const double> values, const std::string& what) {
  require(!values.empty(), what + " grid is empty");
  for (const double v : values) require(v > 0.0 && std::isfinite(v), what + " values must be positive");
}

void require_strictly_decreasing(std::span<const double> values, const std::string& what) {
  for (std::size_t k = 1; k < values.size(); ++k)
    require(values[k] < values[k - 1], what + " grid must be strictly decreasing");
}

void require_strictly_increasing(std::span<const double> values, const std::string& what) {
  for (std::size_t k = 1; k < values.size(); ++k)
    require(values[k] > values[k - 1], what + " grid must be strictly increasing");
}

nlohmann::json tail_json(const TailSpec& tail) {
  nlohmann::json j{{"family", to_string(tail.family)}, {"alpha", tail.alpha}};
  if (tail.family == TailFamily::Pareto) j["x_min"] = tail.x_min;
  return j;
}

nlohmann::json window_json(const WindowPolicy& w) {
  return {{"scale", w.scale},
          {"pad", w.pad},
          {"guard_tolerance", w.guard.tolerance},
          {"edge_fraction", w.guard.edge_fraction},
          {"max_doublings", w.guard.max_doublings},
          {"max_atoms", w.guard.max_atoms}};
}

Estimate constant_estimate(double value, std::size_t replicas) { return Estimate{value, 0.0, replicas}; }

/// Sojourn sums sum_k p_k exp(-lag r_k) on the law at t_w.
std::vector<double> sojourn_row(const GuardedEvolution& evo, std::span<const double> lags) {
  const auto& p = evo.laws.front().probabilities();
  std::vector<double> row(lags.size(), 0.0);
  for (std::size_t l = 0; l < lags.size(); ++l) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] > 0.0) row[l] += p[k] * std::exp(-lags[l] * evo.chain.exit_rate(k));
    }
  }
  return row;
}

}  // namespace

bool ConvergenceReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

const Series* ConvergenceReport::find_series(const std::string& label) const {
  for (const auto& s : series) {
    if (s.label == label) return &s;
  }
  return nullptr;
}

const Verdict* ConvergenceReport::find_verdict(const std::string& name) const {
  for (const auto& v : verdicts) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

void ConvergenceReport::add_series(std::string label, const std::vector<double>& x,
                                   const std::vector<Estimate>& values) {
  if (x.size() != values.size()) throw InternalError("series grid and values differ in length");
  Series s{std::move(label), {}};
  for (std::size_t k = 0; k < x.size(); ++k)
    s.points.push_back(SeriesPoint{x[k], values[k].value, values[k].se, values[k].replicas});
  series.push_back(std::move(s));
}

nlohmann::json to_json(const EnsembleSpec& ens) {
  nlohmann::json j;
  if (const auto* tail = std::get_if<TailSpec>(&ens.environment)) {
    j["environment"] = "lattice";
    j["tail"] = tail_json(*tail);
  } else {
    const auto& fin = std::get<FinEnvironment>(ens.environment);
    j["environment"] = "fin";
    j["alpha"] = fin.params.alpha;
    j["half_width"] = fin.params.half_width;
    j["delta"] = fin.params.delta;
    if (fin.truncation_budget) j["truncation_budget"] = *fin.truncation_budget;
  }
  j["replicas"] = ens.replicas;
  j["seed"] = ens.seed;
  j["experiment_id"] = ens.experiment_id;
  j["window"] = window_json(ens.window);
  return j;
}

bool decreasing_trend(const std::vector<double>& values, double floor) {
  if (values.size() < 2) return true;
  if (std::all_of(values.begin(), values.end(), [floor](double v) { return v <= floor; })) return true;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[k - 1] && values[k] > floor) return false;
  }
  return values.back() < values.front();
}

double common_mesh(const std::vector<double>& eps_grid) {
  require_positive(eps_grid, "eps");
  const double eps_min = *std::min_element(eps_grid.begin(), eps_grid.end());
  for (int q = 1; q <= 64; ++q) {
    const double h = eps_min / q;
    const bool fits = std::all_of(eps_grid.begin(), eps_grid.end(), [h](double eps) {
      const double ratio = eps / h;
      return std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio;
    });
    if (fits) return h;
  }
  throw ConfigError("eps grid has no common mesh of the form eps_min / q with q <= 64");
}

double homogeneous_collision(double x) {
  if (!(x >= 0.0)) throw DomainError("homogeneous_collision needs x >= 0");
  if (x == 0.0) return 1.0;
  // e^{-2x} I_0(2x) = sum_k e^{-2x} x^{2k} / (k!)^2; terms peak near k = x.
  const double log_x = std::log(x);
  auto log_term = [&](double k) { return -2.0 * x + 2.0 * k * log_x - 2.0 * std::lgamma(k + 1.0); };
  const double peak = std::floor(x);
  const double top = log_term(peak);
  const double reach = 40.0 * std::sqrt(x + 1.0) + 50.0;
  const auto k_lo = static_cast<long>(std::max(0.0, peak - reach));
  const auto k_hi = static_cast<long>(peak + reach);
  double sum = 0.0;
  for (long k = k_lo; k <= k_hi; ++k) sum += std::exp(log_term(static_cast<double>(k)) - top);
  return std::exp(top) * sum;
}

// --- scaling -------------------------------------------------------------------

DiscreteMeasure coupled_lattice_measure(const TailSpec& tail, double eps, double h, double half_width,
                                        const RandomStream& path_stream) {
  const auto sites = static_cast<std::int64_t>(std::ceil(half_width / eps));
  const auto count = static_cast<std::size_t>(2 * sites + 1);
  if (tail.family == TailFamily::Homogeneous) {
    return lattice_measure(TauField{-sites, std::vector<double>(count, 1.0)}, eps, c_eps(tail, eps));
  }
  const auto factor = static_cast<std::int64_t>(std::llround(eps / h));
  const auto fine = sample_stable_increments(tail.alpha, h, -sites * factor,
                                             count * static_cast<std::size_t>(factor), path_stream);
  const auto coarse = coarsen(fine, factor, -sites, count);
  return lattice_measure(coupled_tau(coarse, tail), eps, c_eps(tail, eps));
}

ConvergenceReport scaling_convergence(const ScalingConfig& config) {
  const Timer timer;
  config.tail.validate();
  require(config.s > 0.0, "scaling: s must be positive");
  require_positive(config.eps, "eps");
  require_strictly_decreasing(config.eps, "eps");
  require(config.eps.front() < 1.0, "scaling: eps must lie in (0, 1)");
  require(config.replicas > 0, "scaling: replicas must be positive");

  ConvergenceReport report;
  report.experiment = "scaling";
  report.x_label = "eps";
  report.manifest["config"] = {{"tail", tail_json(config.tail)},
                               {"s", config.s},
                               {"eps", config.eps},
                               {"replicas", config.replicas},
                               {"seed", config.seed},
                               {"fin_half_width", config.fin_half_width},
                               {"fin_delta", config.fin_delta},
                               {"fin_replicas", config.fin_replicas},
                               {"window", window_json(config.window)}};
  const std::vector<double> times{config.s};
  const std::size_t n_eps = config.eps.size();

  if (config.tail.family == TailFamily::Homogeneous) {
    std::vector<Estimate> lattice(n_eps), oracle(n_eps);
    double worst = 0.0;
    const RandomStream unused(config.seed);
    for (std::size_t e = 0; e < n_eps; ++e) {
      const double eps = config.eps[e];
      const MeasureFactory factory = [&](double hw) {
        return coupled_lattice_measure(config.tail, eps, eps, hw, unused);
      };
      const double hw = 2.5 * config.window.scale * std::sqrt(config.s) + config.window.pad * eps;
      const auto evo = evolve_guarded(factory, hw, 0.0, times, config.window.guard);
      lattice[e] = constant_estimate(sum_sq_atoms(evo.laws.front()), 1);
      oracle[e] = constant_estimate(homogeneous_collision(config.s / (eps * eps)), 1);
      worst = std::max(worst, std::abs(lattice[e].value - oracle[e].value));
    }
    report.add_series("lattice", config.eps, lattice);
    report.add_series("oracle", config.eps, oracle);
    std::vector<double> values(n_eps);
    for (std::size_t e = 0; e < n_eps; ++e) values[e] = lattice[e].value;
    report.verdicts.push_back({"oracle-match", worst <= 1e-8, "max |lattice - oracle| = " + format(worst)});
    report.verdicts.push_back({"decreasing-to-zero", decreasing_trend(values, 0.0),
                               "sum p^2 at the smallest eps = " + format(values.back())});
    report.wall_seconds = timer.seconds();
    return report;
  }

  const double h = common_mesh(config.eps);
  EnsembleSpec ens = EnsembleSpec::lattice(config.tail, config.replicas, config.seed);
  ens.experiment_id = kMainEnsemble;
  ens.window = config.window;
  std::vector<std::vector<double>> rows(config.replicas);
  parallel_for(config.replicas, [&](std::size_t r) {
    const RandomStream stream = ens.environment_stream(r);
    std::vector<double> row(n_eps);
    for (std::size_t e = 0; e < n_eps; ++e) {
      const double eps = config.eps[e];
      const MeasureFactory factory = [&](double hw) { return coupled_lattice_measure(config.tail, eps, h, hw, stream); };
      const auto evo = evolve_guarded(factory, config.fin_half_width, 0.0, times, config.window.guard, ens.solver);
      row[e] = sum_sq_atoms(evo.laws.front());
    }
    rows[r] = std::move(row);
  });
  const auto lattice = summarize_columns(rows);

  EnsembleSpec fin = EnsembleSpec::fin(config.tail.alpha, config.fin_half_width, config.fin_delta,
                                       config.fin_replicas, config.seed);
  fin.experiment_id = kReferenceEnsemble;
  fin.window = config.window;
  const Estimate limit = fin_q(fin, times).front();

  std::vector<Estimate> gap(n_eps);
  std::vector<double> gaps(n_eps);
  double noise = 0.0;
  for (std::size_t e = 0; e < n_eps; ++e) {
    gaps[e] = std::abs(lattice[e].value - limit.value);
    gap[e] = Estimate{gaps[e], combined_se(lattice[e], limit), lattice[e].replicas};
    noise = std::max(noise, 2.0 * gap[e].se);
  }
  report.add_series("lattice", config.eps, lattice);
  report.add_series("fin", config.eps, std::vector<Estimate>(n_eps, limit));
  report.add_series("gap", config.eps, gap);
  report.manifest["ensembles"] = {to_json(ens), to_json(fin)};
  report.manifest["fine_mesh"] = h;

  report.verdicts.push_back({"agreement-at-smallest-eps", gaps.back() <= 2.0 * gap.back().se,
                             "|lattice - fin| = " + format(gaps.back()) + ", 2 combined se = " +
                                 format(2.0 * gap.back().se)});
  report.verdicts.push_back({"gap-trend", decreasing_trend(gaps, noise),
                             "gaps decrease along eps or stay within 2 combined se (" + format(noise) + ")"});
  report.wall_seconds = timer.seconds();
  return report;
}

// --- self-similarity ----------------------------------------------------------

DiscreteMeasure rescale_fin_measure(const DiscreteMeasure& mu, double alpha, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("rescale_fin_measure needs lambda > 0");
  const double space = 1.0 / std::sqrt(lambda);
  const double mass = std::pow(lambda, -1.0 / (2.0 * alpha));
  std::vector<double> y(mu.locations()), w(mu.weights());
  for (auto& v : y) v *= space;
  for (auto& v : w) v *= mass;
  return DiscreteMeasure(std::move(y), std::move(w), Window{mu.window().lo * space, mu.window().hi * space});
}

namespace {

/// Atoms of all replica laws sorted by location, tagged with their replica.
struct PooledLaw {
  std::vector<double> location;
  std::vector<double> probability;
  std::vector<std::uint32_t> replica;
};

PooledLaw pool(const std::vector<std::vector<std::pair<double, double>>>& laws) {
  std::vector<std::tuple<double, double, std::uint32_t>> atoms;
  for (std::size_t r = 0; r < laws.size(); ++r) {
    for (const auto& [y, p] : laws[r]) atoms.emplace_back(y, p, static_cast<std::uint32_t>(r));
  }
  std::sort(atoms.begin(), atoms.end());
  PooledLaw out;
  for (const auto& [y, p, r] : atoms) {
    out.location.push_back(y);
    out.probability.push_back(p);
    out.replica.push_back(r);
  }
  return out;
}

/// Quantiles of the mixture sum_r m_r law_r / sum_r m_r (levels ascending).
std::vector<double> pooled_quantiles(const PooledLaw& pooled, const std::vector<double>& multiplicity,
                                     std::span<const double> levels) {
  double total = 0.0;
  for (std::size_t k = 0; k < pooled.location.size(); ++k)
    total += multiplicity[pooled.replica[k]] * pooled.probability[k];
  std::vector<double> out(levels.size(), pooled.location.back());
  std::size_t next = 0;
  double acc = 0.0;
  for (std::size_t k = 0; k < pooled.location.size() && next < levels.size(); ++k) {
    acc += multiplicity[pooled.replica[k]] * pooled.probability[k];
    while (next < levels.size() && acc >= levels[next] * total) out[next++] = pooled.location[k];
  }
  return out;
}

}  // namespace

ConvergenceReport self_similarity(const SelfSimilarityConfig& config) {
  const Timer timer;
  require(config.alpha > 0.0 && config.alpha < 1.0, "self-similarity: alpha must lie in (0, 1)");
  require_positive(config.s, "s");
  require_strictly_increasing(config.s, "s");
  require(config.lambda > 0.0, "self-similarity: lambda must be positive");
  require(config.bootstrap >= 2, "self-similarity: need at least two bootstrap resamples");
  require_positive(config.quantile_levels, "quantile level");
  require_strictly_increasing(config.quantile_levels, "quantile level");
  require(config.quantile_levels.back() < 1.0, "self-similarity: quantile levels must lie in (0, 1)");

  ConvergenceReport report;
  report.experiment = "self-similarity";
  report.x_label = "s";
  report.manifest["config"] = {{"alpha", config.alpha},
                               {"s", config.s},
                               {"lambda", config.lambda},
                               {"replicas", config.replicas},
                               {"seed", config.seed},
                               {"half_width", config.half_width},
                               {"delta", config.delta},
                               {"quantile_levels", config.quantile_levels},
                               {"bootstrap", config.bootstrap},
                               {"equivariance_replicas", config.equivariance_replicas},
                               {"equivariance_tolerance", config.equivariance_tolerance},
                               {"window", window_json(config.window)}};

  EnsembleSpec ens = EnsembleSpec::fin(config.alpha, config.half_width, config.delta, config.replicas, config.seed);
  ens.experiment_id = kMainEnsemble;
  ens.window = config.window;
  ens.validate();
  report.manifest["ensembles"] = {to_json(ens)};

  const std::size_t n_s = config.s.size();
  const double exponent = config.alpha / (config.alpha + 1.0);
  std::vector<std::vector<double>> collision(config.replicas);
  // laws[s][replica] = atoms (rescaled location, probability)
  std::vector<std::vector<std::vector<std::pair<double, double>>>> laws(
      n_s, std::vector<std::vector<std::pair<double, double>>>(config.replicas));
  parallel_for(config.replicas, [&](std::size_t r) {
    const auto evo = replica_evolution(ens, r, config.s);
    std::vector<double> row(n_s);
    for (std::size_t k = 0; k < n_s; ++k) {
      const auto& law = evo.laws[k];
      row[k] = sum_sq_atoms(law);
      const double scale = std::pow(config.s[k], -exponent);
      auto& atoms = laws[k][r];
      for (std::size_t i = 0; i < law.size(); ++i) {
        if (law[i] > 0.0) atoms.emplace_back(scale * law.support()[i], law[i]);
      }
    }
    collision[r] = std::move(row);
  });

  // (a) q does not depend on s.
  const auto q = summarize_columns(collision);
  report.add_series("fin_q", config.s, q);
  {
    bool ok = true;
    double worst = 0.0;
    for (std::size_t k = 1; k < n_s; ++k) {
      ok = ok && agree_within(q[k], q[0], 2.0);
      const double cse = combined_se(q[k], q[0]);
      if (cse > 0.0) worst = std::max(worst, std::abs(q[k].value - q[0].value) / cse);
    }
    report.verdicts.push_back({"q-independent-of-s", ok, "largest |difference| / combined se = " + format(worst)});
  }

  // (b) quantiles of the rescaled law, with bootstrap standard errors.
  std::vector<std::vector<Estimate>> quantiles(n_s);
  for (std::size_t k = 0; k < n_s; ++k) {
    const PooledLaw pooled = pool(laws[k]);
    const std::vector<double> ones(config.replicas, 1.0);
    const auto point = pooled_quantiles(pooled, ones, config.quantile_levels);
    const std::size_t m = config.quantile_levels.size();
    std::vector<double> sum(m, 0.0), sum_sq(m, 0.0);
    RandomStream boot = RandomStream(config.seed).substream(kBootstrap).substream(k);
    std::vector<double> multiplicity(config.replicas);
    for (std::size_t b = 0; b < config.bootstrap; ++b) {
      std::fill(multiplicity.begin(), multiplicity.end(), 0.0);
      for (std::size_t i = 0; i < config.replicas; ++i) {
        const auto pick = static_cast<std::size_t>(boot.uniform() * static_cast<double>(config.replicas));
        multiplicity[std::min(pick, config.replicas - 1)] += 1.0;
      }
      const auto resampled = pooled_quantiles(pooled, multiplicity, config.quantile_levels);
      for (std::size_t j = 0; j < m; ++j) {
        sum[j] += resampled[j];
        sum_sq[j] += resampled[j] * resampled[j];
      }
    }
    const auto nb = static_cast<double>(config.bootstrap);
    for (std::size_t j = 0; j < m; ++j) {
      const double mean = sum[j] / nb;
      const double var = std::max(0.0, (sum_sq[j] - nb * mean * mean) / (nb - 1.0));
      quantiles[k].push_back(Estimate{point[j], std::sqrt(var), config.replicas});
    }
    report.add_series("quantile s=" + format(config.s[k]), config.quantile_levels, quantiles[k]);
  }
  {
    bool ok = true;
    double worst = 0.0;
    for (std::size_t k = 1; k < n_s; ++k) {
      for (std::size_t j = 0; j < config.quantile_levels.size(); ++j) {
        const auto& a = quantiles[k][j];
        const auto& b = quantiles[0][j];
        ok = ok && agree_within(a, b, 3.0);
        const double cse = combined_se(a, b);
        if (cse > 0.0) worst = std::max(worst, std::abs(a.value - b.value) / cse);
      }
    }
    report.verdicts.push_back({"rescaled-law-independent-of-s", ok,
                               "largest |quantile difference| / combined bootstrap se = " + format(worst)});
  }

  // (c) exact equivariance of the chain under the rescaling map.
  const double time_factor = std::pow(config.lambda, (config.alpha + 1.0) / (2.0 * config.alpha));
  const std::size_t n_eq = std::min(config.equivariance_replicas, config.replicas);
  const double s0 = config.s.front();
  std::vector<double> diff(n_eq, 0.0);
  parallel_for(n_eq, [&](std::size_t r) {
    const DiscreteMeasure mu = replica_measure(ens, r, config.half_width);
    if (mu.empty()) return;
    const GapChain original(mu);
    const GapChain mapped(rescale_fin_measure(mu, config.alpha, config.lambda));
    const Law a = evolve(original, original.nearest_atom(0.0), time_factor * s0, ens.solver);
    const Law b = evolve(mapped, mapped.nearest_atom(0.0), s0, ens.solver);
    diff[r] = std::abs(sum_sq_atoms(a) - sum_sq_atoms(b));
  });
  if (n_eq > 0) {
    std::vector<double> index(n_eq);
    std::vector<Estimate> values(n_eq);
    for (std::size_t r = 0; r < n_eq; ++r) {
      index[r] = static_cast<double>(r);
      values[r] = constant_estimate(diff[r], 1);
    }
    report.add_series("equivariance |difference|", index, values);
    const double worst = *std::max_element(diff.begin(), diff.end());
    report.verdicts.push_back({"exact-equivariance", worst <= config.equivariance_tolerance,
                               "time factor " + format(time_factor) + ", max |sum p^2 difference| = " +
                                   format(worst)});
  }
  report.manifest["time_factor"] = time_factor;
  report.wall_seconds = timer.seconds();
  return report;
}

// --- law convergence ----------------------------------------------------------

namespace {

struct LawPair {
  Law lattice;
  Law limit;
  Window lattice_window;
  Window limit_window;
};

}  // namespace

std::vector<std::vector<LawComparison>> law_convergence_table(const LawConvergenceConfig& config) {
  config.tail.validate();
  require(config.tail.family != TailFamily::Homogeneous, "law convergence needs a heavy-tailed family");
  require_positive(config.eps, "eps");
  require_strictly_decreasing(config.eps, "eps");
  require(config.eps.front() < 1.0, "law convergence: eps must lie in (0, 1)");
  require(config.t0 > 0.0, "law convergence: t0 must be positive");
  require(config.replicas > 0, "law convergence: replicas must be positive");
  require(config.half_width > 1.0, "law convergence: the window must cover [-1, 1]");
  require(config.delta > 0.0, "law convergence: delta must be positive");
  require(config.fine_factor >= 1, "law convergence: fine_factor must be at least 1");

  const double base = common_mesh(config.eps);
  const double eps_min = config.eps.back();
  const auto refine = std::max<long>(1, std::lround(static_cast<double>(config.fine_factor) * base / eps_min));
  const double h = base / static_cast<double>(refine);
  const std::size_t n_eps = config.eps.size();
  std::vector<std::int64_t> factor(n_eps);
  for (std::size_t e = 0; e < n_eps; ++e) factor[e] = std::llround(config.eps[e] / h);

  EnsembleSpec ens = EnsembleSpec::lattice(config.tail, config.replicas, config.seed);
  ens.experiment_id = kMainEnsemble;
  const double alpha = config.tail.alpha;
  const auto kernels = default_kernels();

  std::vector<std::vector<LawComparison>> table(config.replicas);
  parallel_for(config.replicas, [&](std::size_t r) {
    const RandomStream stream = ens.environment_stream(r);
    double half_width = config.half_width;
    for (int attempt = 0;; ++attempt, half_width *= 2.0) {
      if (attempt > config.guard.max_doublings) {
        throw BudgetError("law convergence: window guard exhausted at half-width " + format(half_width));
      }
      std::vector<std::int64_t> sites(n_eps);
      std::int64_t lo = 0, hi = 0;
      for (std::size_t e = 0; e < n_eps; ++e) {
        sites[e] = static_cast<std::int64_t>(std::ceil(half_width / config.eps[e]));
        lo = std::min(lo, -sites[e] * factor[e]);
        hi = std::max(hi, (sites[e] + 1) * factor[e]);
      }
      const auto fine = sample_stable_increments(alpha, h, lo, static_cast<std::size_t>(hi - lo), stream);
      if (fine.size() > 64 * config.guard.max_atoms) {
        throw BudgetError("law convergence: fine mesh needs " + std::to_string(fine.size()) + " increments");
      }

      // Truncated limit measure: fine increments >= delta at their left endpoints.
      std::vector<double> y, w;
      for (std::size_t j = 0; j < fine.size(); ++j) {
        if (fine.values[j] >= config.delta) {
          y.push_back(static_cast<double>(fine.first_index + static_cast<std::int64_t>(j)) * h);
          w.push_back(fine.values[j]);
        }
      }
      const Window fine_window{static_cast<double>(lo) * h, static_cast<double>(hi) * h};
      const GapChain limit_chain(DiscreteMeasure(std::move(y), std::move(w), fine_window));
      const Law limit = evolve(limit_chain, limit_chain.nearest_atom(0.0), config.t0);
      double worst_edge = edge_mass(limit_chain, limit, config.guard.edge_fraction);

      std::vector<Law> lattice(n_eps);
      std::vector<GapChain> chains(n_eps);
      for (std::size_t e = 0; e < n_eps; ++e) {
        const auto count = static_cast<std::size_t>(2 * sites[e] + 1);
        const auto coarse = coarsen(fine, factor[e], -sites[e], count);
        chains[e] = GapChain(lattice_measure(coupled_tau(coarse, config.tail), config.eps[e],
                                             c_eps(config.tail, config.eps[e])));
        lattice[e] = evolve(chains[e], chains[e].nearest_atom(0.0), config.t0);
        worst_edge = std::max(worst_edge, edge_mass(chains[e], lattice[e], config.guard.edge_fraction));
      }
      if (worst_edge > config.guard.tolerance) continue;

      const DiscreteMeasure limit_law = limit.as_measure(limit_chain.window());
      std::vector<LawComparison> row(n_eps);
      for (std::size_t e = 0; e < n_eps; ++e) {
        const DiscreteMeasure lattice_law = lattice[e].as_measure(chains[e].window());
        row[e].vague = vague_discrepancy(lattice_law, limit_law, kernels);
        row[e].mismatches =
            pp_match(lattice_law, limit_law, config.box, MatchTolerance{config.eps[e], config.weight_tolerance})
                .mismatch_count();
        row[e].collision_gap = std::abs(sum_sq_atoms(lattice[e]) - sum_sq_atoms(limit));
      }
      table[r] = std::move(row);
      return;
    }
  });
  return table;
}

ConvergenceReport law_convergence(const LawConvergenceConfig& config) {
  const Timer timer;
  const auto table = law_convergence_table(config);

  ConvergenceReport report;
  report.experiment = "law-convergence";
  report.x_label = "eps";
  report.manifest["config"] = {{"tail", tail_json(config.tail)},
                               {"eps", config.eps},
                               {"t0", config.t0},
                               {"replicas", config.replicas},
                               {"seed", config.seed},
                               {"half_width", config.half_width},
                               {"delta", config.delta},
                               {"fine_factor", config.fine_factor},
                               {"box", {config.box.y_lo, config.box.y_hi, config.box.w_lo, config.box.w_hi}},
                               {"weight_tolerance", config.weight_tolerance},
                               {"required_fraction", config.required_fraction},
                               {"trend_floor", config.trend_floor}};

  std::vector<std::vector<double>> vague(config.replicas), mismatches(config.replicas), gap(config.replicas);
  std::size_t all_three = 0, vague_down = 0, match_down = 0, gap_down = 0;
  for (std::size_t r = 0; r < config.replicas; ++r) {
    for (const auto& c : table[r]) {
      vague[r].push_back(c.vague);
      mismatches[r].push_back(static_cast<double>(c.mismatches));
      gap[r].push_back(c.collision_gap);
    }
    const bool v = decreasing_trend(vague[r], config.trend_floor);
    const bool m = decreasing_trend(mismatches[r], 0.0);
    const bool g = decreasing_trend(gap[r], config.trend_floor);
    vague_down += v;
    match_down += m;
    gap_down += g;
    all_three += v && m && g;
  }
  const auto mean_vague = summarize_columns(vague);
  const auto mean_mismatches = summarize_columns(mismatches);
  const auto mean_gap = summarize_columns(gap);
  report.add_series("vague discrepancy", config.eps, mean_vague);
  report.add_series("pp mismatch count", config.eps, mean_mismatches);
  report.add_series("|sum p^2 difference|", config.eps, mean_gap);

  const auto n = static_cast<double>(config.replicas);
  const double fraction = static_cast<double>(all_three) / n;
  report.manifest["decreasing_fraction"] = {{"vague", vague_down / n},
                                            {"pp_mismatch", match_down / n},
                                            {"collision_gap", gap_down / n},
                                            {"all_three", fraction}};
  report.verdicts.push_back({"decreasing-fraction", fraction >= config.required_fraction,
                             "all three metrics decrease for " + format(100.0 * fraction) + "% of replicas (vague " +
                                 format(100.0 * vague_down / n) + "%, pp " + format(100.0 * match_down / n) +
                                 "%, sum p^2 " + format(100.0 * gap_down / n) + "%)"});
  auto means = [](const std::vector<Estimate>& e) {
    std::vector<double> v;
    for (const auto& x : e) v.push_back(x.value);
    return v;
  };
  report.verdicts.push_back({"ensemble-mean-trend",
                             decreasing_trend(means(mean_vague), config.trend_floor) &&
                                 decreasing_trend(means(mean_mismatches), 0.0) &&
                                 decreasing_trend(means(mean_gap), config.trend_floor),
                             "replica means of all three metrics decrease along eps"});
  report.wall_seconds = timer.seconds();
  return report;
}

// --- subaging -----------------------------------------------------------------

double collapse_score(const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) return 0.0;
  double score = 0.0;
  for (std::size_t j = 0; j < curves.front().size(); ++j) {
    double lo = curves.front()[j], hi = lo;
    for (const auto& c : curves) {
      lo = std::min(lo, c.at(j));
      hi = std::max(hi, c.at(j));
    }
    score = std::max(score, hi - lo);
  }
  return score;
}

ConvergenceReport subaging_collapse(const SubagingConfig& config) {
  const Timer timer;
  config.tail.validate();
  require_positive(config.t_w, "t_w");
  require_strictly_increasing(config.t_w, "t_w");
  require(config.t_w.size() >= 2, "subaging: need at least two waiting times");
  require_positive(config.theta, "theta");
  require(config.tolerance > 0.0, "subaging: tolerance must be positive");
  if (config.eta_override) require(*config.eta_override > 0.0, "subaging: eta must be positive");

  const double eta = config.eta_override.value_or(1.0 / (1.0 + config.tail.alpha));
  const bool control = !config.eta_override || *config.eta_override != 1.0;
  EnsembleSpec ens = EnsembleSpec::lattice(config.tail, config.replicas, config.seed);
  ens.experiment_id = kMainEnsemble;
  ens.window = config.window;
  ens.validate();

  ConvergenceReport report;
  report.experiment = "subaging";
  report.x_label = "theta";
  report.manifest["config"] = {{"tail", tail_json(config.tail)},
                               {"t_w", config.t_w},
                               {"theta", config.theta},
                               {"replicas", config.replicas},
                               {"seed", config.seed},
                               {"tolerance", config.tolerance},
                               {"eta", eta},
                               {"window", window_json(config.window)}};
  report.manifest["ensembles"] = {to_json(ens)};

  const std::size_t n_theta = config.theta.size();
  std::vector<std::vector<double>> curves, control_curves;
  for (const double t_w : config.t_w) {
    std::vector<double> lags(n_theta), control_lags(n_theta);
    for (std::size_t j = 0; j < n_theta; ++j) {
      lags[j] = config.theta[j] * std::pow(t_w, eta);
      control_lags[j] = config.theta[j] * t_w;
    }
    std::vector<std::vector<double>> rows(config.replicas), control_rows(config.replicas);
    parallel_for(config.replicas, [&](std::size_t r) {
      const auto evo = replica_evolution(ens, r, std::span<const double>(&t_w, 1));
      rows[r] = sojourn_row(evo, lags);
      if (control) control_rows[r] = sojourn_row(evo, control_lags);
    });
    const auto curve = summarize_columns(rows);
    report.add_series("q* t_w=" + format(t_w), config.theta, curve);
    std::vector<double> values(n_theta);
    for (std::size_t j = 0; j < n_theta; ++j) values[j] = curve[j].value;
    curves.push_back(std::move(values));
    if (control) {
      const auto control_curve = summarize_columns(control_rows);
      report.add_series("q* eta=1 t_w=" + format(t_w), config.theta, control_curve);
      std::vector<double> control_values(n_theta);
      for (std::size_t j = 0; j < n_theta; ++j) control_values[j] = control_curve[j].value;
      control_curves.push_back(std::move(control_values));
    }
  }
  const double score = collapse_score(curves);
  report.manifest["collapse_score"] = score;
  report.verdicts.push_back({"collapse", score < config.tolerance,
                             "eta = " + format(eta) + ", score " + format(score) + " vs tolerance " +
                                 format(config.tolerance)});
  if (control) {
    const double control_score = collapse_score(control_curves);
    report.manifest["control_score"] = control_score;
    report.verdicts.push_back({"negative-control", control_score > 3.0 * config.tolerance,
                               "eta = 1, score " + format(control_score) + " must exceed " +
                                   format(3.0 * config.tolerance)});
  }
  report.wall_seconds = timer.seconds();
  return report;
}

// --- normal aging ----------------------------------------------------------------

ConvergenceReport aging_collapse(const AgingConfig& config) {
  const Timer timer;
  config.tail.validate();
  require_positive(config.t_w, "t_w");
  require_strictly_increasing(config.t_w, "t_w");
  const std::vector<double> theta = config.theta.empty() ? log_space(0.1, 10.0, 9) : config.theta;
  require_positive(theta, "theta");
  require_strictly_increasing(theta, "theta");
  require(config.plateau_time > 0.0, "aging: plateau time must be positive");

  EnsembleSpec ens = EnsembleSpec::lattice(config.tail, config.replicas, config.seed);
  ens.experiment_id = kMainEnsemble;
  ens.window = config.window;
  ens.validate();

  ConvergenceReport report;
  report.experiment = "aging";
  report.x_label = "theta";
  report.manifest["config"] = {{"tail", tail_json(config.tail)},
                               {"t_w", config.t_w},
                               {"theta", theta},
                               {"replicas", config.replicas},
                               {"seed", config.seed},
                               {"plateau_time", config.plateau_time},
                               {"window", window_json(config.window)}};
  report.manifest["ensembles"] = {to_json(ens)};

  std::vector<std::vector<Estimate>> curves;
  for (const double t_w : config.t_w) {
    curves.push_back(q_two_time(ens, t_w, theta));
    report.add_series("q t_w=" + format(t_w), theta, curves.back());
  }
  const Estimate plateau = q_t(ens, std::span<const double>(&config.plateau_time, 1)).front();
  report.add_series("q_t plateau", theta, std::vector<Estimate>(theta.size(), plateau));

  bool agree = true;
  double worst = 0.0;
  for (std::size_t k = 1; k < curves.size(); ++k) {
    for (std::size_t j = 0; j < theta.size(); ++j) {
      agree = agree && agree_within(curves[k][j], curves[k - 1][j], 2.0);
      const double cse = combined_se(curves[k][j], curves[k - 1][j]);
      if (cse > 0.0) worst = std::max(worst, std::abs(curves[k][j].value - curves[k - 1][j].value) / cse);
    }
  }
  report.verdicts.push_back({"collapse", agree, "largest |difference| / combined se = " + format(worst)});

  const auto& last = curves.back();
  const double small = last.front().value;
  const double large = last.back().value;
  const bool trend = small > large && (1.0 - small) < (1.0 - large) &&
                     std::abs(large - plateau.value) < std::abs(small - plateau.value);
  report.verdicts.push_back({"endpoint-trend", trend,
                             "q(theta=" + format(theta.front()) + ") = " + format(small) + ", q(theta=" +
                                 format(theta.back()) + ") = " + format(large) + ", plateau " +
                                 format(plateau.value)});
  report.wall_seconds = timer.seconds();
  return report;
}

// --- localization plateau -------------------------------------------------------

ConvergenceReport localization_plateau(const PlateauConfig& config) {
  const Timer timer;
  config.tail.validate();
  require_positive(config.times, "time");
  require_strictly_increasing(config.times, "time");
  require(config.times.size() >= 2, "qt: need at least two times");
  require(config.plateau_lo < config.plateau_hi, "qt: plateau bounds must be ordered");

  EnsembleSpec ens = EnsembleSpec::lattice(config.tail, config.replicas, config.seed);
  ens.experiment_id = kMainEnsemble;
  ens.window = config.window;

  ConvergenceReport report;
  report.experiment = "qt";
  report.x_label = "t";
  report.manifest["config"] = {{"tail", tail_json(config.tail)},
                               {"times", config.times},
                               {"replicas", config.replicas},
                               {"seed", config.seed},
                               {"fin_s", config.fin_s},
                               {"fin_half_width", config.fin_half_width},
                               {"fin_delta", config.fin_delta},
                               {"fin_replicas", config.fin_replicas},
                               {"plateau", {config.plateau_lo, config.plateau_hi}},
                               {"window", window_json(config.window)}};

  const auto q = q_t(ens, config.times);
  report.add_series("q_t", config.times, q);
  const Estimate& a = q[q.size() - 2];
  const Estimate& b = q.back();
  report.verdicts.push_back({"plateau-stable", agree_within(a, b, 2.0),
                             "q at the two largest times: " + format(a.value) + " +/- " + format(a.se) + ", " +
                                 format(b.value) + " +/- " + format(b.se)});
  const bool inside = [&] {
    for (const auto* e : {&a, &b}) {
      if (!(e->value > config.plateau_lo && e->value < config.plateau_hi)) return false;
    }
    return true;
  }();
  report.verdicts.push_back({"plateau-nontrivial", inside,
                             "plateau must lie in (" + format(config.plateau_lo) + ", " +
                                 format(config.plateau_hi) + ")"});
  nlohmann::json ensembles = {to_json(ens)};
  if (config.fin_replicas > 0) {
    EnsembleSpec fin = EnsembleSpec::fin(config.tail.alpha, config.fin_half_width, config.fin_delta,
                                         config.fin_replicas, config.seed);
    fin.experiment_id = kReferenceEnsemble;
    fin.window = config.window;
    const Estimate limit = fin_q(fin, std::span<const double>(&config.fin_s, 1)).front();
    report.add_series("fin_q", config.times, std::vector<Estimate>(config.times.size(), limit));
    report.verdicts.push_back({"matches-fin-limit", agree_within(a, limit, 2.0) && agree_within(b, limit, 2.0),
                               "fin_q = " + format(limit.value) + " +/- " + format(limit.se)});
    ensembles.push_back(to_json(fin));
  }
  report.manifest["ensembles"] = ensembles;
  report.wall_seconds = timer.seconds();
  return report;
}

// --- novelty -------------------------------------------------------------------

ConvergenceReport novelty_aging(const NoveltyConfig& config) {
  const Timer timer;
  require_positive(config.t_w, "t_w");
  require(config.theta >= 0.0, "novelty: theta must be nonnegative");
  EnsembleSpec ens = EnsembleSpec::lattice(config.tail, config.replicas, config.seed);
  ens.experiment_id = kMainEnsemble;

  ConvergenceReport report;
  report.experiment = "novelty";
  report.x_label = "t_w";
  report.manifest["config"] = {{"tail", tail_json(config.tail)},
                               {"t_w", config.t_w},
                               {"theta", config.theta},
                               {"replicas", config.replicas},
                               {"paths_per_replica", config.paths_per_replica},
                               {"seed", config.seed}};
  report.manifest["ensembles"] = {to_json(ens)};
  std::vector<Estimate> values;
  for (const double t_w : config.t_w) values.push_back(novelty(ens, t_w, config.theta, config.paths_per_replica));
  report.add_series("novelty", config.t_w, values);
  bool ok = true;
  for (std::size_t k = 1; k < values.size(); ++k) ok = ok && agree_within(values[k], values[0], 2.0);
  report.verdicts.push_back({"aging-function", ok, "estimates at every t_w agree within 2 combined se"});
  report.wall_seconds = timer.seconds();
  return report;
}

// --- coupling marginal ----------------------------------------------------------

ConvergenceReport coupling_check(const CouplingCheckConfig& config) {
  const Timer timer;
  config.tail.validate();
  require(config.eps > 0.0 && config.eps < 1.0, "coupling-check: eps must lie in (0, 1)");
  require(config.samples >= 2, "coupling-check: need at least two samples");
  require(config.level > 0.0 && config.level < 1.0, "coupling-check: level must lie in (0, 1)");

  const RandomStream root = RandomStream(config.seed).substream(kMainEnsemble);
  const RandomStream direct_stream = RandomStream(config.seed).substream(kDirectDraws);
  const auto n = static_cast<std::int64_t>(config.samples);
  const auto increments = sample_stable_increments(config.tail.alpha, config.eps, 0, config.samples, root);
  const auto coupled = coupled_tau(increments, config.tail).values;
  const auto direct = sample_tau_range(config.tail, 0, n - 1, direct_stream).values;
  const double ks = ks_statistic(coupled, direct);
  const double critical = ks_critical_value(coupled.size(), direct.size(), config.level);

  ConvergenceReport report;
  report.experiment = "coupling-check";
  report.x_label = "tau";
  report.manifest["config"] = {{"tail", tail_json(config.tail)},
                               {"eps", config.eps},
                               {"samples", config.samples},
                               {"seed", config.seed},
                               {"level", config.level}};
  report.manifest["ks_statistic"] = ks;
  report.manifest["critical_value"] = critical;

  // Empirical survival of both samples on a log grid, for plotting.
  std::vector<double> a(coupled), b(direct);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double lo = std::max(a[a.size() / 100], 1e-300);
  const double hi = std::max(a[a.size() - 1 - a.size() / 1000], lo * 10.0);
  const auto grid = log_space(lo, hi, 25);
  auto survival = [](const std::vector<double>& sorted, const std::vector<double>& x) {
    std::vector<Estimate> out;
    for (const double v : x) {
      const auto above = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), v));
      out.push_back(binomial_estimate(above, sorted.size()));
    }
    return out;
  };
  report.add_series("coupled survival", grid, survival(a, grid));
  report.add_series("direct survival", grid, survival(b, grid));
  report.verdicts.push_back({"ks-below-critical", ks < critical,
                             "KS " + format(ks) + " vs critical " + format(critical) + " at level " +
                                 format(config.level)});
  report.wall_seconds = timer.seconds();
  return report;
}

}  // namespace finlab
