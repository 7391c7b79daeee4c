#include "finlab/gap_chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "finlab/errors.hpp"
#include "finlab/spectral.hpp"

namespace finlab {

GapChain::GapChain(const DiscreteMeasure& mu)
    : locations_(mu.locations()), weights_(mu.weights()), window_(mu.window()), total_weight_(mu.total()) {
  const std::size_t n = locations_.size();
  if (n == 0) throw DomainError("gap chain of an empty measure");
  right_.assign(n, 0.0);
  left_.assign(n, 0.0);
  conductance_.assign(n > 0 ? n - 1 : 0, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double gap = locations_[i + 1] - locations_[i];
    conductance_[i] = 0.5 / gap;
    right_[i] = conductance_[i] / weights_[i];
    left_[i + 1] = conductance_[i] / weights_[i + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double rate = right_[i] + left_[i];
    if (!std::isfinite(rate)) {
      throw BudgetError("gap chain rate overflow at atom " + std::to_string(i) +
                        "; use a larger weight cutoff");
    }
    max_exit_rate_ = std::max(max_exit_rate_, rate);
  }
}

std::size_t GapChain::nearest_atom(double x) const {
  const auto it = std::lower_bound(locations_.begin(), locations_.end(), x);
  if (it == locations_.begin()) return 0;
  if (it == locations_.end()) return locations_.size() - 1;
  const auto right = static_cast<std::size_t>(it - locations_.begin());
  return (x - locations_[right - 1] <= locations_[right] - x) ? right - 1 : right;
}

GapChain chain_from_measure(const DiscreteMeasure& mu) { return GapChain(mu); }

namespace {

bool use_uniformization(const GapChain& chain, double t_max, const EvolveOptions& options) {
  const double work = chain.max_exit_rate() * t_max;
  switch (options.method) {
    case EvolveMethod::Uniformization:
      if (work > options.max_series_work) {
        std::ostringstream msg;
        msg << "uniformization needs about " << work << " series terms (limit " << options.max_series_work
            << "); use a larger weight cutoff or the spectral solver";
        throw BudgetError(msg.str());
      }
      return true;
    case EvolveMethod::Spectral:
      return false;
    case EvolveMethod::Auto:
      return work <= options.uniformization_limit;
  }
  return false;
}

/// Poisson(mean) probabilities for n = 0 .. N with upper tail below `tail`.
std::vector<double> poisson_weights(double mean, double tail) {
  std::vector<double> w;
  if (mean <= 0.0) return {1.0};
  const double log_mean = std::log(mean);
  const auto cap = static_cast<std::size_t>(mean + 40.0 * std::sqrt(mean) + 200.0);
  double cumulative = 0.0;
  for (std::size_t k = 0; k <= cap; ++k) {
    const double kd = static_cast<double>(k);
    const double value = std::exp(-mean + kd * log_mean - std::lgamma(kd + 1.0));
    w.push_back(value);
    cumulative += value;
    if (kd > mean && 1.0 - cumulative < tail) break;
  }
  return w;
}

/// One step v <- v K with K = I + Q / Lambda, for `rows` row vectors.
void jump_step(const GapChain& chain, double inv_lambda, const std::vector<double>& in, std::vector<double>& out,
               std::size_t rows) {
  const std::size_t n = chain.size();
  const auto& rp = chain.right_rates();
  const auto& rm = chain.left_rates();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* v = in.data() + r * n;
    double* o = out.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) {
      double value = v[j] * (1.0 - (rp[j] + rm[j]) * inv_lambda);
      if (j > 0) value += v[j - 1] * rp[j - 1] * inv_lambda;
      if (j + 1 < n) value += v[j + 1] * rm[j + 1] * inv_lambda;
      o[j] = value;
    }
  }
}

/// Transient rows by uniformization; result[t] is rows x n, row-major.
std::vector<std::vector<double>> uniformize(const GapChain& chain, std::vector<double> init, std::size_t rows,
                                            std::span<const double> times, const EvolveOptions& options) {
  const std::size_t n = chain.size();
  const double lambda = chain.max_exit_rate();
  std::vector<std::vector<double>> result(times.size(), std::vector<double>(rows * n, 0.0));
  if (lambda <= 0.0) {
    for (auto& r : result) r = init;
    return result;
  }
  std::vector<std::vector<double>> weights(times.size());
  std::size_t terms = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    weights[k] = poisson_weights(lambda * times[k], options.series_tail);
    terms = std::max(terms, weights[k].size());
  }
  std::vector<double> current = std::move(init), next(rows * n);
  const double inv_lambda = 1.0 / lambda;
  for (std::size_t step = 0; step < terms; ++step) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (step >= weights[k].size()) continue;
      const double omega = weights[k][step];
      if (omega == 0.0) continue;
      auto& acc = result[k];
      for (std::size_t i = 0; i < rows * n; ++i) acc[i] += omega * current[i];
    }
    if (step + 1 < terms) {
      jump_step(chain, inv_lambda, current, next, rows);
      current.swap(next);
    }
  }
  for (auto& acc : result) {
    for (std::size_t r = 0; r < rows; ++r) {
      double* row = acc.data() + r * n;
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(row[j] > 0.0)) row[j] = 0.0;
        sum += row[j];
      }
      for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
    }
  }
  return result;
}

void check_times(std::span<const double> times) {
  for (const double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("evolution times must be finite and nonnegative");
  }
}

double max_time(std::span<const double> times) {
  double m = 0.0;
  for (const double t : times) m = std::max(m, t);
  return m;
}

}  // namespace

std::vector<Law> evolve(const GapChain& chain, std::size_t start, std::span<const double> times,
                        const EvolveOptions& options) {
  const std::size_t n = chain.size();
  if (start >= n) throw DomainError("evolve: start atom outside the chain");
  check_times(times);
  std::vector<Law> laws;
  laws.reserve(times.size());
  if (chain.frozen()) {
    for (std::size_t k = 0; k < times.size(); ++k) laws.push_back(Law::point_mass(chain.locations(), start));
    return laws;
  }
  if (use_uniformization(chain, max_time(times), options)) {
    std::vector<double> init(n, 0.0);
    init[start] = 1.0;
    auto rows = uniformize(chain, std::move(init), 1, times, options);
    for (auto& row : rows) laws.emplace_back(chain.locations(), std::move(row));
    return laws;
  }
  const SpectralPropagator propagator(chain);
  for (const double t : times) laws.emplace_back(chain.locations(), propagator.row(start, t));
  return laws;
}

Law evolve(const GapChain& chain, std::size_t start, double t, const EvolveOptions& options) {
  return std::move(evolve(chain, start, std::span<const double>(&t, 1), options).front());
}

Law evolve_from_law(const GapChain& chain, const Law& p, double t, const EvolveOptions& options) {
  if (p.support() != chain.locations()) throw DomainError("evolve_from_law: law support differs from the chain's atoms");
  check_times(std::span<const double>(&t, 1));
  if (chain.frozen() || t == 0.0) return p;
  if (use_uniformization(chain, t, options)) {
    auto rows = uniformize(chain, p.probabilities(), 1, std::span<const double>(&t, 1), options);
    return Law(chain.locations(), std::move(rows.front()));
  }
  const SpectralPropagator propagator(chain);
  return Law(chain.locations(), propagator.propagate(p.probabilities(), t));
}

TwoTimeSums two_time_sums(const GapChain& chain, std::span<const double> p, std::span<const double> lags,
                          const EvolveOptions& options, double start_mass_tail,
                          const SpectralPropagator* propagator) {
  const std::size_t n = chain.size();
  if (p.size() != n) throw DomainError("two_time_sums: law size does not match the chain");
  check_times(lags);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&p](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  double total = 0.0;
  for (const double x : p) total += x;
  std::vector<std::size_t> starts;
  double kept = 0.0;
  for (const std::size_t k : order) {
    if (kept >= total * (1.0 - start_mass_tail) || p[k] <= 0.0) break;
    starts.push_back(k);
    kept += p[k];
  }
  std::sort(starts.begin(), starts.end());

  TwoTimeSums sums;
  sums.collision.assign(lags.size(), 0.0);
  sums.same_site.assign(lags.size(), 0.0);
  sums.starts_used = starts.size();
  sums.dropped_mass = total - kept;
  const std::size_t r = starts.size();

  auto accumulate = [&](std::size_t lag_index, const std::vector<double>& rows) {
    double collision = 0.0, same = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      const double* row = rows.data() + i * n;
      double sq = 0.0;
      for (std::size_t j = 0; j < n; ++j) sq += row[j] * row[j];
      collision += p[starts[i]] * sq;
      same += p[starts[i]] * row[starts[i]];
    }
    sums.collision[lag_index] = collision;
    sums.same_site[lag_index] = same;
  };

  if (chain.frozen()) {
    for (std::size_t l = 0; l < lags.size(); ++l) {
      sums.collision[l] = kept;
      sums.same_site[l] = kept;
    }
    return sums;
  }
  if (use_uniformization(chain, max_time(lags), options)) {
    std::vector<double> init(r * n, 0.0);
    for (std::size_t i = 0; i < r; ++i) init[i * n + starts[i]] = 1.0;
    const auto rows = uniformize(chain, std::move(init), r, lags, options);
    for (std::size_t l = 0; l < lags.size(); ++l) accumulate(l, rows[l]);
    return sums;
  }
  std::optional<SpectralPropagator> own;
  if (propagator == nullptr) propagator = &own.emplace(chain);
  for (std::size_t l = 0; l < lags.size(); ++l) accumulate(l, propagator->rows(starts, lags[l]));
  return sums;
}

double edge_mass(const GapChain& chain, const Law& law, double edge_fraction) {
  const auto& y = chain.locations();
  const double lo = chain.window().lo + edge_fraction * chain.window().width();
  const double hi = chain.window().hi - edge_fraction * chain.window().width();
  double mass = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (j == 0 || j + 1 == y.size() || y[j] <= lo || y[j] >= hi) mass += law[j];
  }
  return mass;
}

GuardedEvolution evolve_guarded(const MeasureFactory& factory, double initial_half_width, double start_location,
                                std::span<const double> times, const GuardOptions& guard,
                                const EvolveOptions& options) {
  if (!(initial_half_width > 0.0)) throw ConfigError("initial window half-width must be positive");
  check_times(times);
  double half_width = initial_half_width;
  double last_edge = 0.0;
  for (int attempt = 0; attempt <= guard.max_doublings; ++attempt, half_width *= 2.0) {
    const DiscreteMeasure mu = factory(half_width);
    if (mu.empty()) continue;  // e.g. a FIN window with no atom above the cutoff
    if (mu.size() > guard.max_atoms) {
      std::ostringstream msg;
      msg << "window guard: " << mu.size() << " atoms at half-width " << half_width << " exceed the limit of "
          << guard.max_atoms << " (edge mass " << last_edge << ")";
      throw BudgetError(msg.str());
    }
    GuardedEvolution out;
    out.chain = GapChain(mu);
    out.start = out.chain.nearest_atom(start_location);
    if (!out.chain.frozen() && !use_uniformization(out.chain, max_time(times), options)) {
      out.propagator = std::make_shared<const SpectralPropagator>(out.chain);
      for (const double t : times) out.laws.emplace_back(out.chain.locations(), out.propagator->row(out.start, t));
    } else {
      out.laws = evolve(out.chain, out.start, times, options);
    }
    out.half_width = half_width;
    out.doublings = attempt;
    for (const auto& law : out.laws) out.edge_mass = std::max(out.edge_mass, edge_mass(out.chain, law, guard.edge_fraction));
    last_edge = out.edge_mass;
    if (out.edge_mass <= guard.tolerance || out.chain.frozen()) return out;
  }
  std::ostringstream msg;
  msg << "window guard: edge mass " << last_edge << " still above " << guard.tolerance << " after "
      << guard.max_doublings << " doublings";
  throw BudgetError(msg.str());
}

std::size_t Path::atom_at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return atoms[static_cast<std::size_t>(it - times.begin()) - 1];
}

Path simulate_path(const GapChain& chain, std::size_t start, double t_max, RandomStream& rng) {
  if (start >= chain.size()) throw DomainError("simulate_path: start atom outside the chain");
  if (!(t_max > 0.0)) throw DomainError("simulate_path: t_max must be positive");
  Path path;
  path.t_max = t_max;
  path.times.push_back(0.0);
  path.atoms.push_back(start);
  if (chain.frozen()) return path;
  double t = 0.0;
  std::size_t at = start;
  for (;;) {
    const double rp = chain.right_rates()[at];
    const double rm = chain.left_rates()[at];
    const double rate = rp + rm;
    t += rng.exponential() / rate;
    if (t > t_max) break;
    at = (rng.uniform() * rate < rp) ? at + 1 : at - 1;
    path.times.push_back(t);
    path.atoms.push_back(at);
  }
  return path;
}

std::size_t simulate_endpoint(const GapChain& chain, std::size_t start, double t_max, RandomStream& rng) {
  if (start >= chain.size()) throw DomainError("simulate_endpoint: start atom outside the chain");
  if (chain.frozen()) return start;
  double t = 0.0;
  std::size_t at = start;
  for (;;) {
    const double rp = chain.right_rates()[at];
    const double rm = chain.left_rates()[at];
    const double rate = rp + rm;
    t += rng.exponential() / rate;
    if (t > t_max) return at;
    at = (rng.uniform() * rate < rp) ? at + 1 : at - 1;
  }
}

ReturnProbabilityReport return_probability(const GapChain& chain, std::size_t atom, std::span<const double> s,
                                           double tolerance, const EvolveOptions& options) {
  ReturnProbabilityReport report;
  report.s.assign(s.begin(), s.end());
  report.bound = chain.weights().at(atom) / chain.total_weight();
  const auto laws = evolve(chain, atom, s, options);
  for (const auto& law : laws) report.values.push_back(law[atom]);
  for (std::size_t k = 0; k < report.values.size(); ++k) {
    report.worst_bound_violation = std::max(report.worst_bound_violation, report.bound - report.values[k]);
    if (k > 0 && report.s[k] >= report.s[k - 1]) {
      report.worst_increase = std::max(report.worst_increase, report.values[k] - report.values[k - 1]);
    }
  }
  report.bound_holds = report.worst_bound_violation <= tolerance;
  report.monotone = report.worst_increase <= tolerance;
  return report;
}

}  // namespace finlab
