#include "finlab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "finlab/errors.hpp"
#include "finlab/parallel.hpp"

namespace finlab {

namespace {

constexpr std::uint64_t kEnvironmentStream = 0;
constexpr std::uint64_t kPathStreamBase = 1;

double max_of(std::span<const double> values) {
  double m = 0.0;
  for (const double v : values) m = std::max(m, v);
  return m;
}

void check_nonnegative(std::span<const double> values, const char* what) {
  for (const double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite and nonnegative");
  }
}

}  // namespace

EnsembleSpec EnsembleSpec::lattice(TailSpec tail, std::size_t replicas, std::uint64_t seed) {
  EnsembleSpec ens;
  ens.environment = tail;
  ens.replicas = replicas;
  ens.seed = seed;
  return ens;
}

EnsembleSpec EnsembleSpec::fin(double alpha, double half_width, double delta, std::size_t replicas,
                               std::uint64_t seed) {
  EnsembleSpec ens;
  ens.environment = FinEnvironment{FinParams{alpha, half_width, delta}, std::nullopt};
  ens.replicas = replicas;
  ens.seed = seed;
  return ens;
}

void EnsembleSpec::validate() const {
  if (replicas == 0) throw ConfigError("ensemble needs at least one replica");
  if (!(window.scale > 0.0) || !(window.pad >= 0.0)) throw ConfigError("window policy must be positive");
  if (const auto* tail = std::get_if<TailSpec>(&environment)) {
    tail->validate();
    return;
  }
  const auto& fin = std::get<FinEnvironment>(environment);
  const auto& p = fin.params;
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw ConfigError("FIN alpha must lie in (0, 1)");
  if (!(p.half_width > 0.0)) throw ConfigError("FIN half-width L must be positive");
  if (!(p.delta > 0.0)) throw ConfigError("FIN weight cutoff delta must be positive");
  if (fin.truncation_budget) {
    const double mass = truncated_mass_per_length(p.alpha, p.delta);
    if (mass > *fin.truncation_budget) {
      std::ostringstream msg;
      msg << "weight cutoff delta = " << p.delta << " discards " << mass
          << " expected mass per unit length, above the budget " << *fin.truncation_budget
          << "; use delta <= " << delta_for_budget(p.alpha, *fin.truncation_budget);
      throw BudgetError(msg.str());
    }
  }
}

double EnsembleSpec::alpha() const {
  if (const auto* tail = std::get_if<TailSpec>(&environment)) return tail->alpha;
  return std::get<FinEnvironment>(environment).params.alpha;
}

RandomStream EnsembleSpec::replica_stream(std::size_t replica) const {
  return RandomStream(seed).substream(experiment_id).substream(replica);
}

RandomStream EnsembleSpec::environment_stream(std::size_t replica) const {
  return replica_stream(replica).substream(kEnvironmentStream);
}

RandomStream EnsembleSpec::path_stream(std::size_t replica, std::uint64_t index) const {
  return replica_stream(replica).substream(kPathStreamBase + index);
}

std::string EnsembleSpec::describe() const {
  std::ostringstream out;
  out.precision(17);
  if (const auto* tail = std::get_if<TailSpec>(&environment)) {
    out << "environment=lattice family=" << to_string(tail->family) << " alpha=" << tail->alpha;
    if (tail->family == TailFamily::Pareto) out << " x_min=" << tail->x_min;
  } else {
    const auto& fin = std::get<FinEnvironment>(environment);
    out << "environment=fin alpha=" << fin.params.alpha << " L=" << fin.params.half_width
        << " delta=" << fin.params.delta;
    if (fin.truncation_budget) out << " truncation_budget=" << *fin.truncation_budget;
  }
  out << " replicas=" << replicas << " seed=" << seed << " experiment_id=" << experiment_id
      << " window_scale=" << window.scale << " window_pad=" << window.pad
      << " guard_tolerance=" << window.guard.tolerance;
  return out.str();
}

DiscreteMeasure replica_measure(const EnsembleSpec& ens, std::size_t replica, double half_width) {
  const RandomStream env = ens.environment_stream(replica);
  if (const auto* tail = std::get_if<TailSpec>(&ens.environment)) {
    const auto sites = static_cast<std::int64_t>(std::ceil(half_width));
    return lattice_measure(sample_tau(*tail, sites, env), 1.0, 1.0);
  }
  FinParams params = std::get<FinEnvironment>(ens.environment).params;
  params.half_width = half_width;
  return sample_fin_measure(params, env);
}

double initial_half_width(const EnsembleSpec& ens, double t) {
  const auto& w = ens.window;
  if (const auto* tail = std::get_if<TailSpec>(&ens.environment)) {
    switch (tail->family) {
      case TailFamily::Homogeneous:
        return 2.5 * w.scale * std::sqrt(t) + w.pad;
      case TailFamily::Pareto:
        return w.scale * std::pow(t / tail->x_min, tail->alpha / (1.0 + tail->alpha)) + w.pad;
      case TailFamily::StableMatched:
        return w.scale * std::pow(t, tail->alpha / (1.0 + tail->alpha)) + w.pad;
    }
  }
  return std::get<FinEnvironment>(ens.environment).params.half_width;
}

GuardedEvolution replica_evolution(const EnsembleSpec& ens, std::size_t replica, std::span<const double> times) {
  const MeasureFactory factory = [&ens, replica](double half_width) {
    return replica_measure(ens, replica, half_width);
  };
  return evolve_guarded(factory, initial_half_width(ens, max_of(times)), 0.0, times, ens.window.guard,
                        ens.solver);
}

std::vector<std::vector<double>> replica_collision(const EnsembleSpec& ens, std::span<const double> times) {
  ens.validate();
  check_nonnegative(times, "times");
  std::vector<std::vector<double>> rows(ens.replicas);
  parallel_for(ens.replicas, [&](std::size_t r) {
    const auto evo = replica_evolution(ens, r, times);
    std::vector<double> row(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) row[k] = sum_sq_atoms(evo.laws[k]);
    rows[r] = std::move(row);
  });
  return rows;
}

std::vector<Estimate> summarize_columns(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t columns = rows.front().size();
  std::vector<Estimate> out(columns);
  std::vector<double> column(rows.size());
  for (std::size_t c = 0; c < columns; ++c) {
    for (std::size_t r = 0; r < rows.size(); ++r) column[r] = rows[r][c];
    out[c] = summarize(column);
  }
  return out;
}

std::vector<Estimate> q_t(const EnsembleSpec& ens, std::span<const double> times) {
  return summarize_columns(replica_collision(ens, times));
}

AgingEstimates aging(const EnsembleSpec& ens, double t_w, std::span<const double> lags) {
  ens.validate();
  check_nonnegative(std::span<const double>(&t_w, 1), "waiting time");
  check_nonnegative(lags, "lags");
  const std::size_t n_lags = lags.size();
  std::vector<std::vector<double>> collision(ens.replicas), same(ens.replicas), sojourn(ens.replicas);
  const double horizon = t_w + max_of(lags);
  parallel_for(ens.replicas, [&](std::size_t r) {
    const std::vector<double> guard_times{t_w, horizon};
    const auto evo = replica_evolution(ens, r, guard_times);
    const auto& p = evo.laws[0].probabilities();
    const auto sums = two_time_sums(evo.chain, p, lags, ens.solver, 1e-10, evo.propagator.get());
    std::vector<double> stay(n_lags, 0.0);
    for (std::size_t l = 0; l < n_lags; ++l) {
      double value = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) value += p[k] * std::exp(-lags[l] * evo.chain.exit_rate(k));
      }
      stay[l] = value;
    }
    collision[r] = sums.collision;
    same[r] = sums.same_site;
    sojourn[r] = std::move(stay);
  });
  return AgingEstimates{summarize_columns(collision), summarize_columns(same), summarize_columns(sojourn)};
}

std::vector<Estimate> q_two_time(const EnsembleSpec& ens, double t_w, std::span<const double> thetas) {
  if (!(t_w > 0.0)) throw ConfigError("q_two_time needs a positive waiting time");
  check_nonnegative(thetas, "theta values");
  std::vector<double> lags(thetas.size());
  for (std::size_t k = 0; k < thetas.size(); ++k) lags[k] = thetas[k] * t_w;
  auto estimates = aging(ens, t_w, lags).collision;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    if (thetas[k] == 0.0) estimates[k] = Estimate{1.0, 0.0, ens.replicas};
  }
  return estimates;
}

Estimate q_prime(const EnsembleSpec& ens, double t_w, double t) {
  return aging(ens, t_w, std::span<const double>(&t, 1)).same_site.front();
}

Estimate q_star(const EnsembleSpec& ens, double t_w, double t) {
  return q_star_curve(ens, t_w, std::span<const double>(&t, 1)).front();
}

std::vector<std::vector<double>> replica_sojourn(const EnsembleSpec& ens, double t_w,
                                                 std::span<const double> lags) {
  ens.validate();
  check_nonnegative(std::span<const double>(&t_w, 1), "waiting time");
  check_nonnegative(lags, "lags");
  std::vector<std::vector<double>> rows(ens.replicas);
  parallel_for(ens.replicas, [&](std::size_t r) {
    const auto evo = replica_evolution(ens, r, std::span<const double>(&t_w, 1));
    const auto& p = evo.laws[0].probabilities();
    std::vector<double> row(lags.size(), 0.0);
    for (std::size_t l = 0; l < lags.size(); ++l) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) row[l] += p[k] * std::exp(-lags[l] * evo.chain.exit_rate(k));
      }
    }
    rows[r] = std::move(row);
  });
  return rows;
}

std::vector<Estimate> q_star_curve(const EnsembleSpec& ens, double t_w, std::span<const double> lags) {
  return summarize_columns(replica_sojourn(ens, t_w, lags));
}

namespace {

/// Rates on Z drawn on demand, site by site, from the same per-site
/// substreams as sample_tau.
class LazyLattice {
 public:
  LazyLattice(TailSpec spec, RandomStream stream) : spec_(spec), stream_(stream) {}

  double tau(std::int64_t site) {
    auto& side = site >= 0 ? right_ : left_;
    const auto index = static_cast<std::size_t>(site >= 0 ? site : -site - 1);
    while (side.size() <= index) {
      const auto next = static_cast<std::int64_t>(side.size());
      side.push_back(sample_tau_site(spec_, site >= 0 ? next : -next - 1, stream_));
    }
    return side[index];
  }

 private:
  TailSpec spec_;
  RandomStream stream_;
  std::vector<double> right_;  // sites 0, 1, 2, ...
  std::vector<double> left_;   // sites -1, -2, ...
};

}  // namespace

Estimate novelty(const EnsembleSpec& ens, double t_w, double theta, std::size_t paths_per_replica) {
  ens.validate();
  const auto* tail = std::get_if<TailSpec>(&ens.environment);
  if (tail == nullptr) throw ConfigError("novelty is defined for lattice ensembles");
  if (!(t_w >= 0.0) || !(theta >= 0.0)) throw ConfigError("novelty needs t_w >= 0 and theta >= 0");
  if (paths_per_replica == 0) throw ConfigError("novelty needs at least one path per replica");
  std::vector<std::size_t> successes(ens.replicas, 0);
  const double t_end = t_w * (1.0 + theta);
  parallel_for(ens.replicas, [&](std::size_t r) {
    LazyLattice lattice(*tail, ens.environment_stream(r));
    std::size_t count = 0;
    for (std::size_t k = 0; k < paths_per_replica; ++k) {
      RandomStream rng = ens.path_stream(r, k);
      std::int64_t x = 0;
      double t = 0.0;
      double max_before = lattice.tau(0);
      double max_after = -1.0;
      bool after = false;
      for (;;) {
        const double hold = lattice.tau(x) * rng.exponential();
        if (!after && t + hold >= t_w) {
          after = true;
          max_after = lattice.tau(x);
        }
        t += hold;
        if (t > t_end) break;
        x += rng.uniform() < 0.5 ? -1 : 1;
        const double tau = lattice.tau(x);
        if (!after) {
          max_before = std::max(max_before, tau);
        } else {
          max_after = std::max(max_after, tau);
          if (max_after > max_before) break;
        }
      }
      if (after && max_after > max_before) ++count;
    }
    successes[r] = count;
  });
  std::size_t total = 0;
  for (const auto s : successes) total += s;
  return binomial_estimate(total, ens.replicas * paths_per_replica);
}

std::vector<Estimate> fin_q(const EnsembleSpec& ens, std::span<const double> s) {
  if (!ens.is_fin()) throw ConfigError("fin_q needs a FIN ensemble");
  return q_t(ens, s);
}

std::vector<Estimate> fin_q(double alpha, std::span<const double> s, double half_width, double delta,
                            std::size_t replicas, std::uint64_t seed) {
  return fin_q(EnsembleSpec::fin(alpha, half_width, delta, replicas, seed), s);
}

Estimate fin_collision_probability(const EnsembleSpec& ens, double s, std::size_t pairs_per_replica) {
  if (!ens.is_fin()) throw ConfigError("fin_collision_probability needs a FIN ensemble");
  if (pairs_per_replica == 0) throw ConfigError("need at least one path pair per replica");
  ens.validate();
  std::vector<double> fraction(ens.replicas, 0.0);
  parallel_for(ens.replicas, [&](std::size_t r) {
    const auto evo = replica_evolution(ens, r, std::span<const double>(&s, 1));
    std::size_t hits = 0;
    for (std::size_t k = 0; k < pairs_per_replica; ++k) {
      RandomStream a = ens.path_stream(r, 2 * k);
      RandomStream b = ens.path_stream(r, 2 * k + 1);
      if (simulate_endpoint(evo.chain, evo.start, s, a) == simulate_endpoint(evo.chain, evo.start, s, b)) ++hits;
    }
    fraction[r] = static_cast<double>(hits) / static_cast<double>(pairs_per_replica);
  });
  return summarize(fraction);
}

}  // namespace finlab
