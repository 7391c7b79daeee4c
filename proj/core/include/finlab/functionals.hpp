#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "finlab/gap_chain.hpp"
#include "finlab/heavy_tail.hpp"
#include "finlab/speed_measure.hpp"
#include "finlab/stats.hpp"

namespace finlab {

/// Truncated FIN environment. When `truncation_budget` is set, the cutoff
/// must keep the expected discarded mass per unit length within it.
struct FinEnvironment {
  FinParams params;
  std::optional<double> truncation_budget;
};

/// Initial window sizing; the guard then doubles the window as needed.
/// Lattice walks start with half-width scale * (t / x_min)^{alpha/(1+alpha)}
/// + pad sites (scale * sqrt(t) + pad for homogeneous rates). FIN
/// environments start from their own L.
struct WindowPolicy {
  double scale = 6.0;
  double pad = 10.0;
  GuardOptions guard;
};

/// Ensemble over environments: the outer expectation of every functional.
/// Replica r draws its environment from substream (experiment_id, r, 0) and
/// any paths from (experiment_id, r, 1 + k).
struct EnsembleSpec {
  std::variant<TailSpec, FinEnvironment> environment = TailSpec::pareto(0.5);
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  std::uint64_t experiment_id = 0;
  WindowPolicy window;
  EvolveOptions solver;

  static EnsembleSpec lattice(TailSpec tail, std::size_t replicas, std::uint64_t seed);
  static EnsembleSpec fin(double alpha, double half_width, double delta, std::size_t replicas,
                          std::uint64_t seed);

  /// Throws ConfigError on invalid parameters (replicas == 0, bad tail, ...).
  void validate() const;
  [[nodiscard]] bool is_fin() const { return std::holds_alternative<FinEnvironment>(environment); }
  [[nodiscard]] double alpha() const;
  [[nodiscard]] RandomStream replica_stream(std::size_t replica) const;
  [[nodiscard]] RandomStream environment_stream(std::size_t replica) const;
  [[nodiscard]] RandomStream path_stream(std::size_t replica, std::uint64_t index = 0) const;
  /// One-line description for CSV headers and manifests.
  [[nodiscard]] std::string describe() const;
};

/// Speed measure of replica r on the given half-width (sites for lattice
/// walks, L for FIN environments). Lattice walks use eps = 1, c = 1, so the
/// chain is the walk itself with rates 1/(2 tau_i).
DiscreteMeasure replica_measure(const EnsembleSpec& ens, std::size_t replica, double half_width);

/// Initial half-width for horizon t under the ensemble's window policy.
double initial_half_width(const EnsembleSpec& ens, double t);

/// Guarded evolution of replica r from the origin to the given times.
GuardedEvolution replica_evolution(const EnsembleSpec& ens, std::size_t replica, std::span<const double> times);

/// Per-replica values of sum_i P(X_t = i | tau)^2, replica-major.
std::vector<std::vector<double>> replica_collision(const EnsembleSpec& ens, std::span<const double> times);

/// q_t = E sum_i P(X_t = i | tau)^2 for each t.
std::vector<Estimate> q_t(const EnsembleSpec& ens, std::span<const double> times);

/// Two-time observables at waiting time t_w and absolute lags t:
///   collision:  E sum_i P(X_{t_w+t} = i | tau, X_{t_w})^2
///   same_site:  P(X_{t_w+t} = X_{t_w})
///   sojourn:    P(X stays at X_{t_w} on [t_w, t_w+t]) = E sum_k p_k(t_w) exp(-t r_k)
/// where r_k is the exit rate of atom k.
struct AgingEstimates {
  std::vector<Estimate> collision;
  std::vector<Estimate> same_site;
  std::vector<Estimate> sojourn;
};
AgingEstimates aging(const EnsembleSpec& ens, double t_w, std::span<const double> lags);

/// q_{theta t_w}(t_w) for each theta; theta = 0 gives exactly 1.
std::vector<Estimate> q_two_time(const EnsembleSpec& ens, double t_w, std::span<const double> thetas);
Estimate q_prime(const EnsembleSpec& ens, double t_w, double t);
Estimate q_star(const EnsembleSpec& ens, double t_w, double t);

/// Sojourn probabilities only; needs just the law at t_w per replica.
/// Replica-major per-replica values.
std::vector<std::vector<double>> replica_sojourn(const EnsembleSpec& ens, double t_w, std::span<const double> lags);
std::vector<Estimate> q_star_curve(const EnsembleSpec& ens, double t_w, std::span<const double> lags);

/// P(max of tau over [t_w, t_w + theta t_w] > max of tau over [0, t_w]),
/// by path simulation on a lazily extended lattice (no window). Binomial
/// standard error over all (environment, path) pairs.
Estimate novelty(const EnsembleSpec& ens, double t_w, double theta, std::size_t paths_per_replica);

/// E sum_x rho_bar({x})^2 for the truncated FIN diffusion started at the
/// atom nearest 0. Requires a FIN ensemble.
std::vector<Estimate> fin_q(const EnsembleSpec& ens, std::span<const double> s);
std::vector<Estimate> fin_q(double alpha, std::span<const double> s, double half_width, double delta,
                            std::size_t replicas, std::uint64_t seed);

/// Same quantity from two independent simulated copies per environment:
/// the fraction of path pairs that end on the same atom.
Estimate fin_collision_probability(const EnsembleSpec& ens, double s, std::size_t pairs_per_replica);

/// Mean of per-replica rows, column by column.
std::vector<Estimate> summarize_columns(const std::vector<std::vector<double>>& rows);

}  // namespace finlab
