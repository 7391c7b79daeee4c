#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "finlab/random.hpp"
#include "finlab/speed_measure.hpp"

namespace finlab {

class SpectralPropagator;

/// Nearest-neighbour jump process on the atoms of a speed measure: Brownian
/// motion time-changed by the measure. From atom i the rate to the right
/// neighbour is 1 / (2 w_i (y_{i+1} - y_i)) and to the left neighbour
/// 1 / (2 w_i (y_i - y_{i-1})); the end atoms reflect.
class GapChain {
 public:
  GapChain() = default;
  explicit GapChain(const DiscreteMeasure& mu);

  [[nodiscard]] std::size_t size() const { return locations_.size(); }
  /// A single atom never moves.
  [[nodiscard]] bool frozen() const { return locations_.size() <= 1; }

  [[nodiscard]] const std::vector<double>& locations() const { return locations_; }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  [[nodiscard]] const std::vector<double>& right_rates() const { return right_; }
  [[nodiscard]] const std::vector<double>& left_rates() const { return left_; }
  /// Edge conductances 1 / (2 (y_{i+1} - y_i)), one per gap.
  [[nodiscard]] const std::vector<double>& conductances() const { return conductance_; }
  [[nodiscard]] const Window& window() const { return window_; }
  [[nodiscard]] double total_weight() const { return total_weight_; }

  [[nodiscard]] double exit_rate(std::size_t i) const { return right_[i] + left_[i]; }
  [[nodiscard]] double max_exit_rate() const { return max_exit_rate_; }
  [[nodiscard]] std::size_t nearest_atom(double x) const;

 private:
  std::vector<double> locations_;
  std::vector<double> weights_;
  std::vector<double> right_;
  std::vector<double> left_;
  std::vector<double> conductance_;
  Window window_{};
  double total_weight_ = 0.0;
  double max_exit_rate_ = 0.0;
};

GapChain chain_from_measure(const DiscreteMeasure& mu);

enum class EvolveMethod {
  Auto,            ///< uniformization for short horizons, spectral otherwise
  Uniformization,  ///< Poisson-weighted power series of the jump kernel
  Spectral,        ///< symmetrized eigendecomposition of the generator
};

struct EvolveOptions {
  EvolveMethod method = EvolveMethod::Auto;
  /// Auto uses uniformization while max_exit_rate * t_max stays below this.
  double uniformization_limit = 2000.0;
  /// Poisson tail mass discarded by the uniformization series.
  double series_tail = 1e-12;
  /// Hard cap on max_exit_rate * t_max for explicit uniformization.
  double max_series_work = 5e7;
};

/// P(Y_t = . | Y_0 = start) for each t (times need not be sorted).
std::vector<Law> evolve(const GapChain& chain, std::size_t start, std::span<const double> times,
                        const EvolveOptions& options = {});
Law evolve(const GapChain& chain, std::size_t start, double t, const EvolveOptions& options = {});

/// sum_k p_k P(Y_t = . | Y_0 = y_k); p must live on the chain's atoms.
Law evolve_from_law(const GapChain& chain, const Law& p, double t, const EvolveOptions& options = {});

/// Per-lag two-time sums for an initial law p on the atoms:
///   collision[l] = sum_k p_k sum_j P_kj(lag_l)^2
///   same_site[l] = sum_k p_k P_kk(lag_l)
/// Starts are taken in decreasing p_k until their mass reaches
/// 1 - start_mass_tail; the dropped mass is reported.
struct TwoTimeSums {
  std::vector<double> collision;
  std::vector<double> same_site;
  std::size_t starts_used = 0;
  double dropped_mass = 0.0;
};
/// A propagator already built for `chain` is reused when the spectral
/// method is chosen.
TwoTimeSums two_time_sums(const GapChain& chain, std::span<const double> p, std::span<const double> lags,
                          const EvolveOptions& options = {}, double start_mass_tail = 1e-10,
                          const SpectralPropagator* propagator = nullptr);

/// Window guard: builds the measure from `factory(half_width)`, starts at
/// the atom nearest to `start_location` and evolves; while the law at any
/// requested time puts more than `tolerance` mass on the outer
/// `edge_fraction` of the window (end atoms always included), the
/// half-width is doubled. Throws BudgetError after `max_doublings` retries
/// or when the chain would exceed `max_atoms`.
struct GuardOptions {
  double tolerance = 1e-8;
  double edge_fraction = 0.1;
  int max_doublings = 8;
  std::size_t max_atoms = 8000;  ///< dense eigenvectors need 8 n^2 bytes
};

struct GuardedEvolution {
  GapChain chain;
  std::size_t start = 0;
  std::vector<Law> laws;
  double half_width = 0.0;
  int doublings = 0;
  double edge_mass = 0.0;  ///< largest edge mass over the requested times
  /// Eigendecomposition of `chain` when the spectral method was used.
  std::shared_ptr<const SpectralPropagator> propagator;
};

using MeasureFactory = std::function<DiscreteMeasure(double half_width)>;

GuardedEvolution evolve_guarded(const MeasureFactory& factory, double initial_half_width,
                                double start_location, std::span<const double> times,
                                const GuardOptions& guard = {}, const EvolveOptions& options = {});

/// Probability mass on the atoms in the outer `edge_fraction` of the
/// chain's window, plus the two end atoms.
double edge_mass(const GapChain& chain, const Law& law, double edge_fraction);

/// Sample path of the chain on [0, t_max].
struct Path {
  std::vector<double> times;        ///< times[0] = 0, then jump times
  std::vector<std::size_t> atoms;   ///< atom occupied from times[k] on
  double t_max = 0.0;

  /// Atom occupied at time t in [0, t_max].
  [[nodiscard]] std::size_t atom_at(double t) const;
};

/// Gillespie simulation: exponential holding with rate r+ + r-, then a
/// jump chosen in proportion to the two rates.
Path simulate_path(const GapChain& chain, std::size_t start, double t_max, RandomStream& rng);
/// Final atom only, without storing the path.
std::size_t simulate_endpoint(const GapChain& chain, std::size_t start, double t_max, RandomStream& rng);

/// P(Y_s = y | Y_0 = y) on a grid, with the checks
///   value >= w_y / total  and  value non-increasing in s,
/// both up to `tolerance`.
struct ReturnProbabilityReport {
  std::vector<double> s;
  std::vector<double> values;
  double bound = 0.0;  ///< w_y / total weight
  bool bound_holds = true;
  bool monotone = true;
  double worst_bound_violation = 0.0;  ///< max(bound - value, 0)
  double worst_increase = 0.0;         ///< max(value_{k+1} - value_k, 0)
};

ReturnProbabilityReport return_probability(const GapChain& chain, std::size_t atom, std::span<const double> s,
                                           double tolerance = 1e-9, const EvolveOptions& options = {});

}  // namespace finlab
