#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "finlab/random.hpp"

namespace finlab {

enum class TailFamily {
  Pareto,         ///< P(tau > t) = (t / x_min)^{-alpha} for t >= x_min
  StableMatched,  ///< tau distributed as the subordinator value V_1
  Homogeneous,    ///< tau == 1; finite-mean fixture (Brownian regime)
};

std::string to_string(TailFamily family);
TailFamily tail_family_from_string(const std::string& name);

/// Law F of the mean holding times.
struct TailSpec {
  TailFamily family = TailFamily::Pareto;
  double alpha = 0.5;
  double x_min = 1.0;  ///< Pareto lower cutoff; ignored by other families

  static TailSpec pareto(double alpha, double x_min = 1.0);
  static TailSpec stable_matched(double alpha);
  static TailSpec homogeneous();

  /// Throws ConfigError unless 0 < alpha < 1 and x_min > 0 (Pareto).
  void validate() const;
  /// P(tau > t).
  [[nodiscard]] double survival(double t) const;
  /// inf{t >= 0 : P(tau > t) <= p} for p in (0, 1].
  [[nodiscard]] double upper_quantile(double p) const;
  /// Smallest value in the support.
  [[nodiscard]] double support_min() const;
};

/// Rates tau_i on the sites first_site .. first_site + size - 1.
struct TauField {
  std::int64_t first_site = 0;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] std::int64_t last_site() const {
    return first_site + static_cast<std::int64_t>(values.size()) - 1;
  }
  [[nodiscard]] double at_site(std::int64_t site) const;
};

/// Increments V_{eps(i+1)} - V_{eps i} for i = first_index .. first_index + size - 1.
struct StableIncrements {
  double alpha = 0.5;
  double eps = 1.0;
  std::int64_t first_index = 0;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] double at_index(std::int64_t i) const;
};

/// 2M+1 i.i.d. draws from F on sites -M..M. Site i uses substream
/// `stream.site(i)`, so a larger window extends a smaller one.
TauField sample_tau(const TailSpec& spec, std::int64_t half_width, const RandomStream& stream);
/// The draw for a single site; sample_tau uses exactly this value.
double sample_tau_site(const TailSpec& spec, std::int64_t site, const RandomStream& stream);
/// Same draws for an arbitrary site range.
TauField sample_tau_range(const TailSpec& spec, std::int64_t first_site, std::int64_t last_site,
                          const RandomStream& stream);

/// Rescaling constant of the lattice speed measure. Pareto: eps^{1/alpha} / x_min,
/// the exact inverse tail quantile. StableMatched: eps^{1/alpha}, the choice
/// under which the coupling is the identity. Homogeneous: eps (law of large
/// numbers scaling). Requires 0 < eps < 1.
double c_eps(const TailSpec& spec, double eps);

/// 1 / inf{t >= 0 : P(tau_0 > t) <= eps}, evaluated from the tail of F
/// (quantile solved by bisection for StableMatched).
double c_eps_from_tail(const TailSpec& spec, double eps);

/// Increments over the index window [first, first + count) at spacing eps;
/// index i uses substream `stream.site(i)`.
StableIncrements sample_stable_increments(double alpha, double eps, std::int64_t first_index,
                                          std::size_t count, const RandomStream& stream);
/// Symmetric window of sites -M..M.
StableIncrements sample_stable_increments(double alpha, double eps, std::int64_t half_width,
                                          const RandomStream& stream);

/// Sums `factor` consecutive increments: the coarse cell i covers fine
/// indices [i*factor, (i+1)*factor). Fine increments must cover every
/// requested coarse cell exactly.
StableIncrements coarsen(const StableIncrements& fine, std::int64_t factor, std::int64_t first_coarse,
                         std::size_t coarse_count);

/// G^{-1}(y): the tau-value whose tail matches P(V_1 > y).
double g_inverse(const TailSpec& spec, double y);

/// g_eps(x) = c_eps * G^{-1}(eps^{-1/alpha} x).
double g_eps(const TailSpec& spec, double eps, double x);

/// tau^(eps)_i = g_eps(increment_i) / c_eps on the increments' index window.
TauField coupled_tau(const StableIncrements& increments, const TailSpec& spec);

}  // namespace finlab
