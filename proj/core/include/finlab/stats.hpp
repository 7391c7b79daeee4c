#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace finlab {

/// Ensemble mean with its i.i.d. standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;  ///< sample sd / sqrt(replicas)
  std::size_t replicas = 0;
};

/// Mean and standard error of independent replica values, summed in index
/// order so the result is bitwise reproducible.
Estimate summarize(std::span<const double> values);

/// Binomial proportion estimate with se sqrt(p(1-p)/n).
Estimate binomial_estimate(std::size_t successes, std::size_t trials);

/// sqrt(a.se^2 + b.se^2).
double combined_se(const Estimate& a, const Estimate& b);

/// |a - b| <= k * combined_se(a, b).
bool agree_within(const Estimate& a, const Estimate& b, double k);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Asymptotic critical value of the two-sample KS statistic at the given
/// significance: sqrt(-ln(level/2)/2) * sqrt((n+m)/(n*m)).
double ks_critical_value(std::size_t n, std::size_t m, double level);

/// Quantile of a discrete distribution given by (location, weight) pairs,
/// weights need not be normalized. Uses the left-continuous inverse CDF.
double weighted_quantile(std::span<const double> locations, std::span<const double> weights,
                         double level);

/// Inclusive grids with `count` points.
std::vector<double> log_space(double lo, double hi, std::size_t count);
std::vector<double> lin_space(double lo, double hi, std::size_t count);

}  // namespace finlab
