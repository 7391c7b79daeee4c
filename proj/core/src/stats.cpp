#include "finlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "finlab/errors.hpp"

namespace finlab {

Estimate summarize(std::span<const double> values) {
  Estimate out;
  out.replicas = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.value = sum / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.value) * (v - out.value);
  const double variance = ss / static_cast<double>(values.size() - 1);
  out.se = std::sqrt(variance / static_cast<double>(values.size()));
  return out;
}

Estimate binomial_estimate(std::size_t successes, std::size_t trials) {
  Estimate out;
  out.replicas = trials;
  if (trials == 0) return out;
  const double p = static_cast<double>(successes) / static_cast<double>(trials);
  out.value = p;
  out.se = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return out;
}

double combined_se(const Estimate& a, const Estimate& b) { return std::hypot(a.se, b.se); }

bool agree_within(const Estimate& a, const Estimate& b, double k) {
  return std::abs(a.value - b.value) <= k * combined_se(a, b);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double level) {
  const double c = std::sqrt(-0.5 * std::log(level / 2.0));
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

double weighted_quantile(std::span<const double> locations, std::span<const double> weights,
                         double level) {
  if (locations.size() != weights.size() || locations.empty())
    throw DomainError("weighted_quantile: size mismatch or empty input");
  std::vector<std::size_t> order(locations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t l, std::size_t r) { return locations[l] < locations[r]; });
  double total = 0.0;
  for (double w : weights) total += w;
  const double target = level * total;
  double acc = 0.0;
  for (std::size_t k : order) {
    acc += weights[k];
    if (acc >= target) return locations[k];
  }
  return locations[order.back()];
}

std::vector<double> log_space(double lo, double hi, std::size_t count) {
  if (lo <= 0.0 || hi <= 0.0) throw DomainError("log_space: bounds must be positive");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t k = 0; k < count; ++k)
    out[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> lin_space(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t k = 0; k < count; ++k)
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  return out;
}

}  // namespace finlab
