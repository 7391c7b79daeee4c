#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "finlab/errors.hpp"
#include "finlab/heavy_tail.hpp"
#include "finlab/stable_law.hpp"
#include "finlab/stats.hpp"

using namespace finlab;

namespace {

double fraction_above(const std::vector<double>& xs, double t) {
  std::size_t k = 0;
  for (double x : xs) k += (x > t);
  return static_cast<double>(k) / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("tail spec validation and closed forms") {
  CHECK_THROWS_AS(TailSpec::pareto(1.2), ConfigError);
  CHECK_THROWS_AS(TailSpec::pareto(0.5, 0.0), ConfigError);
  CHECK_THROWS_AS(tail_family_from_string("cauchy"), ConfigError);
  CHECK(tail_family_from_string("stable") == TailFamily::StableMatched);

  const TailSpec p = TailSpec::pareto(0.5, 2.0);
  CHECK(p.survival(1.0) == 1.0);
  CHECK(p.survival(8.0) == doctest::Approx(0.5));
  CHECK(p.upper_quantile(0.25) == doctest::Approx(32.0));
  CHECK(p.support_min() == 2.0);
}

TEST_CASE("Pareto and stable site draws follow their tails") {
  const int n = 200000;
  const RandomStream root(5);
  for (TailSpec spec : {TailSpec::pareto(0.5), TailSpec::stable_matched(0.5)}) {
    CAPTURE(to_string(spec.family));
    const TauField tau = sample_tau(spec, n / 2, root);
    for (double t : {0.5, 1.5, 4.0, 30.0, 400.0}) {
      CAPTURE(t);
      const double oracle = spec.family == TailFamily::Pareto ? std::min(1.0, 1.0 / std::sqrt(t))
                                                              : std::erf(std::sqrt(std::numbers::pi / (4.0 * t)));
      const double se = std::sqrt(oracle * (1.0 - oracle) / static_cast<double>(tau.size()));
      CHECK(std::abs(fraction_above(tau.values, t) - oracle) <= 3.0 * std::max(se, 1e-12));
    }
  }
}

TEST_CASE("windows are nested: a larger window extends a smaller one") {
  const TailSpec spec = TailSpec::pareto(0.6);
  const RandomStream s(9);
  const TauField small = sample_tau(spec, 10, s);
  const TauField big = sample_tau(spec, 25, s);
  for (std::int64_t i = -10; i <= 10; ++i) CHECK(small.at_site(i) == big.at_site(i));
  CHECK(sample_tau_site(spec, 3, s) == small.at_site(3));
  const TauField range = sample_tau_range(spec, -3, 40, s);
  CHECK(range.at_site(7) == big.at_site(7));
  CHECK_THROWS_AS((void)small.at_site(11), DomainError);
}

TEST_CASE("homogeneous fixture is identically one") {
  const TauField tau = sample_tau(TailSpec::homogeneous(), 5, RandomStream(1));
  for (double v : tau.values) CHECK(v == 1.0);
}

TEST_CASE("c_eps: closed form against the inverse-tail route") {
  for (double eps : {0.2, 1e-2, 1e-4}) {
    CAPTURE(eps);
    const TailSpec p = TailSpec::pareto(0.5, 3.0);
    CHECK(c_eps(p, eps) == doctest::Approx(c_eps_from_tail(p, eps)).epsilon(1e-12));
    const TailSpec p7 = TailSpec::pareto(0.7);
    CHECK(c_eps(p7, eps) == doctest::Approx(c_eps_from_tail(p7, eps)).epsilon(1e-12));
  }
  // StableMatched uses eps^{1/alpha}; the inverse-tail value agrees to first order.
  const TailSpec s = TailSpec::stable_matched(0.5);
  CHECK(c_eps(s, 1e-3) == doctest::Approx(1e-6).epsilon(1e-14));
  CHECK(c_eps(s, 1e-3) / c_eps_from_tail(s, 1e-3) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(c_eps(TailSpec::homogeneous(), 0.1) == doctest::Approx(0.1));
  CHECK_THROWS_AS(c_eps(s, 1.0), DomainError);
}

TEST_CASE("g_inverse matches tails") {
  const TailSpec p = TailSpec::pareto(0.5, 1.0);
  const StableLaw law(0.5);
  for (double y : {0.1, 1.0, 10.0, 1e4}) {
    CAPTURE(y);
    CHECK(p.survival(g_inverse(p, y)) == doctest::Approx(law.survival(y)).epsilon(1e-6));
  }
  const TailSpec s = TailSpec::stable_matched(0.5);
  CHECK(g_inverse(s, 3.7) == doctest::Approx(3.7));
}

TEST_CASE("coarsening sums consecutive increments") {
  const auto fine = sample_stable_increments(0.5, 0.01, -40, 80, RandomStream(3));
  const auto coarse = coarsen(fine, 4, -10, 20);
  CHECK(coarse.eps == doctest::Approx(0.04));
  for (std::int64_t i = -10; i < 10; ++i) {
    double sum = 0.0;
    for (std::int64_t j = 4 * i; j < 4 * i + 4; ++j) sum += fine.at_index(j);
    CHECK(coarse.at_index(i) == doctest::Approx(sum).epsilon(1e-15));
  }
  CHECK_THROWS_AS(coarsen(fine, 4, -11, 20), DomainError);

  // Increments over eps are distributed as eps^{1/alpha} V_1.
  const auto many = sample_stable_increments(0.5, 0.01, 50000, RandomStream(4));
  const double y = 2e-4;
  const double oracle = std::erf(std::sqrt(std::numbers::pi / (4.0 * y / 1e-4)));
  const double se = std::sqrt(oracle * (1 - oracle) / static_cast<double>(many.size()));
  CHECK(std::abs(fraction_above(many.values, y) - oracle) < 3 * se);
}

TEST_CASE("coupled tau has the marginal of F") {
  const double eps = 1e-3;
  for (TailSpec spec : {TailSpec::pareto(0.5), TailSpec::stable_matched(0.5)}) {
    CAPTURE(to_string(spec.family));
    const auto inc = sample_stable_increments(spec.alpha, eps, 10000, RandomStream(21));
    const TauField coupled = coupled_tau(inc, spec);
    const TauField direct = sample_tau(spec, 10000, RandomStream(22));
    const double ks = ks_statistic(coupled.values, direct.values);
    CHECK(ks < ks_critical_value(coupled.size(), direct.size(), 0.01));
  }
  // StableMatched: c_eps * tau equals the raw increment.
  const TailSpec s = TailSpec::stable_matched(0.5);
  const auto inc = sample_stable_increments(0.5, 0.05, 20, RandomStream(8));
  const TauField tau = coupled_tau(inc, s);
  for (std::size_t i = 0; i < tau.size(); ++i) {
    CHECK(c_eps(s, 0.05) * tau.values[i] == doctest::Approx(inc.values[i]).epsilon(1e-12));
  }
}
