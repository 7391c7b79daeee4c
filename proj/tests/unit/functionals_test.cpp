#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "finlab/errors.hpp"
#include "finlab/functionals.hpp"

using namespace finlab;

namespace {

struct ThreadsEnv {
  explicit ThreadsEnv(const char* n) { ::setenv("FINLAB_THREADS", n, 1); }
  ~ThreadsEnv() { ::unsetenv("FINLAB_THREADS"); }
};

}  // namespace

TEST_CASE("ensemble validation") {
  EnsembleSpec ens = EnsembleSpec::lattice(TailSpec::pareto(0.5), 3, 1);
  CHECK_NOTHROW(ens.validate());
  ens.replicas = 0;
  CHECK_THROWS_AS(ens.validate(), ConfigError);

  EnsembleSpec fin = EnsembleSpec::fin(0.5, 2.0, 1e-2, 3, 1);
  std::get<FinEnvironment>(fin.environment).truncation_budget = 1e-4;
  CHECK_THROWS_AS(fin.validate(), BudgetError);
  std::get<FinEnvironment>(fin.environment).params.delta = delta_for_budget(0.5, 1e-4);
  CHECK_NOTHROW(fin.validate());
  // 4e4 expected atoms: the window guard refuses before allocating the spectrum.
  CHECK_THROWS_AS(q_t(fin, std::vector<double>{1.0}), BudgetError);
}

TEST_CASE("q_t on homogeneous rates is the Bessel value with zero spread") {
  const EnsembleSpec ens = EnsembleSpec::lattice(TailSpec::homogeneous(), 3, 1);
  const std::vector<double> t{0.5, 3.0, 20.0};
  const auto q = q_t(ens, t);
  for (std::size_t k = 0; k < t.size(); ++k) {
    CAPTURE(t[k]);
    CHECK(q[k].value == doctest::Approx(std::exp(-2 * t[k]) * boost::math::cyl_bessel_i(0, 2 * t[k])).epsilon(1e-9));
    CHECK(q[k].se < 1e-14);
    CHECK(q[k].replicas == 3);
  }
}

TEST_CASE("results do not depend on the worker count") {
  const EnsembleSpec ens = EnsembleSpec::lattice(TailSpec::pareto(0.5), 12, 4);
  const std::vector<double> t{10.0, 300.0};
  std::vector<Estimate> one, three;
  {
    ThreadsEnv env("1");
    one = q_t(ens, t);
  }
  {
    ThreadsEnv env("3");
    three = q_t(ens, t);
  }
  for (std::size_t k = 0; k < t.size(); ++k) {
    CHECK(one[k].value == three[k].value);
    CHECK(one[k].se == three[k].se);
  }
}

TEST_CASE("q_t values are probabilities-of-collision") {
  const EnsembleSpec ens = EnsembleSpec::lattice(TailSpec::pareto(0.5), 8, 2);
  const std::vector<double> t{1.0, 100.0, 1e4};
  const auto rows = replica_collision(ens, t);
  REQUIRE(rows.size() == 8);
  for (const auto& row : rows)
    for (double v : row) {
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
}

TEST_CASE("two-time functionals at zero lag") {
  const EnsembleSpec ens = EnsembleSpec::lattice(TailSpec::pareto(0.5), 4, 3);
  const auto q = q_two_time(ens, 100.0, std::vector<double>{0.0, 1.0});
  CHECK(q[0].value == 1.0);
  CHECK(q[1].value < 1.0);
  const auto star = q_star_curve(ens, 100.0, std::vector<double>{0.0, 10.0, 1000.0});
  CHECK(star[0].value == doctest::Approx(1.0));
  CHECK(star[1].value >= star[2].value);
  const AgingEstimates a = aging(ens, 100.0, std::vector<double>{10.0});
  // Staying put implies being at the same site.
  CHECK(a.sojourn[0].value <= a.same_site[0].value + 1e-12);
}

TEST_CASE("fin_q matches the paired-path collision estimate") {
  const EnsembleSpec ens = EnsembleSpec::fin(0.5, 4.0, 1e-3, 40, 6);
  const std::vector<double> s{1.0};
  const Estimate exact = fin_q(ens, s).front();
  const Estimate paired = fin_collision_probability(ens, 1.0, 400);
  CHECK(agree_within(exact, paired, 3.0));
  CHECK(exact.value > 0.0);
  CHECK(exact.value < 1.0);
}

TEST_CASE("novelty is a probability and grows with theta") {
  const EnsembleSpec ens = EnsembleSpec::lattice(TailSpec::pareto(0.5), 20, 5);
  const Estimate small = novelty(ens, 100.0, 0.1, 20);
  const Estimate large = novelty(ens, 100.0, 10.0, 20);
  CHECK(small.value >= 0.0);
  CHECK(large.value <= 1.0);
  CHECK(large.value >= small.value);
}
