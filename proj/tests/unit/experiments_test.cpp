#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <vector>

#include "finlab/errors.hpp"
#include "finlab/experiments.hpp"
#include "finlab/gap_chain.hpp"

using namespace finlab;

TEST_CASE("decreasing trend") {
  CHECK(decreasing_trend({3.0, 2.0, 1.0}, 0.0));
  CHECK(decreasing_trend({3.0, 3.0, 1.0}, 0.0));
  CHECK_FALSE(decreasing_trend({3.0, 3.0, 3.0}, 0.0));
  CHECK_FALSE(decreasing_trend({3.0, 4.0, 1.0}, 0.0));
  CHECK_FALSE(decreasing_trend({1.0, 2.0}, 0.0));
  // Rises that end at or below the floor are noise.
  CHECK(decreasing_trend({3.0, 0.1, 0.2}, 0.5));
  CHECK(decreasing_trend({0.1, 0.3, 0.2}, 0.5));
  CHECK_FALSE(decreasing_trend({3.0, 0.1, 0.7}, 0.5));
}

TEST_CASE("homogeneous collision oracle") {
  for (double x : {0.0, 0.1, 1.0, 7.5, 60.0, 300.0}) {
    CAPTURE(x);
    CHECK(homogeneous_collision(x) == doctest::Approx(std::exp(-2 * x) * boost::math::cyl_bessel_i(0, 2 * x)).epsilon(1e-12));
  }
  // Large argument: 1 / sqrt(4 pi x) asymptote.
  CHECK(homogeneous_collision(1e6) == doctest::Approx(1.0 / std::sqrt(4 * M_PI * 1e6)).epsilon(1e-6));
}

TEST_CASE("common mesh") {
  CHECK(common_mesh({0.2, 0.1, 0.05}) == doctest::Approx(0.05));
  CHECK(common_mesh({0.2, 0.1, 0.05, 0.02}) == doctest::Approx(0.01));
  CHECK(common_mesh({0.1, 0.03, 0.01}) == doctest::Approx(0.01));
}

TEST_CASE("collapse score") {
  CHECK(collapse_score({{1.0, 0.5}, {1.0, 0.5}}) == 0.0);
  CHECK(collapse_score({{1.0, 0.5}, {0.9, 0.6}, {0.95, 0.4}}) == doctest::Approx(0.2));
}

TEST_CASE("rescaling map is exactly equivariant") {
  const double alpha = 0.5, lambda = 4.0;
  const DiscreteMeasure mu = sample_fin_measure({alpha, 2.0, 1e-2}, RandomStream(3));
  const DiscreteMeasure mapped = rescale_fin_measure(mu, alpha, lambda);
  REQUIRE(mapped.size() == mu.size());
  CHECK(mapped.locations()[3] == doctest::Approx(mu.locations()[3] / 2.0));
  CHECK(mapped.weights()[3] == doctest::Approx(mu.weights()[3] / 4.0));
  // Rates scale by lambda^{-(alpha+1)/(2 alpha)}, so time scales by lambda^{(alpha+1)/(2 alpha)} = 8.
  const GapChain a(mu), b(mapped);
  const Law pa = evolve(a, a.nearest_atom(0.0), 1.0);
  const Law pb = evolve(b, b.nearest_atom(0.0), 1.0 / 8.0);
  CHECK(std::abs(sum_sq_atoms(pa) - sum_sq_atoms(pb)) < 1e-9);
  CHECK_THROWS_AS(rescale_fin_measure(mu, alpha, -1.0), DomainError);
}

TEST_CASE("coupling check passes at moderate size and records its settings") {
  CouplingCheckConfig c;
  c.samples = 20000;
  const ConvergenceReport r = coupling_check(c);
  CHECK(r.passed());
  CHECK(r.manifest["config"]["samples"] == 20000);
  REQUIRE(r.find_verdict("ks-below-critical") != nullptr);
}

TEST_CASE("homogeneous scaling matches the oracle and decreases") {
  ScalingConfig c;
  c.tail = TailSpec::homogeneous();
  c.eps = {0.2, 0.1, 0.05};
  c.replicas = 2;
  c.fin_replicas = 2;
  const ConvergenceReport r = scaling_convergence(c);
  CHECK(r.find_verdict("oracle-match")->passed);
  CHECK(r.find_verdict("decreasing-to-zero")->passed);
}

TEST_CASE("subaging negative control separates the exponents") {
  SubagingConfig c;
  c.t_w = {1e2, 1e3};
  c.theta = {0.5, 2.0};
  c.replicas = 40;
  const ConvergenceReport right = subaging_collapse(c);
  const ConvergenceReport wrong = [&] {
    SubagingConfig w = c;
    w.eta_override = 1.0;
    return subaging_collapse(w);
  }();
  CHECK_FALSE(wrong.find_verdict("collapse")->passed);
  CHECK(wrong.find_verdict("negative-control") == nullptr);
  REQUIRE(right.find_verdict("negative-control") != nullptr);
}

TEST_CASE("experiment configs are validated") {
  ScalingConfig s;
  s.eps = {0.1, 0.2};
  CHECK_THROWS_AS(scaling_convergence(s), ConfigError);
  PlateauConfig p;
  p.times = {1e2};
  CHECK_THROWS_AS(localization_plateau(p), ConfigError);
}
