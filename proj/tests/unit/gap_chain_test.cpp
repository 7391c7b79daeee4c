#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <vector>

#include "finlab/errors.hpp"
#include "finlab/gap_chain.hpp"
#include "finlab/heavy_tail.hpp"
#include "finlab/spectral.hpp"

using namespace finlab;

namespace {

GapChain homogeneous_chain(std::int64_t m) {
  return GapChain(lattice_measure(TauField{-m, std::vector<double>(static_cast<std::size_t>(2 * m + 1), 1.0)}, 1.0, 1.0));
}

GapChain pareto_chain(std::int64_t m, std::uint64_t seed) {
  return GapChain(lattice_measure(sample_tau(TailSpec::pareto(0.5), m, RandomStream(seed)), 1.0, 1.0));
}

const EvolveOptions kUnif{EvolveMethod::Uniformization};
const EvolveOptions kSpec{EvolveMethod::Spectral};

}  // namespace

TEST_CASE("gap chain rates") {
  const GapChain c(DiscreteMeasure({0.0, 1.0, 3.0}, {2.0, 1.0, 4.0}, {0.0, 3.0}));
  CHECK(c.right_rates()[0] == doctest::Approx(1.0 / (2 * 2.0 * 1.0)));
  CHECK(c.left_rates()[0] == 0.0);
  CHECK(c.right_rates()[1] == doctest::Approx(1.0 / (2 * 1.0 * 2.0)));
  CHECK(c.left_rates()[1] == doctest::Approx(1.0 / (2 * 1.0 * 1.0)));
  CHECK(c.left_rates()[2] == doctest::Approx(1.0 / (2 * 4.0 * 2.0)));
  CHECK(c.right_rates()[2] == 0.0);
  CHECK(c.conductances()[1] == doctest::Approx(0.25));
  CHECK(GapChain(DiscreteMeasure({0.3}, {1.0}, {0, 1})).frozen());
}

TEST_CASE("homogeneous walk: collision equals the Bessel series") {
  const GapChain c = homogeneous_chain(60);
  const std::size_t start = c.nearest_atom(0.0);
  for (const auto& opt : {kUnif, kSpec}) {
    for (double t : {0.5, 1.0, 5.0}) {
      CAPTURE(t);
      const double oracle = std::exp(-2 * t) * boost::math::cyl_bessel_i(0, 2 * t);
      CHECK(std::abs(sum_sq_atoms(evolve(c, start, t, opt)) - oracle) < 1e-10);
    }
  }
}

TEST_CASE("two-state chain closed form") {
  const double w = 1.7, g = 0.6;
  const GapChain c(DiscreteMeasure({0.0, g}, {w, w}, {0.0, g}));
  for (const auto& opt : {kUnif, kSpec}) {
    for (int k = 0; k < 20; ++k) {
      const double s = 0.05 * std::pow(1.5, k);
      CAPTURE(s);
      CHECK(std::abs(evolve(c, 0, s, opt)[0] - 0.5 * (1 + std::exp(-s / (w * g)))) < 1e-12);
    }
  }
}

TEST_CASE("spectral and uniformization agree on a random chain") {
  const GapChain c = pareto_chain(40, 3);
  const std::size_t start = c.nearest_atom(0.0);
  for (double t : {0.3, 4.0, 60.0}) {
    const Law a = evolve(c, start, t, kUnif);
    const Law b = evolve(c, start, t, kSpec);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("transition kernel is stochastic and reversible") {
  const GapChain c = pareto_chain(6, 8);
  const SpectralPropagator prop(c);
  const double t = 2.5;
  const auto& w = c.weights();
  std::vector<std::vector<double>> P(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) P[k] = evolve(c, k, t, kUnif).probabilities();
  for (std::size_t k = 0; k < c.size(); ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      sum += P[k][j];
      CHECK(P[k][j] > 0.0);  // positive support after any positive time
      CHECK(w[k] * P[k][j] == doctest::Approx(w[j] * P[j][k]).epsilon(1e-9));
      CHECK(prop.row(k, t)[j] == doctest::Approx(P[k][j]).epsilon(1e-9));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(prop.rates().front() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("evolve_from_law and two_time_sums are consistent with evolve") {
  const GapChain c = pareto_chain(10, 4);
  std::vector<double> p(c.size(), 0.0);
  p[9] = 0.25;
  p[10] = 0.75;
  const Law law(c.locations(), p);
  const Law mixed = evolve_from_law(c, law, 3.0, kUnif);
  const Law a = evolve(c, 9, 3.0, kUnif), b = evolve(c, 10, 3.0, kUnif);
  for (std::size_t j = 0; j < c.size(); ++j) CHECK(mixed[j] == doctest::Approx(0.25 * a[j] + 0.75 * b[j]));

  const std::vector<double> lags{3.0};
  const TwoTimeSums sums = two_time_sums(c, p, lags, kUnif);
  CHECK(sums.collision[0] == doctest::Approx(0.25 * sum_sq_atoms(a) + 0.75 * sum_sq_atoms(b)));
  CHECK(sums.same_site[0] == doctest::Approx(0.25 * a[9] + 0.75 * b[10]));
  CHECK(sums.starts_used == 2);
}

TEST_CASE("Gillespie endpoints follow the exact law") {
  const GapChain c = pareto_chain(20, 12);
  const std::size_t start = c.nearest_atom(0.0);
  const Law exact = evolve(c, start, 1.0);
  RandomStream rng(99);
  const int n = 20000;
  std::vector<double> counts(c.size(), 0.0);
  for (int i = 0; i < n; ++i) counts[simulate_endpoint(c, start, 1.0, rng)] += 1.0;
  double tv = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) tv += std::abs(counts[j] / n - exact[j]);
  CHECK(0.5 * tv < 0.02);

  RandomStream rng2(5);
  const Path path = simulate_path(c, start, 10.0, rng2);
  CHECK(path.times.front() == 0.0);
  CHECK(path.atom_at(0.0) == start);
  for (std::size_t k = 1; k < path.atoms.size(); ++k) {
    CHECK(path.times[k] > path.times[k - 1]);
    const auto step = static_cast<long>(path.atoms[k]) - static_cast<long>(path.atoms[k - 1]);
    CHECK(std::abs(step) == 1);
  }
}

TEST_CASE("return probability is bounded below and non-increasing") {
  const DiscreteMeasure mu = sample_fin_measure({0.5, 2.0, 1e-2}, RandomStream(31));
  const GapChain c(mu);
  std::vector<double> s;
  for (int k = 0; k < 20; ++k) s.push_back(1e-3 * std::pow(2.0, k));
  for (std::size_t atom : {std::size_t{0}, c.nearest_atom(0.0), c.size() - 1}) {
    const auto rep = return_probability(c, atom, s);
    CHECK(rep.bound == doctest::Approx(c.weights()[atom] / c.total_weight()));
    CHECK(rep.bound_holds);
    CHECK(rep.monotone);
  }
}

TEST_CASE("window guard doubles and reports exhaustion") {
  auto factory = [](double hw) {
    const auto m = static_cast<std::int64_t>(hw);
    return lattice_measure(TauField{-m, std::vector<double>(static_cast<std::size_t>(2 * m + 1), 1.0)}, 1.0, 1.0);
  };
  const std::vector<double> times{1.0, 40.0};
  const GuardedEvolution g = evolve_guarded(factory, 5.0, 0.0, times);
  CHECK(g.doublings > 0);
  CHECK(g.edge_mass <= 1e-8);
  const double oracle = std::exp(-80.0) * boost::math::cyl_bessel_i(0, 80.0);
  CHECK(sum_sq_atoms(g.laws[1]) == doctest::Approx(oracle).epsilon(1e-8));

  GuardOptions strict;
  strict.max_doublings = 0;
  CHECK_THROWS_AS(evolve_guarded(factory, 5.0, 0.0, times, strict), BudgetError);
}

TEST_CASE("invalid times are rejected") {
  const GapChain c = homogeneous_chain(3);
  CHECK_THROWS_AS(evolve(c, 0, -1.0), DomainError);
  CHECK_THROWS_AS(evolve(c, 99, 1.0), DomainError);
}
