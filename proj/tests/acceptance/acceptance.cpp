// Acceptance suite: one PASS/FAIL line per criterion.
//   finlab_acceptance            all criteria
//   finlab_acceptance --only N   criterion N
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "finlab/experiments.hpp"
#include "finlab/gap_chain.hpp"
#include "finlab/heavy_tail.hpp"
#include "finlab/speed_measure.hpp"
#include "finlab/stats.hpp"

using namespace finlab;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string verdict_summary(const ConvergenceReport& r, std::initializer_list<const char*> names, bool& ok) {
  std::string out;
  for (const char* n : names) {
    const Verdict* v = r.find_verdict(n);
    const bool pass = v && v->passed;
    ok = ok && pass;
    if (!out.empty()) out += "; ";
    out += std::string(n) + (pass ? " ok" : " FAILED") + (v ? " (" + v->detail + ")" : " (missing)");
  }
  return out;
}

// e^{-2t} I_0(2t) = sum_k e^{-2t} t^{2k} / (k!)^2, summed directly.
double bessel_collision(double t) {
  double term = std::exp(-2.0 * t), sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= t * t / (static_cast<double>(k) * k);
    sum += term;
  }
  return sum;
}

Outcome homogeneous_oracle() {
  const std::int64_t m = 60;
  const GapChain chain(lattice_measure(TauField{-m, std::vector<double>(2 * m + 1, 1.0)}, 1.0, 1.0));
  const std::vector<double> times{0.5, 1.0, 5.0};
  const auto laws = evolve(chain, chain.nearest_atom(0.0), times);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k)
    worst = std::max(worst, std::abs(sum_sq_atoms(laws[k]) - bessel_collision(times[k])));
  return {worst <= 1e-8, fmt("max |q_t - e^{-2t}I0(2t)| = %.3g (tol 1e-8)", worst)};
}

Outcome two_state() {
  const double w = 0.8, g = 1.3;
  const GapChain chain(DiscreteMeasure({0.0, g}, {w, w}, {0.0, g}));
  std::vector<double> s;
  for (int k = 0; k < 20; ++k) s.push_back(0.01 * std::pow(1.6, k));
  const auto laws = evolve(chain, 0, s);
  double worst = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k)
    worst = std::max(worst, std::abs(laws[k][0] - 0.5 * (1.0 + std::exp(-s[k] / (w * g)))));
  return {worst <= 1e-10, fmt("max error %.3g over 20 s-values (tol 1e-10)", worst)};
}

Outcome gillespie() {
  const TauField tau = sample_tau(TailSpec::pareto(0.5), 20, RandomStream(2024));
  const GapChain chain(lattice_measure(tau, 1.0, 1.0));
  const std::size_t start = chain.nearest_atom(0.0);
  const Law exact = evolve(chain, start, 1.0);
  RandomStream rng = RandomStream(2024).substream(1);
  const int n = 100000;
  std::vector<double> counts(chain.size(), 0.0);
  for (int i = 0; i < n; ++i) counts[simulate_endpoint(chain, start, 1.0, rng)] += 1.0;
  double tv = 0.0;
  for (std::size_t j = 0; j < chain.size(); ++j) tv += std::abs(counts[j] / n - exact[j]);
  tv *= 0.5;
  return {tv < 0.01, fmt("TV = %.4g over 41 sites, 1e5 paths (bound 0.01)", tv)};
}

Outcome return_probability_suite() {
  std::vector<double> s;
  for (int k = 0; k < 20; ++k) s.push_back(1e-3 * std::pow(2.0, k));
  std::size_t failures = 0;
  double worst_bound = 0.0, worst_rise = 0.0;
  for (std::uint64_t c = 0; c < 100; ++c) {
    const DiscreteMeasure mu = sample_fin_measure({0.5, 2.0, 1e-2}, RandomStream(500 + c));
    const GapChain chain(mu);
    const auto& w = chain.weights();
    const std::size_t heaviest =
        static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    for (std::size_t y : {chain.nearest_atom(0.0), heaviest, std::size_t{0}}) {
      const auto rep = return_probability(chain, y, s, 1e-9);
      failures += !(rep.bound_holds && rep.monotone);
      worst_bound = std::max(worst_bound, rep.worst_bound_violation);
      worst_rise = std::max(worst_rise, rep.worst_increase);
    }
  }
  return {failures == 0, fmt("%.0f failing (chain, atom) cases; worst bound violation %.3g, worst rise %.3g",
                             static_cast<double>(failures), worst_bound, worst_rise)};
}

Outcome sampler_tails() {
  const std::int64_t half = 500000;  // 1e6 + 1 draws
  bool ok = true;
  std::string detail;
  for (TailSpec spec : {TailSpec::pareto(0.5), TailSpec::stable_matched(0.5)}) {
    const TauField tau = sample_tau(spec, half, RandomStream(77));
    const double n = static_cast<double>(tau.size());
    double worst_z = 0.0;
    for (double t : {1.5, 4.0, 25.0, 400.0, 1e4}) {
      const double oracle = spec.family == TailFamily::Pareto ? 1.0 / std::sqrt(t)
                                                              : std::erf(std::sqrt(M_PI / (4.0 * t)));
      std::size_t k = 0;
      for (double v : tau.values) k += (v > t);
      const double z = std::abs(static_cast<double>(k) / n - oracle) / std::sqrt(oracle * (1 - oracle) / n);
      worst_z = std::max(worst_z, z);
    }
    ok = ok && worst_z <= 3.0;
    detail += to_string(spec.family) + fmt(" max |z| = %.3g; ", worst_z);
  }
  return {ok, detail + "bound 3 binomial se"};
}

Outcome coupling_marginal() {
  bool ok = true;
  std::string detail;
  for (TailSpec spec : {TailSpec::stable_matched(0.5), TailSpec::pareto(0.5)}) {
    CouplingCheckConfig c;
    c.tail = spec;
    c.eps = 1e-3;
    c.samples = 100000;
    c.level = 0.01;
    const ConvergenceReport r = coupling_check(c);
    ok = ok && r.passed();
    detail += to_string(spec.family) + ": " + r.verdicts.front().detail + "; ";
  }
  return {ok, detail};
}

Outcome plateau() {
  PlateauConfig c;
  c.tail = TailSpec::pareto(0.5);
  c.times = {1e2, 1e4, 1e6};
  c.replicas = 1000;
  c.fin_s = 1.0;
  c.fin_delta = 1e-3;
  c.fin_half_width = 5.0;
  c.fin_replicas = 1000;
  const ConvergenceReport r = localization_plateau(c);
  bool ok = true;
  const std::string d = verdict_summary(r, {"plateau-stable", "matches-fin-limit", "plateau-nontrivial"}, ok);
  return {ok, d};
}

Outcome s_independence() {
  SelfSimilarityConfig c;
  c.alpha = 0.5;
  c.s = {1.0, 10.0};
  const ConvergenceReport r = self_similarity(c);
  bool ok = true;
  std::string d = verdict_summary(r, {"q-independent-of-s", "exact-equivariance"}, ok);
  if (const Verdict* v = r.find_verdict("rescaled-law-independent-of-s"))
    d += std::string("; also rescaled-law ") + (v->passed ? "ok" : "failed");
  return {ok, d};
}

Outcome law_convergence_criterion() {
  LawConvergenceConfig c;
  c.eps = {0.2, 0.1, 0.05};
  c.replicas = 100;
  c.t0 = 1.0;
  c.required_fraction = 0.9;
  const ConvergenceReport r = law_convergence(c);
  bool ok = true;
  std::string d = verdict_summary(r, {"decreasing-fraction"}, ok);
  if (const Verdict* v = r.find_verdict("ensemble-mean-trend")) d += "; ensemble means: " + v->detail;
  return {ok, d};
}

Outcome subaging() {
  SubagingConfig c;
  c.tail = TailSpec::pareto(0.5);
  c.t_w = {1e3, 1e4, 1e5};
  c.replicas = 500;
  c.tolerance = 0.05;
  const ConvergenceReport r = subaging_collapse(c);
  bool ok = true;
  const std::string d = verdict_summary(r, {"collapse", "negative-control"}, ok);
  return {ok, d};
}

Outcome aging_criterion() {
  AgingConfig c;
  c.tail = TailSpec::pareto(0.5);
  c.t_w = {1e4, 1e5};
  const ConvergenceReport r = aging_collapse(c);
  bool ok = true;
  const std::string d = verdict_summary(r, {"collapse", "endpoint-trend"}, ok);
  return {ok, d};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "homogeneous Bessel oracle", 1.0, homogeneous_oracle},
      {2, "two-state closed form", 1.0, two_state},
      {3, "Gillespie vs exact law", 30.0, gillespie},
      {4, "return probability bound and monotonicity", 60.0, return_probability_suite},
      {5, "sampler tails", 30.0, sampler_tails},
      {6, "coupling marginal KS", 60.0, coupling_marginal},
      {7, "localization plateau", 900.0, plateau},
      {8, "s-independence and exact equivariance", 300.0, s_independence},
      {9, "law convergence along eps", 600.0, law_convergence_criterion},
      {10, "subaging collapse with negative control", 900.0, subaging},
      {11, "normal aging of q_two_time", 900.0, aging_criterion},
  };

  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool passed = out.passed && in_time;
    failed += !passed;
    std::printf("criterion %2d %s: %s | %s | %.2f s (budget %.0f s%s)\n", c.id, passed ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), secs, c.budget_seconds, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
