#include "finlab/speed_measure.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "finlab/errors.hpp"

namespace finlab {

DiscreteMeasure::DiscreteMeasure(std::vector<double> locations, std::vector<double> weights, Window window)
    : locations_(std::move(locations)), weights_(std::move(weights)), window_(window) {
  if (locations_.size() != weights_.size()) throw DomainError("measure: locations and weights differ in length");
  if (!(window_.lo <= window_.hi)) throw DomainError("measure: empty window");
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw DomainError("measure: atom weights must be positive and finite");
    }
    if (!window_.contains(locations_[i])) throw DomainError("measure: atom outside its window");
    if (i > 0 && !(locations_[i] > locations_[i - 1])) {
      throw DomainError("measure: atom locations must be strictly increasing");
    }
    total_ += weights_[i];
  }
}

std::size_t DiscreteMeasure::nearest_atom(double x) const {
  if (locations_.empty()) throw DomainError("nearest_atom on an empty measure");
  const auto it = std::lower_bound(locations_.begin(), locations_.end(), x);
  if (it == locations_.begin()) return 0;
  if (it == locations_.end()) return locations_.size() - 1;
  const auto right = static_cast<std::size_t>(it - locations_.begin());
  return (x - locations_[right - 1] <= locations_[right] - x) ? right - 1 : right;
}

DiscreteMeasure DiscreteMeasure::restrict(double lo, double hi) const {
  std::vector<double> y, w;
  for (std::size_t i = 0; i < size(); ++i) {
    if (locations_[i] >= lo && locations_[i] <= hi) {
      y.push_back(locations_[i]);
      w.push_back(weights_[i]);
    }
  }
  return DiscreteMeasure(std::move(y), std::move(w), Window{lo, hi});
}

DiscreteMeasure DiscreteMeasure::thin(double threshold) const {
  std::vector<double> y, w;
  for (std::size_t i = 0; i < size(); ++i) {
    if (weights_[i] >= threshold) {
      y.push_back(locations_[i]);
      w.push_back(weights_[i]);
    }
  }
  return DiscreteMeasure(std::move(y), std::move(w), window_);
}

Law::Law(std::vector<double> support, std::vector<double> probabilities)
    : support_(std::move(support)), probabilities_(std::move(probabilities)) {
  if (support_.size() != probabilities_.size()) throw DomainError("law: support and probabilities differ in length");
  if (support_.empty()) throw DomainError("law: empty support");
  double sum = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (!(probabilities_[i] >= 0.0)) throw DomainError("law: negative or NaN probability");
    if (i > 0 && !(support_[i] > support_[i - 1])) throw DomainError("law: support must be strictly increasing");
    sum += probabilities_[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "law: probabilities sum to " << sum << ", not 1";
    throw DomainError(msg.str());
  }
}

Law Law::point_mass(std::vector<double> support, std::size_t index) {
  if (index >= support.size()) throw DomainError("point mass index outside support");
  std::vector<double> p(support.size(), 0.0);
  p[index] = 1.0;
  return Law(std::move(support), std::move(p));
}

DiscreteMeasure Law::as_measure(Window window) const {
  std::vector<double> y, w;
  for (std::size_t i = 0; i < size(); ++i) {
    if (probabilities_[i] > 0.0) {
      y.push_back(support_[i]);
      w.push_back(probabilities_[i]);
    }
  }
  return DiscreteMeasure(std::move(y), std::move(w), window);
}

DiscreteMeasure lattice_measure(const TauField& tau, double eps, double c) {
  if (!(eps > 0.0) || !(c > 0.0)) throw DomainError("lattice_measure: eps and c must be positive");
  std::vector<double> y(tau.size()), w(tau.size());
  for (std::size_t k = 0; k < tau.size(); ++k) {
    y[k] = eps * static_cast<double>(tau.first_site + static_cast<std::int64_t>(k));
    w[k] = c * tau.values[k];
  }
  const Window window{eps * static_cast<double>(tau.first_site), eps * static_cast<double>(tau.last_site())};
  return DiscreteMeasure(std::move(y), std::move(w), window);
}

double truncated_mass_per_length(double alpha, double delta) {
  return alpha * std::pow(delta, 1.0 - alpha) / (1.0 - alpha);
}

double delta_for_budget(double alpha, double budget) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(budget > 0.0)) throw ConfigError("truncation budget must be positive");
  return std::pow((1.0 - alpha) * budget / alpha, 1.0 / (1.0 - alpha));
}

DiscreteMeasure sample_fin_measure(const FinParams& params, const RandomStream& stream) {
  const double alpha = params.alpha;
  const double L = params.half_width;
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("FIN half-width L must be positive");
  if (!(params.delta > 0.0)) throw ConfigError("FIN weight cutoff delta must be positive");

  // Arrival time bound: w_k >= delta  <=>  Gamma_k <= delta^{-alpha}.
  const double gamma_max = std::pow(params.delta, -alpha);
  const auto first_block = static_cast<std::int64_t>(std::floor(-L));
  const auto last_block = static_cast<std::int64_t>(std::ceil(L)) - 1;

  std::vector<std::pair<double, double>> atoms;
  for (std::int64_t b = first_block; b <= last_block; ++b) {
    auto block = stream.site(b);
    double gamma = block.exponential();
    while (gamma <= gamma_max) {
      const double w = std::pow(gamma, -1.0 / alpha);
      const double y = static_cast<double>(b) + block.uniform();
      if (y >= -L && y <= L && y != 0.0) atoms.emplace_back(y, w);
      gamma += block.exponential();
    }
  }
  std::sort(atoms.begin(), atoms.end());
  std::vector<double> y, w;
  y.reserve(atoms.size());
  w.reserve(atoms.size());
  for (const auto& [loc, weight] : atoms) {
    // Coincident locations have probability zero; merge them if they occur.
    if (!y.empty() && loc == y.back()) {
      w.back() += weight;
      continue;
    }
    y.push_back(loc);
    w.push_back(weight);
  }
  return DiscreteMeasure(std::move(y), std::move(w), Window{-L, L});
}

AtomMatchReport pp_match(const DiscreteMeasure& nu, const DiscreteMeasure& nu_prime, const AtomBox& box,
                         const MatchTolerance& tol, std::size_t top_k) {
  auto in_box = [&box](const DiscreteMeasure& m) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (box.contains(m.locations()[i], m.weights()[i])) idx.push_back(i);
    }
    return idx;
  };
  std::vector<std::size_t> a = in_box(nu);
  const std::vector<std::size_t> b = in_box(nu_prime);

  AtomMatchReport report;
  report.atoms_nu = a.size();
  report.atoms_nu_prime = b.size();

  std::stable_sort(a.begin(), a.end(),
                   [&nu](std::size_t i, std::size_t j) { return nu.weights()[i] > nu.weights()[j]; });
  std::vector<bool> used(b.size(), false);
  for (const std::size_t i : a) {
    const double y = nu.locations()[i];
    std::size_t best = b.size();
    double best_distance = 0.0;
    // b is in increasing location order, so the first minimum is the smaller location.
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (used[k]) continue;
      const double d = std::abs(nu_prime.locations()[b[k]] - y);
      if (best == b.size() || d < best_distance) {
        best = k;
        best_distance = d;
      }
    }
    if (best == b.size()) {
      ++report.unmatched_nu;
      continue;
    }
    used[best] = true;
    AtomPair pair;
    pair.index_nu = i;
    pair.index_nu_prime = b[best];
    pair.d_location = nu_prime.locations()[b[best]] - y;
    pair.d_weight = nu_prime.weights()[b[best]] - nu.weights()[i];
    pair.within_tolerance =
        std::abs(pair.d_location) <= tol.location && std::abs(pair.d_weight) <= tol.weight;
    if (!pair.within_tolerance) ++report.out_of_tolerance;
    report.pairs.push_back(pair);
  }
  report.unmatched_nu_prime = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));

  auto sorted_weights = [](const DiscreteMeasure& m, const std::vector<std::size_t>& idx) {
    std::vector<double> w;
    for (const std::size_t i : idx) w.push_back(m.weights()[i]);
    std::sort(w.begin(), w.end(), std::greater<>());
    return w;
  };
  const auto wa = sorted_weights(nu, a);
  const auto wb = sorted_weights(nu_prime, b);
  for (std::size_t k = 0; k < top_k && (k < wa.size() || k < wb.size()); ++k) {
    const double x = k < wa.size() ? wa[k] : 0.0;
    const double z = k < wb.size() ? wb[k] : 0.0;
    report.top_weight_differences.push_back(std::abs(x - z));
  }
  return report;
}

double TriangularKernel::operator()(double y) const {
  const double r = std::abs(y - center) / half_width;
  return r >= 1.0 ? 0.0 : 1.0 - r;
}

std::vector<TriangularKernel> kernel_family(double lo, double hi, std::size_t count) {
  if (count == 0 || !(hi > lo)) throw ConfigError("kernel family needs count >= 1 and lo < hi");
  const double hw = (hi - lo) / static_cast<double>(count + 1);
  std::vector<TriangularKernel> kernels(count);
  for (std::size_t k = 0; k < count; ++k) kernels[k] = {lo + hw * static_cast<double>(k + 1), hw};
  return kernels;
}

std::vector<TriangularKernel> default_kernels() { return kernel_family(-1.0, 1.0, 9); }

namespace {

double integrate(const DiscreteMeasure& m, const TriangularKernel& f) {
  const auto& y = m.locations();
  const auto lo = std::upper_bound(y.begin(), y.end(), f.center - f.half_width);
  const auto hi = std::lower_bound(y.begin(), y.end(), f.center + f.half_width);
  double sum = 0.0;
  for (auto it = lo; it < hi; ++it) {
    sum += f(*it) * m.weights()[static_cast<std::size_t>(it - y.begin())];
  }
  return sum;
}

void check_support(const DiscreteMeasure& m, const TriangularKernel& f) {
  if (f.center - f.half_width < m.window().lo || f.center + f.half_width > m.window().hi) {
    std::ostringstream msg;
    msg << "kernel support [" << f.center - f.half_width << ", " << f.center + f.half_width
        << "] leaves the measure window [" << m.window().lo << ", " << m.window().hi << "]";
    throw DomainError(msg.str());
  }
}

}  // namespace

double vague_discrepancy(const DiscreteMeasure& nu, const DiscreteMeasure& nu_prime,
                         std::span<const TriangularKernel> kernels) {
  double worst = 0.0;
  for (const auto& f : kernels) {
    check_support(nu, f);
    check_support(nu_prime, f);
    worst = std::max(worst, std::abs(integrate(nu, f) - integrate(nu_prime, f)));
  }
  return worst;
}

double vague_discrepancy(const DiscreteMeasure& nu, const DiscreteMeasure& nu_prime) {
  const auto kernels = default_kernels();
  return vague_discrepancy(nu, nu_prime, kernels);
}

double sum_sq_atoms(std::span<const double> probabilities) {
  double sum = 0.0;
  for (const double p : probabilities) sum += p * p;
  return sum;
}

double sum_sq_atoms(const Law& p) { return sum_sq_atoms(p.probabilities()); }

void write_measure(std::ostream& out, const DiscreteMeasure& mu,
                   std::span<const std::pair<std::string, std::string>> metadata) {
  const auto precision = out.precision(17);
  out << "# window " << mu.window().lo << ' ' << mu.window().hi << '\n';
  for (const auto& [key, value] : metadata) out << "# " << key << ' ' << value << '\n';
  for (std::size_t i = 0; i < mu.size(); ++i) out << mu.locations()[i] << ' ' << mu.weights()[i] << '\n';
  out.precision(precision);
}

DiscreteMeasure read_measure(std::istream& in) {
  std::string line;
  Window window{};
  bool have_window = false;
  std::vector<double> y, w;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    if (line[0] == '#') {
      std::string hash, key;
      fields >> hash >> key;
      if (key == "window") {
        if (!(fields >> window.lo >> window.hi)) {
          throw ConfigError("measure file line " + std::to_string(line_no) + ": malformed window");
        }
        have_window = true;
      }
      continue;
    }
    double loc = 0.0, weight = 0.0;
    if (!(fields >> loc >> weight)) {
      throw ConfigError("measure file line " + std::to_string(line_no) + ": expected 'location weight'");
    }
    y.push_back(loc);
    w.push_back(weight);
  }
  if (!have_window) throw ConfigError("measure file has no '# window lo hi' header");
  return DiscreteMeasure(std::move(y), std::move(w), window);
}

void write_law(std::ostream& out, const Law& law) {
  const auto precision = out.precision(17);
  for (std::size_t i = 0; i < law.size(); ++i) out << law.support()[i] << ' ' << law[i] << '\n';
  out.precision(precision);
}

}  // namespace finlab
