#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "finlab/heavy_tail.hpp"
#include "finlab/random.hpp"

namespace finlab {

/// Closed interval [lo, hi].
struct Window {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
  [[nodiscard]] double width() const { return hi - lo; }
};

/// Finite atomic measure with strictly increasing locations and positive
/// weights, all inside its construction window.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  /// Validates the invariants; throws DomainError on violation.
  DiscreteMeasure(std::vector<double> locations, std::vector<double> weights, Window window);

  [[nodiscard]] std::size_t size() const { return locations_.size(); }
  [[nodiscard]] bool empty() const { return locations_.empty(); }
  [[nodiscard]] const std::vector<double>& locations() const { return locations_; }
  [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
  [[nodiscard]] const Window& window() const { return window_; }
  [[nodiscard]] double total() const { return total_; }

  /// Index of the atom nearest to x (ties to the smaller location).
  [[nodiscard]] std::size_t nearest_atom(double x) const;
  /// Atoms with location in [lo, hi], as a new measure with window [lo, hi].
  [[nodiscard]] DiscreteMeasure restrict(double lo, double hi) const;
  /// Atoms with weight >= threshold.
  [[nodiscard]] DiscreteMeasure thin(double threshold) const;

 private:
  std::vector<double> locations_;
  std::vector<double> weights_;
  Window window_{};
  double total_ = 0.0;
};

/// Probability vector over sorted, distinct locations.
class Law {
 public:
  Law() = default;
  /// Requires sum within 1e-12 of one and nonnegative entries.
  Law(std::vector<double> support, std::vector<double> probabilities);

  static Law point_mass(std::vector<double> support, std::size_t index);

  [[nodiscard]] std::size_t size() const { return support_.size(); }
  [[nodiscard]] const std::vector<double>& support() const { return support_; }
  [[nodiscard]] const std::vector<double>& probabilities() const { return probabilities_; }
  [[nodiscard]] double operator[](std::size_t i) const { return probabilities_[i]; }

  /// The law as an atomic measure (zero-probability atoms dropped).
  [[nodiscard]] DiscreteMeasure as_measure(Window window) const;

 private:
  std::vector<double> support_;
  std::vector<double> probabilities_;
};

/// Atom at eps*i with weight c*tau_i; window eps*[first_site, last_site].
DiscreteMeasure lattice_measure(const TauField& tau, double eps, double c);

/// Parameters of a truncated FIN speed measure on [-L, L].
struct FinParams {
  double alpha = 0.5;
  double half_width = 1.0;  ///< L
  double delta = 1e-3;      ///< weight cutoff
};

/// Expected mass per unit length of the discarded atoms (weight < delta):
/// alpha * delta^{1-alpha} / (1 - alpha).
double truncated_mass_per_length(double alpha, double delta);
/// Largest delta whose truncated mass per unit length is within budget.
double delta_for_budget(double alpha, double budget);

/// Poisson atoms with intensity dy * alpha w^{-1-alpha} dw restricted to
/// [-L, L] x [delta, inf). Each unit block [b, b+1) generates its atoms in
/// decreasing weight order (w_k = Gamma_k^{-1/alpha} for unit-rate arrival
/// times Gamma_k) from substream site(b). Samples with the same stream are
/// therefore nested: a larger L adds atoms, a larger delta removes the
/// smallest ones. An atom at exactly 0 is discarded.
DiscreteMeasure sample_fin_measure(const FinParams& params, const RandomStream& stream);

/// Box in location x weight space for point-process comparisons.
struct AtomBox {
  double y_lo = -1.0;
  double y_hi = 1.0;
  double w_lo = 0.05;
  double w_hi = 1e300;
  [[nodiscard]] bool contains(double y, double w) const {
    return y >= y_lo && y <= y_hi && w >= w_lo && w <= w_hi;
  }
};

struct MatchTolerance {
  double location = 0.0;
  double weight = 0.0;
};

struct AtomPair {
  std::size_t index_nu = 0;
  std::size_t index_nu_prime = 0;
  double d_location = 0.0;  ///< nu' location - nu location
  double d_weight = 0.0;    ///< nu' weight - nu weight
  bool within_tolerance = false;
};

struct AtomMatchReport {
  std::vector<AtomPair> pairs;
  std::size_t atoms_nu = 0;        ///< atoms of nu inside the box
  std::size_t atoms_nu_prime = 0;  ///< atoms of nu' inside the box
  std::size_t unmatched_nu = 0;
  std::size_t unmatched_nu_prime = 0;
  std::size_t out_of_tolerance = 0;
  /// |w_k - w'_k| for the k-th largest weights in the box, k < top_k.
  std::vector<double> top_weight_differences;

  /// Unmatched atoms on either side plus matched pairs outside tolerance.
  [[nodiscard]] std::size_t mismatch_count() const {
    return unmatched_nu + unmatched_nu_prime + out_of_tolerance;
  }
  [[nodiscard]] bool success() const { return mismatch_count() == 0; }
};

/// Greedy unique matching: atoms of nu in the box are taken in decreasing
/// weight order and matched to the nearest unused atom of nu' in the box
/// (ties to the smaller location).
AtomMatchReport pp_match(const DiscreteMeasure& nu, const DiscreteMeasure& nu_prime, const AtomBox& box,
                         const MatchTolerance& tol, std::size_t top_k = 10);

/// Triangular bump: peak 1 at `center`, zero outside center +/- half_width.
struct TriangularKernel {
  double center = 0.0;
  double half_width = 1.0;
  [[nodiscard]] double operator()(double y) const;
};

/// `count` bumps of half-width (hi - lo) / (count + 1) with evenly spaced
/// centres, supported inside [lo, hi]. The default family is nine bumps of
/// half-width 0.2 centred at -0.8, ..., 0.8.
std::vector<TriangularKernel> default_kernels();
std::vector<TriangularKernel> kernel_family(double lo, double hi, std::size_t count);

/// max_f |int f dnu - int f dnu'|. Throws DomainError when a kernel's
/// support leaves either window.
double vague_discrepancy(const DiscreteMeasure& nu, const DiscreteMeasure& nu_prime,
                         std::span<const TriangularKernel> kernels);
double vague_discrepancy(const DiscreteMeasure& nu, const DiscreteMeasure& nu_prime);

/// sum_i p_i^2.
double sum_sq_atoms(const Law& p);
double sum_sq_atoms(std::span<const double> probabilities);

/// Text form: "# window lo hi", optional "# key value" metadata, then one
/// "location weight" line per atom.
void write_measure(std::ostream& out, const DiscreteMeasure& mu,
                   std::span<const std::pair<std::string, std::string>> metadata = {});
DiscreteMeasure read_measure(std::istream& in);
void write_law(std::ostream& out, const Law& law);

}  // namespace finlab
