#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finlab/random.hpp"

namespace finlab {

/// One-sided alpha-stable law of V_1, the value at x = 1 of the subordinator
/// with Levy measure alpha * w^{-1-alpha} dw. Its Laplace transform is
/// E exp(-lambda V_1) = exp(-Gamma(1-alpha) lambda^alpha), and
/// y^alpha P(V_1 > y) -> 1 as y -> infinity.
///
/// Distribution values come from Kanter's representation
///   S = (A(U) / E)^{(1-alpha)/alpha},   V_1 = Gamma(1-alpha)^{1/alpha} S,
/// which gives P(S <= x) = int_0^1 exp(-A(u) x^{-alpha/(1-alpha)}) du. The
/// integrand is positive and monotone in u, so adaptive Gauss-Kronrod
/// quadrature reaches ~1e-13 relative accuracy in both tails.
class StableLaw {
 public:
  explicit StableLaw(double alpha);

  [[nodiscard]] double alpha() const { return alpha_; }
  /// Gamma(1-alpha)^{1/alpha}: V_1 = scale * S.
  [[nodiscard]] double scale() const { return scale_; }

  [[nodiscard]] double survival(double y) const;  ///< P(V_1 > y)
  [[nodiscard]] double cdf(double y) const;       ///< P(V_1 <= y)
  /// Smallest y with P(V_1 > y) <= p, by bisection in log y.
  [[nodiscard]] double upper_quantile(double p) const;

  /// Kanter draw of V_1 (two uniforms per draw).
  double sample(RandomStream& stream) const;

  /// Kanter's function A(u) for u in (0,1); `one_minus_u` is passed
  /// separately to keep accuracy near u = 1.
  [[nodiscard]] double kanter_a(double u, double one_minus_u) const;

 private:
  double alpha_;
  double scale_;
  double a_at_zero_;  // A(0+) = (1-alpha) alpha^{alpha/(1-alpha)}
};

/// Exact tail of V_1 for alpha = 1/2, where V_1 is Levy distributed with
/// scale pi/2: P(V_1 > y) = erf(sqrt(pi) / (2 sqrt(y))).
double levy_half_survival(double y);

/// Tabulated log-survival of V_1 on a log-spaced grid with monotone (PCHIP)
/// interpolation. Below the grid the survival is 1 to double precision;
/// above it the tail y^{-alpha} * const is continued from the last knot.
class StableTailTable {
 public:
  struct Header {
    double alpha = 0.0;
    std::size_t points = 0;
    double log_y_lo = 0.0;
    double log_y_hi = 0.0;
    std::string method;
    friend bool operator==(const Header&, const Header&) = default;
  };

  /// Builds the table from the quadrature of `law`.
  explicit StableTailTable(const StableLaw& law, std::size_t points_per_decade = 80);

  /// Loads from `path` when its header matches the requested grid; otherwise
  /// rebuilds and rewrites the file.
  static StableTailTable load_or_build(const StableLaw& law, const std::filesystem::path& path,
                                       std::size_t points_per_decade = 80);

  [[nodiscard]] double survival(double y) const;
  [[nodiscard]] double log_survival(double y) const;
  [[nodiscard]] const Header& header() const { return header_; }
  [[nodiscard]] const std::vector<double>& log_y() const { return log_y_; }
  [[nodiscard]] const std::vector<double>& log_s() const { return log_s_; }

  void save(const std::filesystem::path& path) const;
  static std::optional<StableTailTable> load(const std::filesystem::path& path);

 private:
  StableTailTable(Header header, std::vector<double> log_y, std::vector<double> log_s);
  static Header expected_header(const StableLaw& law, std::size_t points_per_decade);
  void init_interpolant();

  struct Interpolant;
  Header header_;
  std::vector<double> log_y_;
  std::vector<double> log_s_;
  std::shared_ptr<const Interpolant> interp_;
};

/// Process-wide table per alpha, memoized in memory and, when a cache
/// directory is configured (set_stable_cache_directory or the
/// FINLAB_CACHE_DIR environment variable), on disk. Thread safe.
const StableTailTable& stable_tail_table(double alpha);
void set_stable_cache_directory(std::optional<std::filesystem::path> directory);

}  // namespace finlab
