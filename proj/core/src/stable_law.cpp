#include "finlab/stable_law.hpp"

#include <algorithm>
#include <cmath>

// Boost 1.74's pchip.hpp calls isnan unqualified.
using std::isnan;

#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "finlab/errors.hpp"

namespace finlab {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 61>;
constexpr unsigned kMaxDepth = 15;
constexpr double kQuadTolerance = 1e-13;
// Where exp(-z A(0)) underflows: the survival is 1 below this z * A(0).
constexpr double kCdfUnderflow = 690.0;
// Upper end of the tabulation: y^{-alpha} = 10^{-kTailDecades}.
constexpr double kTailDecades = 13.0;

template <class F>
double integrate(F&& f, double a, double b, double tolerance = kQuadTolerance) {
  if (!(b > a)) return 0.0;
  double error = 0.0;
  const double value = Kronrod::integrate(f, a, b, kMaxDepth, tolerance, &error);
  if (!std::isfinite(value)) throw InternalError("stable law quadrature produced a non-finite value");
  return value;
}

}  // namespace

StableLaw::StableLaw(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("stable law requires 0 < alpha < 1");
  scale_ = std::pow(std::tgamma(1.0 - alpha), 1.0 / alpha);
  a_at_zero_ = (1.0 - alpha) * std::pow(alpha, alpha / (1.0 - alpha));
}

double StableLaw::kanter_a(double u, double one_minus_u) const {
  constexpr double pi = std::numbers::pi;
  const double sa = std::sin(alpha_ * pi * u);
  const double s1 = std::sin(pi * std::min(u, one_minus_u));
  const double sb = std::sin((1.0 - alpha_) * pi * u);
  return std::pow(sa / s1, 1.0 / (1.0 - alpha_)) * sb / sa;
}

namespace {

// int_0^1 exp(-A(u) z) du for z A(0) >= 1; the integrand peaks at u = 0 with
// width ~ (z A(0))^{-1/2}.
double cdf_integral(const StableLaw& law, double z, double a0) {
  auto f = [&](double u) { return std::exp(-law.kanter_a(u, 1.0 - u) * z); };
  // exp(-A z) carries relative rounding noise of order z A * 1e-16.
  const double tolerance = kQuadTolerance + 4e-16 * z * a0;
  const double width = std::min(1.0, 12.0 / std::sqrt(z * a0));
  const double head = integrate(f, 0.0, width, tolerance);
  // The integrand decreases in u, so f(width) bounds the remainder.
  if (width >= 1.0 || f(width) * (1.0 - width) < 1e-17 * head) return head;
  return head + integrate(f, width, 1.0, tolerance);
}

// int_0^1 -expm1(-A(1-v) z) dv for z A(0) < 1. The integrand saturates to 1
// for v below v*, where A z = 1, and decays like a power of v above it.
double survival_integral(const StableLaw& law, double z) {
  auto a_of_v = [&](double v) { return law.kanter_a(1.0 - v, v); };
  double lo = -745.0, hi = 0.0;  // log v bracket; A z > 1 at lo, < 1 at hi
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (a_of_v(std::exp(mid)) * z > 1.0)
      lo = mid;
    else
      hi = mid;
  }
  const double v_star = std::exp(hi);
  auto f = [&](double v) { return -std::expm1(-a_of_v(v) * z); };
  auto g = [&](double s) {
    const double v = v_star * std::exp(s);
    return f(v) * v;
  };
  // Below v* the integrand is within 1 - 1/e of one; in log v the piece
  // decays like v, and the part below v* e^{-40} is taken as exactly one.
  const double inner = integrate(g, -40.0, 0.0) + v_star * std::exp(-40.0);
  const double span = -std::log(v_star);
  // Split the log-scale range so the adaptive rule sees the decay.
  const double knee = std::min(span, 8.0);
  return inner + integrate(g, 0.0, knee) + integrate(g, knee, span);
}

}  // namespace

double StableLaw::survival(double y) const {
  if (!(y > 0.0)) return 1.0;
  const double log_z = -(alpha_ / (1.0 - alpha_)) * std::log(y / scale_);
  const double za0 = std::exp(log_z) * a_at_zero_;
  if (za0 >= kCdfUnderflow) return 1.0;
  if (za0 >= 1.0) return 1.0 - cdf_integral(*this, std::exp(log_z), a_at_zero_);
  return survival_integral(*this, std::exp(log_z));
}

double StableLaw::cdf(double y) const {
  if (!(y > 0.0)) return 0.0;
  const double log_z = -(alpha_ / (1.0 - alpha_)) * std::log(y / scale_);
  const double za0 = std::exp(log_z) * a_at_zero_;
  if (!std::isfinite(za0)) return 0.0;
  if (za0 >= 1.0) return cdf_integral(*this, std::exp(log_z), a_at_zero_);
  return 1.0 - survival_integral(*this, std::exp(log_z));
}

double StableLaw::upper_quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("upper_quantile: p must lie in (0,1)");
  double lo = std::log(scale_) - 2.0, hi = std::log(scale_) + 2.0;
  while (survival(std::exp(lo)) <= p) lo -= 4.0;
  while (survival(std::exp(hi)) > p) hi += 4.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (survival(std::exp(mid)) > p)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(hi);
}

double StableLaw::sample(RandomStream& stream) const {
  const double u = stream.uniform();
  const double e = stream.exponential();
  const double log_s = ((1.0 - alpha_) / alpha_) * (std::log(kanter_a(u, 1.0 - u)) - std::log(e));
  return scale_ * std::exp(log_s);
}

double levy_half_survival(double y) {
  if (!(y > 0.0)) return 1.0;
  return std::erf(std::sqrt(std::numbers::pi) / (2.0 * std::sqrt(y)));
}

// ---------------------------------------------------------------------------

struct StableTailTable::Interpolant {
  boost::math::interpolators::pchip<std::vector<double>> spline;
};

StableTailTable::Header StableTailTable::expected_header(const StableLaw& law,
                                                         std::size_t points_per_decade) {
  const double alpha = law.alpha();
  const double a0 = (1.0 - alpha) * std::pow(alpha, alpha / (1.0 - alpha));
  // z A(0) = kCdfUnderflow with z = (y / scale)^{-alpha/(1-alpha)}.
  const double log_y_lo =
      std::log(law.scale()) - ((1.0 - alpha) / alpha) * std::log(kCdfUnderflow / a0);
  const double log_y_hi = kTailDecades * std::log(10.0) / alpha;
  const double decades = (log_y_hi - log_y_lo) / std::log(10.0);
  Header h;
  h.alpha = alpha;
  h.points = static_cast<std::size_t>(std::ceil(decades * static_cast<double>(points_per_decade))) + 1;
  h.log_y_lo = log_y_lo;
  h.log_y_hi = log_y_hi;
  h.method = "kanter-quadrature";
  return h;
}

StableTailTable::StableTailTable(const StableLaw& law, std::size_t points_per_decade)
    : header_(expected_header(law, points_per_decade)) {
  log_y_.resize(header_.points);
  log_s_.resize(header_.points);
  for (std::size_t k = 0; k < header_.points; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(header_.points - 1);
    log_y_[k] = header_.log_y_lo + t * (header_.log_y_hi - header_.log_y_lo);
    const double y = std::exp(log_y_[k]);
    const double cdf = law.cdf(y);
    // log S = log1p(-cdf) keeps precision where S is close to one.
    log_s_[k] = cdf < 0.5 ? std::log1p(-cdf) : std::log(law.survival(y));
  }
  for (std::size_t k = 1; k < log_s_.size(); ++k) {
    if (!(log_s_[k] <= log_s_[k - 1]))
      throw InternalError("stable tail tabulation is not monotone at knot " + std::to_string(k));
  }
  init_interpolant();
}

StableTailTable::StableTailTable(Header header, std::vector<double> log_y, std::vector<double> log_s)
    : header_(std::move(header)), log_y_(std::move(log_y)), log_s_(std::move(log_s)) {
  init_interpolant();
}

void StableTailTable::init_interpolant() {
  if (log_y_.size() < 4 || log_y_.size() != log_s_.size())
    throw InternalError("stable tail table needs at least four knots");
  auto x = log_y_;
  auto y = log_s_;
  interp_ = std::make_shared<const Interpolant>(
      Interpolant{boost::math::interpolators::pchip<std::vector<double>>(std::move(x), std::move(y))});
}

double StableTailTable::log_survival(double y) const {
  if (!(y > 0.0)) return 0.0;
  const double ly = std::log(y);
  if (ly <= log_y_.front()) return 0.0;
  if (ly >= log_y_.back()) return log_s_.back() - header_.alpha * (ly - log_y_.back());
  return std::min(0.0, interp_->spline(ly));
}

double StableTailTable::survival(double y) const { return std::exp(log_survival(y)); }

void StableTailTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InternalError("cannot write stable tail cache " + path.string());
  char buf[128];
  out << "# finlab stable-tail table\n";
  std::snprintf(buf, sizeof buf, "# alpha %.17g\n", header_.alpha);
  out << buf;
  out << "# points " << header_.points << "\n";
  std::snprintf(buf, sizeof buf, "# log_y_lo %.17g\n# log_y_hi %.17g\n", header_.log_y_lo,
                header_.log_y_hi);
  out << buf;
  out << "# method " << header_.method << "\n";
  out << "# columns log_y log_survival\n";
  for (std::size_t k = 0; k < log_y_.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g\t%.17g\n", log_y_[k], log_s_[k]);
    out << buf;
  }
}

std::optional<StableTailTable> StableTailTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  Header h;
  std::vector<double> ly, ls;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key;
      ss >> key;
      if (key == "alpha") ss >> h.alpha;
      else if (key == "points") ss >> h.points;
      else if (key == "log_y_lo") ss >> h.log_y_lo;
      else if (key == "log_y_hi") ss >> h.log_y_hi;
      else if (key == "method") ss >> h.method;
      continue;
    }
    std::istringstream ss(line);
    double a = 0.0, b = 0.0;
    if (!(ss >> a >> b)) return std::nullopt;
    ly.push_back(a);
    ls.push_back(b);
  }
  if (ly.size() != h.points || ly.size() < 4) return std::nullopt;
  return StableTailTable(std::move(h), std::move(ly), std::move(ls));
}

StableTailTable StableTailTable::load_or_build(const StableLaw& law, const std::filesystem::path& path,
                                               std::size_t points_per_decade) {
  if (auto cached = load(path); cached && cached->header() == expected_header(law, points_per_decade))
    return *std::move(cached);
  StableTailTable table(law, points_per_decade);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  table.save(path);
  return table;
}

namespace {

struct TableRegistry {
  std::mutex mutex;
  std::map<double, std::unique_ptr<StableTailTable>> tables;
  std::optional<std::filesystem::path> directory;
  bool directory_initialized = false;
};

TableRegistry& registry() {
  static TableRegistry r;
  return r;
}

}  // namespace

void set_stable_cache_directory(std::optional<std::filesystem::path> directory) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.directory = std::move(directory);
  r.directory_initialized = true;
}

const StableTailTable& stable_tail_table(double alpha) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  if (!r.directory_initialized) {
    if (const char* env = std::getenv("FINLAB_CACHE_DIR"); env && *env) r.directory = env;
    r.directory_initialized = true;
  }
  auto it = r.tables.find(alpha);
  if (it != r.tables.end()) return *it->second;
  const StableLaw law(alpha);
  std::unique_ptr<StableTailTable> table;
  if (r.directory) {
    char name[64];
    std::snprintf(name, sizeof name, "stable_tail_alpha_%.17g.tsv", alpha);
    table = std::make_unique<StableTailTable>(StableTailTable::load_or_build(law, *r.directory / name));
  } else {
    table = std::make_unique<StableTailTable>(law);
  }
  return *r.tables.emplace(alpha, std::move(table)).first->second;
}

}  // namespace finlab
