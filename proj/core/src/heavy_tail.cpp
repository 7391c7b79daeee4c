#include "finlab/heavy_tail.hpp"

#include <cmath>
#include <limits>

#include "finlab/errors.hpp"
#include "finlab/stable_law.hpp"

namespace finlab {

std::string to_string(TailFamily family) {
  switch (family) {
    case TailFamily::Pareto:
      return "pareto";
    case TailFamily::StableMatched:
      return "stable";
    case TailFamily::Homogeneous:
      return "homogeneous";
  }
  return "unknown";
}

TailFamily tail_family_from_string(const std::string& name) {
  if (name == "pareto") return TailFamily::Pareto;
  if (name == "stable" || name == "stable-matched") return TailFamily::StableMatched;
  if (name == "homogeneous") return TailFamily::Homogeneous;
  throw ConfigError("unknown tail family '" + name + "' (expected pareto, stable or homogeneous)");
}

TailSpec TailSpec::pareto(double alpha, double x_min) {
  TailSpec spec{TailFamily::Pareto, alpha, x_min};
  spec.validate();
  return spec;
}

TailSpec TailSpec::stable_matched(double alpha) {
  TailSpec spec{TailFamily::StableMatched, alpha, 1.0};
  spec.validate();
  return spec;
}

TailSpec TailSpec::homogeneous() { return TailSpec{TailFamily::Homogeneous, 0.5, 1.0}; }

void TailSpec::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("tail exponent alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  if (family == TailFamily::Pareto && !(x_min > 0.0 && std::isfinite(x_min))) {
    throw ConfigError("Pareto x_min must be positive, got " + std::to_string(x_min));
  }
}

double TailSpec::survival(double t) const {
  switch (family) {
    case TailFamily::Pareto:
      return t < x_min ? 1.0 : std::pow(t / x_min, -alpha);
    case TailFamily::StableMatched:
      return stable_tail_table(alpha).survival(t);
    case TailFamily::Homogeneous:
      return t < 1.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

double TailSpec::upper_quantile(double p) const {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("tail level must lie in (0, 1]");
  switch (family) {
    case TailFamily::Pareto:
      return x_min * std::pow(p, -1.0 / alpha);
    case TailFamily::StableMatched:
      return p == 1.0 ? 0.0 : StableLaw(alpha).upper_quantile(p);
    case TailFamily::Homogeneous:
      return p == 1.0 ? 0.0 : 1.0;
  }
  return 0.0;
}

double TailSpec::support_min() const {
  switch (family) {
    case TailFamily::Pareto:
      return x_min;
    case TailFamily::StableMatched:
      return 0.0;
    case TailFamily::Homogeneous:
      return 1.0;
  }
  return 0.0;
}

double TauField::at_site(std::int64_t site) const {
  if (site < first_site || site > last_site()) throw DomainError("site outside the tau window");
  return values[static_cast<std::size_t>(site - first_site)];
}

double StableIncrements::at_index(std::int64_t i) const {
  const auto offset = i - first_index;
  if (offset < 0 || offset >= static_cast<std::int64_t>(values.size())) {
    throw DomainError("index outside the increment window");
  }
  return values[static_cast<std::size_t>(offset)];
}

namespace {

double draw_tau(const TailSpec& spec, const StableLaw& law, RandomStream site_stream) {
  switch (spec.family) {
    case TailFamily::Pareto:
      return spec.x_min * std::pow(site_stream.uniform(), -1.0 / spec.alpha);
    case TailFamily::StableMatched:
      return law.sample(site_stream);
    case TailFamily::Homogeneous:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

double sample_tau_site(const TailSpec& spec, std::int64_t site, const RandomStream& stream) {
  spec.validate();
  return draw_tau(spec, StableLaw(spec.alpha), stream.site(site));
}

TauField sample_tau_range(const TailSpec& spec, std::int64_t first_site, std::int64_t last_site,
                          const RandomStream& stream) {
  spec.validate();
  if (last_site < first_site) throw ConfigError("empty site range");
  TauField field;
  field.first_site = first_site;
  field.values.resize(static_cast<std::size_t>(last_site - first_site + 1));
  const StableLaw law(spec.alpha);
  for (std::int64_t i = first_site; i <= last_site; ++i) {
    field.values[static_cast<std::size_t>(i - first_site)] = draw_tau(spec, law, stream.site(i));
  }
  return field;
}

TauField sample_tau(const TailSpec& spec, std::int64_t half_width, const RandomStream& stream) {
  if (half_width < 0) throw ConfigError("window half-width must be nonnegative");
  return sample_tau_range(spec, -half_width, half_width, stream);
}

double c_eps(const TailSpec& spec, double eps) {
  spec.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  switch (spec.family) {
    case TailFamily::Pareto:
      return std::pow(eps, 1.0 / spec.alpha) / spec.x_min;
    case TailFamily::StableMatched:
      return std::pow(eps, 1.0 / spec.alpha);
    case TailFamily::Homogeneous:
      return eps;
  }
  return 0.0;
}

double c_eps_from_tail(const TailSpec& spec, double eps) {
  spec.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  return 1.0 / spec.upper_quantile(eps);
}

StableIncrements sample_stable_increments(double alpha, double eps, std::int64_t first_index,
                                          std::size_t count, const RandomStream& stream) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(eps > 0.0 && std::isfinite(eps))) throw ConfigError("eps must be positive");
  const StableLaw law(alpha);
  const double scale = std::pow(eps, 1.0 / alpha);
  StableIncrements inc{alpha, eps, first_index, std::vector<double>(count)};
  for (std::size_t k = 0; k < count; ++k) {
    auto site_stream = stream.site(first_index + static_cast<std::int64_t>(k));
    inc.values[k] = scale * law.sample(site_stream);
  }
  return inc;
}

StableIncrements sample_stable_increments(double alpha, double eps, std::int64_t half_width,
                                          const RandomStream& stream) {
  if (half_width < 0) throw ConfigError("window half-width must be nonnegative");
  return sample_stable_increments(alpha, eps, -half_width,
                                  static_cast<std::size_t>(2 * half_width + 1), stream);
}

StableIncrements coarsen(const StableIncrements& fine, std::int64_t factor, std::int64_t first_coarse,
                         std::size_t coarse_count) {
  if (factor < 1) throw ConfigError("coarsening factor must be at least 1");
  const std::int64_t lo = first_coarse * factor;
  const std::int64_t hi = (first_coarse + static_cast<std::int64_t>(coarse_count)) * factor;
  if (lo < fine.first_index || hi > fine.first_index + static_cast<std::int64_t>(fine.size())) {
    throw DomainError("fine increments do not cover the requested coarse window");
  }
  StableIncrements coarse{fine.alpha, fine.eps * static_cast<double>(factor), first_coarse,
                          std::vector<double>(coarse_count, 0.0)};
  for (std::size_t c = 0; c < coarse_count; ++c) {
    const auto begin = static_cast<std::size_t>(lo - fine.first_index) + c * static_cast<std::size_t>(factor);
    double sum = 0.0;
    for (std::int64_t k = 0; k < factor; ++k) sum += fine.values[begin + static_cast<std::size_t>(k)];
    coarse.values[c] = sum;
  }
  return coarse;
}

double g_inverse(const TailSpec& spec, double y) {
  if (!(y >= 0.0)) throw DomainError("G^{-1} argument must be nonnegative");
  switch (spec.family) {
    case TailFamily::StableMatched:
      return y;
    case TailFamily::Homogeneous:
      return 1.0;
    case TailFamily::Pareto: {
      const double log_s = stable_tail_table(spec.alpha).log_survival(y);
      if (!std::isfinite(log_s)) {
        throw InternalError("stable tail table returned a non-finite value at y = " + std::to_string(y));
      }
      // Survival is exactly one on the lower part of the grid; the Pareto
      // quantile at level 1 is its cutoff.
      return spec.x_min * std::exp(-log_s / spec.alpha);
    }
  }
  return 0.0;
}

double g_eps(const TailSpec& spec, double eps, double x) {
  if (!(x >= 0.0)) throw DomainError("g_eps argument must be nonnegative");
  const double c = c_eps(spec, eps);
  if (spec.family == TailFamily::StableMatched) return c * std::pow(eps, -1.0 / spec.alpha) * x;
  return c * g_inverse(spec, std::pow(eps, -1.0 / spec.alpha) * x);
}

TauField coupled_tau(const StableIncrements& increments, const TailSpec& spec) {
  spec.validate();
  if (spec.family != TailFamily::Homogeneous && increments.alpha != spec.alpha) {
    throw ConfigError("increment exponent " + std::to_string(increments.alpha) +
                      " does not match tail exponent " + std::to_string(spec.alpha));
  }
  const double c = c_eps(spec, increments.eps);
  const double stretch = std::pow(increments.eps, -1.0 / spec.alpha);
  TauField field{increments.first_index, std::vector<double>(increments.size())};
  for (std::size_t k = 0; k < increments.size(); ++k) {
    const double x = increments.values[k];
    field.values[k] = spec.family == TailFamily::StableMatched ? x / c : g_inverse(spec, stretch * x);
  }
  return field;
}

}  // namespace finlab
