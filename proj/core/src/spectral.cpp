#include "finlab/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "finlab/errors.hpp"

namespace finlab {

namespace {

// exp(-60) ~ 1e-26: modes beyond this have no effect at double precision.
constexpr double kModeCutoff = 60.0;

void clamp_and_normalize(double* row, std::size_t n) {
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (!(row[j] > 0.0)) row[j] = 0.0;
    sum += row[j];
  }
  if (!(sum > 0.0)) throw InternalError("spectral propagator produced an empty row");
  for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
}

}  // namespace

SpectralPropagator::SpectralPropagator(const GapChain& chain) : n_(chain.size()) {
  if (n_ == 0) throw DomainError("spectral propagator of an empty chain");
  sqrt_w_.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) sqrt_w_[j] = std::sqrt(chain.weights()[j]);
  lambda_.assign(n_, 0.0);
  modes_.assign(n_ * n_, 0.0);
  if (n_ == 1) {
    modes_[0] = 1.0;
    return;
  }

  const auto& w = chain.weights();
  const auto& c = chain.conductances();
  const auto n = static_cast<lapack_int>(n_);
  std::vector<double> d(n_, 0.0), e(n_, 0.0);
  for (std::size_t i = 0; i + 1 < n_; ++i) {
    d[i] = -std::sqrt(c[i] / w[i]);
    e[i] = std::sqrt(c[i] / w[i + 1]);
  }

  if (n_ <= kSvdLimit) {
    // Right singular vectors of F are the eigenvectors of F^T F.
    std::vector<double> vt(n_ * n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) vt[j + j * n_] = 1.0;
    const lapack_int info = LAPACKE_dbdsqr(LAPACK_COL_MAJOR, 'U', n, n, 0, 0, d.data(), e.data(), vt.data(),
                                           n, nullptr, 1, nullptr, 1);
    if (info != 0) throw InternalError("dbdsqr failed with info = " + std::to_string(info));
    // Singular values come out in decreasing order; store modes by increasing rate.
    for (std::size_t m = 0; m < n_; ++m) {
      const std::size_t src = n_ - 1 - m;
      lambda_[m] = d[src] * d[src];
      for (std::size_t j = 0; j < n_; ++j) modes_[j + m * n_] = vt[src + j * n_];
    }
  } else {
    std::vector<double> diag(n_), off(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      diag[j] = d[j] * d[j] + (j > 0 ? e[j - 1] * e[j - 1] : 0.0);
      if (j + 1 < n_) off[j] = d[j] * e[j];
    }
    lapack_int found = 0;
    lapack_logical tryrac = 1;
    std::vector<lapack_int> support(2 * n_);
    const lapack_int info =
        LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'A', n, diag.data(), off.data(), 0.0, 0.0, 0, 0, &found,
                       lambda_.data(), modes_.data(), n, n, support.data(), &tryrac);
    if (info != 0 || found != n) throw InternalError("dstemr failed with info = " + std::to_string(info));
    for (double& l : lambda_) l = std::max(l, 0.0);
  }
}

std::size_t SpectralPropagator::active_modes(double t) const {
  if (t <= 0.0) return n_;
  std::size_t m = 0;
  while (m < n_ && lambda_[m] * t <= kModeCutoff) ++m;
  return std::max<std::size_t>(m, 1);
}

std::vector<double> SpectralPropagator::row(std::size_t start, double t) const {
  const std::size_t k = start;
  return rows(std::span<const std::size_t>(&k, 1), t);
}

std::vector<double> SpectralPropagator::rows(std::span<const std::size_t> starts, double t) const {
  const std::size_t r = starts.size();
  std::vector<double> out(r * n_, 0.0);
  if (r == 0) return out;
  if (t <= 0.0) {
    for (std::size_t i = 0; i < r; ++i) out[i * n_ + starts[i]] = 1.0;
    return out;
  }
  const std::size_t active = active_modes(t);
  std::vector<double> decay(active);
  for (std::size_t m = 0; m < active; ++m) decay[m] = std::exp(-lambda_[m] * t);

  // modes_ read as a (mode x site) row-major matrix has entry [m][j] = V_jm,
  // so each output row is a combination of contiguous mode rows. Plain
  // loops rather than BLAS: OpenBLAS 0.3.20's AVX-512 dgemm kernel returns
  // wrong products on some CPUs.
  // Starts are processed in blocks so each mode row is streamed once per block.
  constexpr std::size_t kBlock = 8;
  for (std::size_t i0 = 0; i0 < r; i0 += kBlock) {
    const std::size_t i1 = std::min(r, i0 + kBlock);
    for (std::size_t m = 0; m < active; ++m) {
      const double* mode = modes_.data() + m * n_;
      for (std::size_t i = i0; i < i1; ++i) {
        const double coeff = modes_[starts[i] + m * n_] * decay[m];
        double* row_i = out.data() + i * n_;
        for (std::size_t j = 0; j < n_; ++j) row_i[j] += coeff * mode[j];
      }
    }
  }
  for (std::size_t i = 0; i < r; ++i) {
    double* row_i = out.data() + i * n_;
    const double inv = 1.0 / sqrt_w_[starts[i]];
    for (std::size_t j = 0; j < n_; ++j) row_i[j] *= sqrt_w_[j] * inv;
    clamp_and_normalize(row_i, n_);
  }
  return out;
}

std::vector<double> SpectralPropagator::propagate(std::span<const double> p, double t) const {
  if (p.size() != n_) throw DomainError("propagate: law size does not match the chain");
  std::vector<double> out(p.begin(), p.end());
  if (t <= 0.0) return out;
  const std::size_t active = active_modes(t);
  std::vector<double> scaled(n_);
  for (std::size_t k = 0; k < n_; ++k) scaled[k] = p[k] / sqrt_w_[k];
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t m = 0; m < active; ++m) {
    const double* mode = modes_.data() + m * n_;
    double coeff = 0.0;
    for (std::size_t k = 0; k < n_; ++k) coeff += mode[k] * scaled[k];
    coeff *= std::exp(-lambda_[m] * t);
    for (std::size_t j = 0; j < n_; ++j) out[j] += coeff * mode[j];
  }
  for (std::size_t j = 0; j < n_; ++j) out[j] *= sqrt_w_[j];
  clamp_and_normalize(out.data(), n_);
  return out;
}

}  // namespace finlab
