#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "finlab/gap_chain.hpp"

namespace finlab {

/// Eigendecomposition of a gap chain's generator. With W = diag(w) the
/// generator Q is self-adjoint in l^2(W), so S = W^{1/2} Q W^{-1/2} is
/// symmetric and S = -F^T F for the bidiagonal matrix F of edge
/// conductances. Then
///   P_kj(t) = sqrt(w_j / w_k) sum_m V_km exp(-lambda_m t) V_jm.
/// Small chains use the bidiagonal SVD of F (relatively accurate
/// eigenvalues), larger ones MRRR on the tridiagonal F^T F.
class SpectralPropagator {
 public:
  /// Chains up to this size use the bidiagonal SVD.
  static constexpr std::size_t kSvdLimit = 400;

  explicit SpectralPropagator(const GapChain& chain);

  [[nodiscard]] std::size_t size() const { return n_; }
  /// Eigenvalues of -Q in increasing order (the first is 0).
  [[nodiscard]] const std::vector<double>& rates() const { return lambda_; }
  /// V_jm, column m is mode m.
  [[nodiscard]] double mode(std::size_t j, std::size_t m) const { return modes_[j + m * n_]; }

  /// Row P(start, .) at time t, clamped at zero and renormalized.
  [[nodiscard]] std::vector<double> row(std::size_t start, double t) const;
  /// Rows for several starts, row-major (starts.size() x n).
  [[nodiscard]] std::vector<double> rows(std::span<const std::size_t> starts, double t) const;
  /// p^T P(t).
  [[nodiscard]] std::vector<double> propagate(std::span<const double> p, double t) const;

 private:
  /// Number of leading modes with lambda * t below the cutoff.
  [[nodiscard]] std::size_t active_modes(double t) const;

  std::size_t n_ = 0;
  std::vector<double> sqrt_w_;
  std::vector<double> lambda_;
  std::vector<double> modes_;
};

}  // namespace finlab
