#pragma once

#include <string>
#include <vector>

#include "ellipmeta/linalg.hpp"

namespace ellipmeta {

/// n studies, each a p-vector of effects with a known within-study
/// covariance U_i.
class Dataset {
 public:
  enum class WithinCheck {
    kPositiveDefinite,      // user data: every U_i must be SPD
    kPositiveSemidefinite,  // simulation fixtures, e.g. U_i = 0
  };

  Dataset() = default;
  /// effects is p x n (column i = study i). Throws kDimensionMismatch on
  /// ragged input and NotPositiveDefiniteError (naming the study) when a
  /// U_i fails the check.
  Dataset(std::vector<std::string> labels, Matrix effects, std::vector<SymMatrix> within,
          WithinCheck check = WithinCheck::kPositiveDefinite);

  int p() const noexcept { return static_cast<int>(effects_.rows()); }
  int n() const noexcept { return static_cast<int>(effects_.cols()); }
  const Matrix& effects() const noexcept { return effects_; }
  Vector effect(int i) const { return effects_.col(i); }
  const std::vector<SymMatrix>& within() const noexcept { return within_; }
  const SymMatrix& within(int i) const { return within_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Copy with every U_i multiplied by s (e.g. (d - 2)/d for the t model).
  Dataset with_scaled_within(double s) const;
  /// Copy with studies reordered by `order` (a permutation of 0..n-1).
  Dataset permuted(const std::vector<int>& order) const;

  bool operator==(const Dataset& rhs) const;

 private:
  std::vector<std::string> labels_;
  Matrix effects_;
  std::vector<SymMatrix> within_;
  WithinCheck check_ = WithinCheck::kPositiveDefinite;
};

/// Per-Psi quantities shared by the prior and the likelihood: the shifted
/// covariances Psi + U_i, their inverses and sums.
struct ShiftedCovariances {
  std::vector<SpdMatrix> shifted;
  std::vector<Matrix> precision;
  Matrix precision_sum;
  double sum_logdet = 0.0;
};

/// Psi only needs to be positive semidefinite; each Psi + U_i must be SPD.
ShiftedCovariances shift_covariances(const SymMatrix& psi, const std::vector<SymMatrix>& u);

}  // namespace ellipmeta
