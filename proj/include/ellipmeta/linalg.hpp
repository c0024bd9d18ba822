#pragma once

// Small dense matrix kernel. Dimensions are expected to stay below ~10, so
// everything is dynamic-size Eigen with straightforward loops.

#include <Eigen/Dense>

#include "ellipmeta/rng.hpp"

namespace ellipmeta {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Square symmetric matrix. Entries are stored symmetrized, so
/// (i, j) == (j, i) holds bit-exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  /// Symmetrizes m as (m + m^T) / 2. Throws kInvalidDimension if m is not square.
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int p);
  static SymMatrix zero(int p);
  static SymMatrix diagonal(const Vector& d);

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  SymMatrix operator+(const SymMatrix& rhs) const;
  SymMatrix operator-(const SymMatrix& rhs) const;
  SymMatrix operator*(double s) const;
  bool operator==(const SymMatrix& rhs) const { return m_ == rhs.m_; }

 private:
  Matrix m_;
};

/// Symmetric positive definite matrix with cached lower Cholesky factor.
class SpdMatrix {
 public:
  SpdMatrix() = default;

  const SymMatrix& sym() const noexcept { return s_; }
  const Matrix& matrix() const noexcept { return s_.matrix(); }
  /// Lower triangular L with L L^T == matrix().
  const Matrix& cholesky() const noexcept { return chol_; }
  int dim() const noexcept { return s_.dim(); }
  double logdet() const noexcept { return logdet_; }

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  Matrix inverse() const;
  /// v^T S^{-1} v.
  double inv_quad(const Vector& v) const;
  /// tr(S^{-1} A).
  double inv_trace(const Matrix& a) const;

 private:
  friend SpdMatrix spd_from_sym(const SymMatrix& s);
  SymMatrix s_;
  Matrix chol_;
  double logdet_ = 0.0;
};

/// Relative pivot tolerance: pivots must exceed this times the largest diagonal.
inline constexpr double kSpdPivotTolerance = 1e-12;

/// Cholesky-factors s. Throws NotPositiveDefiniteError with the offending
/// pivot when a pivot is <= kSpdPivotTolerance * max diagonal.
SpdMatrix spd_from_sym(const SymMatrix& s);

/// Duplication matrix G_p (p^2 x p(p+1)/2) with vec(S) == G_p vech(S).
Matrix duplication_matrix(int p);

/// Column-stacked lower triangle.
Vector vech(const SymMatrix& s);
SymMatrix unvech(const Vector& v);
Vector vec(const Matrix& m);

Matrix kron(const Matrix& a, const Matrix& b);

/// Spectral square root R (symmetric, R R == S).
SymMatrix sym_sqrt(const SpdMatrix& s);
/// Spectral square root of a positive semidefinite matrix; negative
/// eigenvalues down to -1e-12 * scale are clipped to zero.
SymMatrix psd_sqrt(const SymMatrix& s);

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of diag(R) forced positive.
Matrix haar_orthogonal(int p, Rng& rng);

/// Q diag(lambda) Q^T with Q Haar-distributed and lambda_i ~ U[lo, hi].
SymMatrix random_spd(int p, double lo, double hi, Rng& rng);

double min_eigenvalue(const SymMatrix& s);

/// Multivariate log-gamma, log Gamma_p(a).
double log_multigamma(int p, double a);

}  // namespace ellipmeta
