#include "ellipmeta/linalg.hpp"

#include <cmath>
#include <sstream>

#include "ellipmeta/error.hpp"

namespace ellipmeta {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDimension: return "invalid-dimension";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNotPositiveDefinite: return "not-positive-definite";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kGeneratorUnusable: return "generator-unusable";
    case ErrorCode::kUnsupportedSampler: return "unsupported-sampler";
    case ErrorCode::kInvalidDof: return "invalid-dof";
    case ErrorCode::kPriorEvaluation: return "prior-evaluation";
    case ErrorCode::kMarginalEvaluation: return "marginal-evaluation";
    case ErrorCode::kUndefinedMoment: return "undefined-second-moment";
    case ErrorCode::kDegenerateProposal: return "degenerate-proposal";
    case ErrorCode::kGateRejection: return "gate-rejection";
    case ErrorCode::kEmptyDraws: return "empty-draws";
    case ErrorCode::kGridTooSmall: return "grid-too-small";
    case ErrorCode::kInput: return "input";
  }
  return "unknown";
}

namespace {

std::string npd_message(int pivot, double value, const std::string& context) {
  std::ostringstream os;
  os << "matrix is not positive definite: pivot " << pivot << " = " << value;
  if (!context.empty()) os << " (" << context << ")";
  return os.str();
}

}  // namespace

NotPositiveDefiniteError::NotPositiveDefiniteError(int pivot, double value,
                                                   const std::string& context)
    : Error(ErrorCode::kNotPositiveDefinite, npd_message(pivot, value, context)),
      pivot_(pivot),
      value_(value) {}

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorCode::kInvalidDimension, "SymMatrix requires a non-empty square matrix");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int p) { return SymMatrix(Matrix::Identity(p, p)); }
SymMatrix SymMatrix::zero(int p) { return SymMatrix(Matrix::Zero(p, p)); }
SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

SymMatrix SymMatrix::operator+(const SymMatrix& rhs) const {
  if (dim() != rhs.dim()) throw Error(ErrorCode::kDimensionMismatch, "SymMatrix sum");
  SymMatrix out;
  out.m_ = m_ + rhs.m_;
  return out;
}

SymMatrix SymMatrix::operator-(const SymMatrix& rhs) const {
  if (dim() != rhs.dim()) throw Error(ErrorCode::kDimensionMismatch, "SymMatrix difference");
  SymMatrix out;
  out.m_ = m_ - rhs.m_;
  return out;
}

SymMatrix SymMatrix::operator*(double s) const {
  SymMatrix out;
  out.m_ = s * m_;
  return out;
}

SpdMatrix spd_from_sym(const SymMatrix& s) {
  const int p = s.dim();
  const Matrix& a = s.matrix();
  const double scale = a.diagonal().maxCoeff();
  const double tol = kSpdPivotTolerance * (scale > 0.0 ? scale : 0.0);

  Matrix l = Matrix::Zero(p, p);
  double logdet = 0.0;
  for (int k = 0; k < p; ++k) {
    double pivot = a(k, k);
    for (int j = 0; j < k; ++j) pivot -= l(k, j) * l(k, j);
    if (!(pivot > tol) || !(scale > 0.0)) throw NotPositiveDefiniteError(k, pivot);
    const double lkk = std::sqrt(pivot);
    l(k, k) = lkk;
    logdet += std::log(pivot);
    for (int i = k + 1; i < p; ++i) {
      double v = a(i, k);
      for (int j = 0; j < k; ++j) v -= l(i, j) * l(k, j);
      l(i, k) = v / lkk;
    }
  }
  SpdMatrix out;
  out.s_ = s;
  out.chol_ = std::move(l);
  out.logdet_ = logdet;
  return out;
}

Vector SpdMatrix::solve(const Vector& b) const {
  Vector y = chol_.triangularView<Eigen::Lower>().solve(b);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix SpdMatrix::solve(const Matrix& b) const {
  Matrix y = chol_.triangularView<Eigen::Lower>().solve(b);
  return chol_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix SpdMatrix::inverse() const {
  Matrix inv = solve(Matrix(Matrix::Identity(dim(), dim())));
  return 0.5 * (inv + inv.transpose());
}

double SpdMatrix::inv_quad(const Vector& v) const {
  Vector y = chol_.triangularView<Eigen::Lower>().solve(v);
  return y.squaredNorm();
}

double SpdMatrix::inv_trace(const Matrix& a) const { return solve(a).trace(); }

Matrix duplication_matrix(int p) {
  if (p < 1) throw Error(ErrorCode::kInvalidDimension, "duplication_matrix requires p >= 1");
  const int q = p * (p + 1) / 2;
  Matrix g = Matrix::Zero(p * p, q);
  int col = 0;
  for (int j = 0; j < p; ++j) {
    for (int i = j; i < p; ++i) {
      g(i + j * p, col) = 1.0;
      g(j + i * p, col) = 1.0;
      ++col;
    }
  }
  return g;
}

Vector vech(const SymMatrix& s) {
  const int p = s.dim();
  Vector v(p * (p + 1) / 2);
  int k = 0;
  for (int j = 0; j < p; ++j)
    for (int i = j; i < p; ++i) v(k++) = s(i, j);
  return v;
}

SymMatrix unvech(const Vector& v) {
  const auto q = v.size();
  const int p = static_cast<int>(std::lround((std::sqrt(8.0 * q + 1.0) - 1.0) / 2.0));
  if (p * (p + 1) / 2 != q || p < 1) {
    throw Error(ErrorCode::kInvalidDimension, "unvech: length is not triangular");
  }
  Matrix m(p, p);
  int k = 0;
  for (int j = 0; j < p; ++j) {
    for (int i = j; i < p; ++i) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  }
  return SymMatrix(m);
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

SymMatrix sym_sqrt(const SpdMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix());
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return SymMatrix(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

SymMatrix psd_sqrt(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix());
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw NotPositiveDefiniteError(0, es.eigenvalues().minCoeff(), "matrix is not positive semidefinite");
  }
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return SymMatrix(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

Matrix haar_orthogonal(int p, Rng& rng) {
  if (p < 1) throw Error(ErrorCode::kInvalidDimension, "haar_orthogonal requires p >= 1");
  Matrix z(p, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < p; ++i) z(i, j) = std_normal(rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(p, p);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < p; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

SymMatrix random_spd(int p, double lo, double hi, Rng& rng) {
  const Matrix q = haar_orthogonal(p, rng);
  Vector ev(p);
  for (int i = 0; i < p; ++i) ev(i) = lo + (hi - lo) * uniform01(rng);
  return SymMatrix(q * ev.asDiagonal() * q.transpose());
}

double min_eigenvalue(const SymMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double log_multigamma(int p, double a) {
  double out = 0.25 * p * (p - 1) * std::log(M_PI);
  for (int j = 0; j < p; ++j) out += std::lgamma(a - 0.5 * j);
  return out;
}

}  // namespace ellipmeta
