#include "ellipmeta/dataset.hpp"

#include <algorithm>
#include <sstream>

#include "ellipmeta/error.hpp"

namespace ellipmeta {

Dataset::Dataset(std::vector<std::string> labels, Matrix effects, std::vector<SymMatrix> within,
                 WithinCheck check)
    : labels_(std::move(labels)), effects_(std::move(effects)), within_(std::move(within)),
      check_(check) {
  const int np = p();
  const int nn = n();
  if (np < 1 || nn < 1) throw Error(ErrorCode::kInvalidDimension, "dataset needs p >= 1 and n >= 1");
  if (static_cast<int>(within_.size()) != nn) {
    throw Error(ErrorCode::kDimensionMismatch, "number of covariance matrices differs from n");
  }
  if (labels_.empty()) {
    for (int i = 0; i < nn; ++i) labels_.push_back(std::to_string(i + 1));
  }
  if (static_cast<int>(labels_.size()) != nn) {
    throw Error(ErrorCode::kDimensionMismatch, "number of labels differs from n");
  }
  for (int i = 0; i < nn; ++i) {
    const auto& ui = within_[static_cast<std::size_t>(i)];
    if (ui.dim() != np) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "covariance of study " + labels_[static_cast<std::size_t>(i)] + " is not p x p");
    }
    if (check_ == WithinCheck::kPositiveDefinite) {
      try {
        (void)spd_from_sym(ui);
      } catch (const NotPositiveDefiniteError& e) {
        throw NotPositiveDefiniteError(e.pivot(), e.pivot_value(),
                                       "within-study covariance of study " +
                                           labels_[static_cast<std::size_t>(i)]);
      }
    } else if (min_eigenvalue(ui) < -1e-12 * std::max(1.0, ui.matrix().cwiseAbs().maxCoeff())) {
      throw NotPositiveDefiniteError(0, min_eigenvalue(ui),
                                     "within-study covariance of study " +
                                         labels_[static_cast<std::size_t>(i)] +
                                         " is not positive semidefinite");
    }
  }
}

Dataset Dataset::with_scaled_within(double s) const {
  std::vector<SymMatrix> scaled;
  scaled.reserve(within_.size());
  for (const auto& ui : within_) scaled.push_back(ui * s);
  return Dataset(labels_, effects_, std::move(scaled), check_);
}

Dataset Dataset::permuted(const std::vector<int>& order) const {
  if (static_cast<int>(order.size()) != n()) {
    throw Error(ErrorCode::kDimensionMismatch, "permutation length differs from n");
  }
  std::vector<std::string> labels;
  Matrix effects(p(), n());
  std::vector<SymMatrix> within;
  for (int k = 0; k < n(); ++k) {
    const auto src = static_cast<std::size_t>(order[static_cast<std::size_t>(k)]);
    labels.push_back(labels_[src]);
    effects.col(k) = effects_.col(static_cast<Eigen::Index>(src));
    within.push_back(within_[src]);
  }
  return Dataset(std::move(labels), std::move(effects), std::move(within), check_);
}

bool Dataset::operator==(const Dataset& rhs) const {
  if (labels_ != rhs.labels_ || effects_.rows() != rhs.effects_.rows() ||
      effects_.cols() != rhs.effects_.cols() || effects_ != rhs.effects_) {
    return false;
  }
  return std::equal(within_.begin(), within_.end(), rhs.within_.begin(), rhs.within_.end());
}

ShiftedCovariances shift_covariances(const SymMatrix& psi, const std::vector<SymMatrix>& u) {
  const int p = psi.dim();
  ShiftedCovariances out;
  out.shifted.reserve(u.size());
  out.precision.reserve(u.size());
  out.precision_sum = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < u.size(); ++i) {
    try {
      out.shifted.push_back(spd_from_sym(psi + u[i]));
    } catch (const NotPositiveDefiniteError& e) {
      std::ostringstream os;
      os << "Psi + U_" << i + 1;
      throw NotPositiveDefiniteError(e.pivot(), e.pivot_value(), os.str());
    }
    out.precision.push_back(out.shifted.back().inverse());
    out.precision_sum += out.precision.back();
    out.sum_logdet += out.shifted.back().logdet();
  }
  return out;
}

}  // namespace ellipmeta
