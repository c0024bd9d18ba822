#pragma once

// Unnormalized posterior of (mu, Psi) for the elliptical random effects
// model:
//   pi(mu, Psi | X) ~ pi(Psi) prod_i det(Psi + U_i)^{-1/2}
//                     f( sum_i (x_i - mu)^T (Psi + U_i)^{-1} (x_i - mu) ).
// Psi may sit on the boundary of the cone (positive semidefinite) as long as
// every Psi + U_i is positive definite.

#include "ellipmeta/dataset.hpp"
#include "ellipmeta/draws.hpp"
#include "ellipmeta/elliptical.hpp"
#include "ellipmeta/priors.hpp"

namespace ellipmeta {

/// Dataset + prior bound into one immutable evaluator; safe to share across
/// threads.
class PosteriorKernel {
 public:
  /// Throws kDimensionMismatch when the prior was built for another (p, n)
  /// and kGateRejection (with the failing conditions) when the propriety
  /// gate refuses the combination.
  PosteriorKernel(Dataset data, PriorSpec prior);

  const Dataset& data() const noexcept { return data_; }
  const PriorSpec& prior() const noexcept { return prior_; }
  const DensityGenerator& generator() const noexcept { return prior_.generator; }
  int p() const noexcept { return data_.p(); }
  int n() const noexcept { return data_.n(); }

 private:
  Dataset data_;
  PriorSpec prior_;
};

/// x~(Psi) = (sum_i W_i)^{-1} sum_i W_i x_i, W_i = (Psi + U_i)^{-1}.
Vector weighted_mean(const ShiftedCovariances& sc, const Dataset& data);
Vector weighted_mean(const SymMatrix& psi, const Dataset& data);

/// sum_i (x_i - x~)^T W_i (x_i - x~).
double residual_quadform(const ShiftedCovariances& sc, const Dataset& data);
double residual_quadform(const SymMatrix& psi, const Dataset& data);

/// sum_i (x_i - mu)^T W_i (x_i - mu).
double full_quadform(const ShiftedCovariances& sc, const Dataset& data, const Vector& mu);

/// Log-likelihood including the generator's normalizing constant.
double log_likelihood(const Dataset& data, const DensityGenerator& gen, const Vector& mu,
                      const SymMatrix& psi);

double log_joint_posterior(const PosteriorKernel& kernel, const Vector& mu, const SymMatrix& psi);

/// Law of mu given Psi: Gaussian for the normal model, t otherwise.
struct ConditionalLaw {
  enum class Family { kNormal, kStudentT } family = Family::kNormal;
  double dof = 0.0;  // t only
  Vector location;
  SymMatrix dispersion;  // covariance for the normal family

  double log_density(const Vector& mu) const;
};

/// Throws kUnsupportedSampler for custom generators.
ConditionalLaw conditional_mu_params(const PosteriorKernel& kernel, const SymMatrix& psi);

/// Log marginal posterior of Psi (mu integrated out), up to a constant that
/// does not depend on Psi. Normal and t use closed forms; custom generators
/// integrate the radial part numerically.
double log_marginal_psi(const PosteriorKernel& kernel, const SymMatrix& psi);
/// The generic route for every generator: quadrature of
/// int_0^inf u^{p-1} f(u^2 + r) du after the map u = tan(theta).
/// Throws kMarginalEvaluation when the adaptive rule does not converge.
double log_marginal_psi_quadrature(const PosteriorKernel& kernel, const SymMatrix& psi);

/// Relative tolerance of the radial quadrature.
inline constexpr double kMarginalQuadratureTolerance = 1e-9;

/// C(Psi) = E(R^2) of the conditional law of mu: 1 for the normal model,
/// (d + r) / (pn + d - p - 2) for t (kUndefinedMoment when pn + d - p <= 2).
double c_factor(const PosteriorKernel& kernel, const SymMatrix& psi);

struct MuMoments {
  Vector rao_blackwell_mean;
  SymMatrix rao_blackwell_cov;  // E[C(Psi) W^{-1}] + Var[x~(Psi)]
  Vector raw_mean;
  SymMatrix raw_cov;
};

/// Throws kEmptyDraws on an empty sample.
MuMoments posterior_moments_mu(const Draws& draws, const PosteriorKernel& kernel);

}  // namespace ellipmeta
