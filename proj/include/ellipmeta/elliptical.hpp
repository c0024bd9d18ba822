#pragma once

// Density generators of the elliptical families and the random samplers
// built on them.
//
// Inverse-Wishart convention: IW_p(nu, A) has density proportional to
//   det(Psi)^{-nu/2} exp(-tr(Psi^{-1} A) / 2),
// i.e. Psi^{-1} ~ Wishart(dof = nu - p - 1, scale = A^{-1}). This is NOT the
// textbook parametrization (where the exponent is -(m + p + 1)/2); the two
// agree for m = nu - p - 1.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ellipmeta/linalg.hpp"
#include "ellipmeta/rng.hpp"

namespace ellipmeta {

enum class GeneratorKind { kNormal, kStudentT, kCustom };

/// Density generator f of a matrix-variate elliptical law. The built-in
/// families depend on the total dimension pn of the matrix they describe
/// (normalizing constant, and for t the tail exponent), so evaluation takes
/// (p, n). Custom generators are bound to one (p, n) by the caller.
class DensityGenerator {
 public:
  using LogF = std::function<double(double)>;
  using Ratio = std::function<double(double)>;

  static DensityGenerator normal();
  /// Throws kDomain unless dof > 0.
  static DensityGenerator student_t(double dof);
  /// log_f(u) = log f(u), ratio(u) = f'(u) / f(u), both for u >= 0.
  static DensityGenerator custom(std::string name, LogF log_f, Ratio ratio);

  GeneratorKind kind() const noexcept { return kind_; }
  /// Degrees of freedom; only meaningful for kStudentT.
  double dof() const noexcept { return dof_; }
  const std::string& name() const noexcept { return name_; }
  bool has_sampler() const noexcept { return kind_ != GeneratorKind::kCustom; }

  /// log f(u) for a generator of total dimension `dim` (= p n).
  double log_f(double u, int dim) const;
  /// f'(u) / f(u) for total dimension `dim`.
  double ratio(double u, int dim) const;

 private:
  GeneratorKind kind_ = GeneratorKind::kNormal;
  double dof_ = 0.0;
  std::string name_ = "normal";
  LogF log_f_;
  Ratio ratio_;
};

/// log f(u) including the normalizing constant K. Throws kDomain for u < 0.
double log_generator(const DensityGenerator& gen, double u, int p, int n);
/// f'(u) / f(u). Throws kDomain for u < 0.
double score_ratio(const DensityGenerator& gen, double u, int p, int n);

enum class JMethod { kClosedForm, kMonteCarlo };

/// J_i = E[(R^2)^i (f'(R^2) / f(R^2))^2] with R^2 = |vec Z|^2 for the
/// standard matrix-variate law of the generator.
struct JConstants {
  double j1 = 0.0;
  double j2 = 0.0;
  JMethod j1_method = JMethod::kClosedForm;
  JMethod j2_method = JMethod::kClosedForm;
  double j1_se = 0.0;  // Monte Carlo standard errors, 0 for closed forms
  double j2_se = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
  int p = 0;
  int n = 0;

  /// J2 / (2pn + p^2 n^2) - 1/4; non-positive is required for propriety.
  double j2_excess() const;
};

inline constexpr std::int64_t kDefaultJSamples = 200000;

/// Closed form where available (normal: both; t: J2), Monte Carlo otherwise.
/// Monte Carlo for custom generators is self-normalized importance sampling
/// of R^2 against a heavy-tailed (Cauchy-mixed) proposal.
JConstants j_constants(const DensityGenerator& gen, int p, int n, std::uint64_t seed,
                       std::int64_t samples = kDefaultJSamples);

/// Monte Carlo estimate of both constants from direct draws of R^2
/// (normal and t only). Used to validate the closed forms.
JConstants j_constants_monte_carlo(const DensityGenerator& gen, int p, int n,
                                   std::uint64_t seed, std::int64_t samples = kDefaultJSamples);

/// Draw Z ~ E_{p,n}(0, I, f); p x n.
Matrix sample_standard_elliptical(const DensityGenerator& gen, int p, int n, Rng& rng);

/// Psi ~ IW_p(nu, A) in the convention above. Requires nu > 2p.
SpdMatrix sample_inverse_wishart(double nu, const SpdMatrix& a, Rng& rng);

/// Mixing degrees of freedom k such that (xi / d) * IW_p(nu, A), xi ~ chi2_k,
/// has density proportional to det(Psi)^{-nu/2} f(tr(Psi^{-1} A)) for the t
/// generator of total dimension `generator_dim`:
///   k = d + generator_dim - p (nu - p - 1).
double giw_mixing_dof(double d, double nu, int p, int generator_dim);

/// Psi ~ GIW_p(nu, A, f) with density proportional to
/// det(Psi)^{-nu/2} f(tr(Psi^{-1} A)). Normal: inverse Wishart. Student t:
/// (xi / d) * Omega with Omega ~ IW_p(nu, A) and xi ~ chi2 with
/// giw_mixing_dof(...) degrees of freedom. Throws kUnsupportedSampler for
/// custom generators and kInvalidDof when the mixing dof is not positive
/// (the GIW law is improper there).
SpdMatrix sample_giw(const DensityGenerator& gen, double nu, const SpdMatrix& a,
                     int generator_dim, Rng& rng);

/// loc + scale^{1/2} z / sqrt(chi2_df / df).
Vector sample_multivariate_t(double df, const Vector& loc, const SpdMatrix& scale, Rng& rng);
Vector sample_multivariate_normal(const Vector& loc, const SpdMatrix& cov, Rng& rng);

/// Simulate the p x n effect matrix of the random effects model. Psi and the
/// U_i only need to be positive semidefinite. The t law uses one mixing
/// variable shared across all studies.
Matrix sample_model_data(const Vector& mu, const SymMatrix& psi, const std::vector<SymMatrix>& u,
                         const DensityGenerator& gen, Rng& rng);

// Normalized log densities; used by the proposal consistency checks.
double log_density_mvt(const Vector& x, double df, const Vector& loc, const SpdMatrix& scale);
double log_density_mvn(const Vector& x, const Vector& loc, const SpdMatrix& cov);
double log_density_inverse_wishart(const SpdMatrix& psi, double nu, const SpdMatrix& a);
/// Normalized GIW_p(nu, A, f) density for the normal and t generators.
double log_density_giw(const SpdMatrix& psi, const DensityGenerator& gen, double nu,
                       const SpdMatrix& a, int generator_dim);

}  // namespace ellipmeta
