#pragma once

// Independent checks of the main computational paths. Nothing here reuses
// the quantity it verifies: the Fisher information comes from simulated
// scores, the p = 1 posterior from brute-force grids with its own kernel.

#include <cstdint>
#include <string>
#include <vector>

#include "ellipmeta/dataset.hpp"
#include "ellipmeta/draws.hpp"
#include "ellipmeta/elliptical.hpp"
#include "ellipmeta/posterior.hpp"
#include "ellipmeta/priors.hpp"
#include "ellipmeta/rng.hpp"

namespace ellipmeta {

struct OracleReport {
  std::string name;
  std::vector<double> oracle_values;
  std::vector<double> main_values;
  double error = 0.0;  // the statistic compared against `tolerance`
  double tolerance = 0.0;
  bool passed = false;
  std::int64_t samples = 0;  // draws, points or grid size
  std::uint64_t seed = 0;
  std::string note;
};

/// Average outer product of finite-difference scores of the log-likelihood
/// in (mu, vech Psi), with data simulated at mu = 0. Order: mu_1..mu_p,
/// then vech(Psi). Throws kDomain when samples < 10^4 and when a score is
/// not finite.
SymMatrix mc_fisher_info(const DensityGenerator& gen, const SymMatrix& psi,
                         const std::vector<SymMatrix>& u, std::int64_t samples, Rng& rng);

/// Relative finite-difference step of mc_fisher_info.
inline constexpr double kScoreStep = 1e-5;

/// Compares mc_fisher_info against fisher_f11 / fisher_f22: relative
/// Frobenius errors of both blocks and the size of the mu-Psi block
/// relative to F11. Returns three reports.
std::vector<OracleReport> fisher_information_check(const DensityGenerator& gen,
                                                   const SymMatrix& psi,
                                                   const std::vector<SymMatrix>& u,
                                                   std::int64_t samples, std::uint64_t seed,
                                                   double tolerance = 0.05);

struct QuadratureGrid {
  int psi_points = 400;
  int mu_points = 400;
  double psi_min = 1e-6;
  double tail_tolerance = 1e-8;
};

struct QuadratureResult {
  double mu_mean = 0.0;
  double mu_sd = 0.0;
  double psi_mean = 0.0;
  double psi_max = 0.0;
  double tail_mass = 0.0;
  double richardson_delta = 0.0;  // |coarse - fine| for mu_mean
};

/// Unnormalized p = 1 log posterior, written out for scalars.
double oracle_log_kernel_1d(const Dataset& data, PriorKind kind, const DensityGenerator& gen,
                            double mu, double psi);

/// Posterior moments of (mu, psi) for p = 1 by tensor-grid quadrature
/// (log-spaced psi, uniform mu), refined at double resolution. Throws
/// kGridTooSmall when the psi tail mass cannot be pushed below the
/// tolerance and kInvalidDimension unless p == 1.
QuadratureResult quadrature_posterior_1d(const Dataset& data, PriorKind kind,
                                         const DensityGenerator& gen,
                                         const QuadratureGrid& grid = {});

struct FactorizationOptions {
  int points = 50;
  std::int64_t moment_draws = 100000;
  double dof_offset = 0.0;  // corrupts the sampler; negative controls only
  double analytic_tolerance = 1e-8;
  double z_tolerance = 3.0;
  bool analytic = true;
  bool statistical = true;
};

/// (a) sd over random points of log[factorized pdf] - log q for each
/// variant; (b) largest |z| between variant A and variant B proposal
/// moments (means of mu and vech Psi, second moments of mu).
std::vector<OracleReport> factorization_consistency(const PosteriorKernel& kernel,
                                                    const FactorizationOptions& options,
                                                    std::uint64_t seed);

/// min eigenvalue of A^{-1} (x) A^{-1} - (A+B)^{-1} (x) (A+B)^{-1} over random
/// SPD A and PSD B with p in {1, 2, 3}; the worst value must be >= -1e-10.
OracleReport kronecker_order_check(int cases, std::uint64_t seed);

/// With U_i = V for every study the priors reduce to powers of
/// det(Psi + V): log pi_R + (p+1)/2 logdet(Psi + V) and
/// log pi_J + (p+2)/2 logdet(Psi + V) must not depend on Psi. Reports the sd
/// of that sum over random Psi.
OracleReport homoscedastic_prior_check(const DensityGenerator& gen, PriorKind kind, int p, int n,
                                       int cases, std::uint64_t seed,
                                       double tolerance = 1e-8);

/// With every U_i = 0 the proposal equals the posterior, so every MH step
/// must accept. Also compares the mu draws with the closed-form marginal t
/// (mean and variance of each coordinate, |z| < 3).
std::vector<OracleReport> trivial_acceptance_check(const DensityGenerator& gen, PriorKind kind,
                                                   Variant variant, int p, int n,
                                                   std::int64_t steps, std::uint64_t seed);

/// t closed-form J2 against direct Monte Carlo; relative error.
OracleReport j2_check(const DensityGenerator& gen, int p, int n, std::int64_t samples,
                      std::uint64_t seed, double tolerance = 0.01);

}  // namespace ellipmeta
