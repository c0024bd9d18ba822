#pragma once

// Independence Metropolis-Hastings for (mu, Psi). The proposal q is the
// posterior of the U_i = 0 model under the chosen prior,
//   q(mu, Psi) ~ det(Psi)^{-nu/2} f(tr(Psi^{-1} A_mu)),
//   A_mu = sum_i (x_i - mu)(x_i - mu)^T = (n-1) S + n (mu - xbar)(mu - xbar)^T,
// with nu = n+p+1 (reference) or n+p+2 (Jeffreys). It is drawn through one
// of two exact factorizations (Variant A / B).

#include <cstdint>
#include <vector>

#include "ellipmeta/draws.hpp"
#include "ellipmeta/posterior.hpp"
#include "ellipmeta/rng.hpp"

namespace ellipmeta {

struct SufficientStats {
  Vector xbar;
  SymMatrix s;  // unbiased sample covariance of the effects
};

/// Throws kInvalidDimension when n < 2.
SufficientStats sufficient_stats(const Dataset& data);

struct ProposalPoint {
  Vector mu;
  SymMatrix psi;
  double log_q = 0.0;
};

class ProposalSampler {
 public:
  /// Throws kUnsupportedSampler for custom generators, kDegenerateProposal
  /// when (n-1) S is singular and kInvalidDof when the proposal is improper
  /// (Jeffreys t proposal with d <= p).
  ///
  /// dof_offset shifts the degrees of freedom used by the factorized
  /// sampler (t dof of mu for A, IW dof of Psi for B) but not log_q. It
  /// exists only to build a deliberately wrong sampler for negative
  /// controls; leave it at 0.
  ProposalSampler(const PosteriorKernel& kernel, Variant variant, double dof_offset = 0.0);

  ProposalPoint draw(Rng& rng) const;

  /// Closed-form log q (unnormalized). Psi must be positive definite.
  double log_q(const Vector& mu, const SymMatrix& psi) const;
  /// Normalized log density of the factorized law the sampler draws from.
  /// Differs from log_q by a constant when the factorization is exact.
  double log_factorized_density(const Vector& mu, const SymMatrix& psi) const;

  Variant variant() const noexcept { return variant_; }
  double nu() const noexcept { return nu_; }
  const SufficientStats& stats() const noexcept { return stats_; }

 private:
  SymMatrix a_mu(const Vector& mu) const;
  double mu_marginal_dof() const;   // A
  double psi_marginal_nu() const;   // B

  const PosteriorKernel* kernel_;
  Variant variant_;
  double dof_offset_;
  SufficientStats stats_;
  SpdMatrix scatter_;  // (n-1) S
  double nu_ = 0.0;
  int p_ = 0;
  int n_ = 0;
};

struct ChainState {
  Vector mu;
  SymMatrix psi;
  double log_posterior = 0.0;
  double log_q = 0.0;
};

/// min(1, exp[(lp_w - lq_w) - (lp_prev - lq_prev)]).
double mh_accept_probability(double lp_proposal, double lq_proposal, double lp_current,
                             double lq_current);

/// One independence MH step. A proposal whose log posterior is not finite
/// (or cannot be evaluated) is rejected. Returns whether it was accepted.
bool mh_step(ChainState& state, const ProposalPoint& proposal, const PosteriorKernel& kernel,
             Rng& rng);

/// Single chain with stream `chain_index` of config.seed, started at
/// (xbar, S). Fills per-coordinate ESS.
Draws run_chain(const SamplerConfig& config, const PosteriorKernel& kernel, int chain_index = 0);

/// config.chains chains, run on up to `parallel` threads and merged in chain
/// order. The result does not depend on `parallel`.
Draws run_chains(const SamplerConfig& config, const PosteriorKernel& kernel, int parallel = 1);

/// Concatenate chains in the given order. ESS is summed per coordinate.
Draws merge_draws(std::vector<Draws> chains);

}  // namespace ellipmeta
