#include "ellipmeta/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "ellipmeta/diagnostics.hpp"
#include "ellipmeta/error.hpp"

namespace ellipmeta {

const char* to_string(Variant v) { return v == Variant::kA ? "A" : "B"; }

Variant parse_variant(const std::string& s) {
  if (s == "A" || s == "a") return Variant::kA;
  if (s == "B" || s == "b") return Variant::kB;
  throw Error(ErrorCode::kInput, "unknown variant '" + s + "' (expected A|B)");
}

void SamplerConfig::validate() const {
  if (draws < 1) throw Error(ErrorCode::kInput, "draws must be >= 1");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw Error(ErrorCode::kInput, "burn-in fraction must lie in [0, 1)");
  }
  if (thin < 1) throw Error(ErrorCode::kInput, "thin must be >= 1");
  if (chains < 1) throw Error(ErrorCode::kInput, "chains must be >= 1");
}

std::int64_t SamplerConfig::burn_in_count() const {
  return static_cast<std::int64_t>(std::floor(burn_in_fraction * static_cast<double>(draws)));
}

std::int64_t SamplerConfig::retained_per_chain() const {
  const std::int64_t kept = draws - burn_in_count();
  return (kept + thin - 1) / thin;
}

std::vector<double> Draws::coordinate(int k) const {
  std::vector<double> out;
  out.reserve(size());
  if (k < p) {
    for (const auto& m : mu) out.push_back(m(k));
    return out;
  }
  // vech order: column-stacked lower triangle.
  int idx = k - p;
  int col = 0;
  while (idx >= p - col) {
    idx -= p - col;
    ++col;
  }
  const int row = col + idx;
  for (const auto& s : psi) out.push_back(s(row, col));
  return out;
}

SufficientStats sufficient_stats(const Dataset& data) {
  const int n = data.n();
  if (n < 2) throw Error(ErrorCode::kInvalidDimension, "sample covariance needs n >= 2");
  SufficientStats st;
  st.xbar = data.effects().rowwise().mean();
  const Matrix centered = data.effects().colwise() - st.xbar;
  st.s = SymMatrix(centered * centered.transpose() / (n - 1.0));
  return st;
}

ProposalSampler::ProposalSampler(const PosteriorKernel& kernel, Variant variant, double dof_offset)
    : kernel_(&kernel), variant_(variant), dof_offset_(dof_offset),
      stats_(sufficient_stats(kernel.data())), p_(kernel.p()), n_(kernel.n()) {
  const DensityGenerator& gen = kernel.generator();
  if (!gen.has_sampler()) {
    throw Error(ErrorCode::kUnsupportedSampler,
                "independence sampler needs the normal or t generator, got '" + gen.name() + "'");
  }
  try {
    scatter_ = spd_from_sym(stats_.s * (n_ - 1.0));
  } catch (const NotPositiveDefiniteError& e) {
    throw Error(ErrorCode::kDegenerateProposal,
                std::string("sample covariance of the effects is singular (") + e.what() +
                    "); the proposal is undefined");
  }
  nu_ = n_ + p_ + (kernel.prior().kind == PriorKind::kReference ? 1.0 : 2.0);
  if (gen.kind() == GeneratorKind::kStudentT) {
    const double k_a = giw_mixing_dof(gen.dof(), nu_, p_, p_ * n_);
    const double k_b = giw_mixing_dof(gen.dof(), psi_marginal_nu(), p_, p_ * (n_ - 1));
    if (!(k_a > 0.0) || !(k_b > 0.0)) {
      std::ostringstream os;
      os << "t proposal is improper for d = " << gen.dof() << ", p = " << p_
         << " under the " << to_string(kernel.prior().kind) << " prior (needs d > p)";
      throw Error(ErrorCode::kInvalidDof, os.str());
    }
  }
  if (!(mu_marginal_dof() > 0.0)) {
    throw Error(ErrorCode::kInvalidDof, "marginal t of mu has non-positive degrees of freedom");
  }
}

double ProposalSampler::mu_marginal_dof() const {
  return nu_ - 2.0 * p_ - 1.0 + (variant_ == Variant::kA ? dof_offset_ : 0.0);
}

double ProposalSampler::psi_marginal_nu() const {
  return nu_ - 1.0 + (variant_ == Variant::kB ? dof_offset_ : 0.0);
}

SymMatrix ProposalSampler::a_mu(const Vector& mu) const {
  const Vector delta = mu - stats_.xbar;
  return SymMatrix(scatter_.matrix() + n_ * (delta * delta.transpose()));
}

double ProposalSampler::log_q(const Vector& mu, const SymMatrix& psi) const {
  const SpdMatrix ps = spd_from_sym(psi);
  const double u = ps.inv_trace(a_mu(mu).matrix());
  return -0.5 * nu_ * ps.logdet() + log_generator(kernel_->generator(), u, p_, n_);
}

double ProposalSampler::log_factorized_density(const Vector& mu, const SymMatrix& psi) const {
  const DensityGenerator& gen = kernel_->generator();
  const SpdMatrix ps = spd_from_sym(psi);
  if (variant_ == Variant::kA) {
    const double k = mu_marginal_dof();
    const SpdMatrix scale = spd_from_sym(SymMatrix(scatter_.matrix() / (n_ * k)));
    return log_density_mvt(mu, k, stats_.xbar, scale) +
           log_density_giw(ps, gen, nu_, spd_from_sym(a_mu(mu)), p_ * n_);
  }
  const double nu_b = psi_marginal_nu();
  const double lp_psi = log_density_giw(ps, gen, nu_b, scatter_, p_ * (n_ - 1));
  if (gen.kind() == GeneratorKind::kNormal) {
    return lp_psi + log_density_mvn(mu, stats_.xbar, spd_from_sym(psi * (1.0 / n_)));
  }
  const double d = gen.dof();
  const double dof = p_ * n_ + d - p_;
  const double c = (d + ps.inv_trace(scatter_.matrix())) / (n_ * dof);
  return lp_psi + log_density_mvt(mu, dof, stats_.xbar, spd_from_sym(psi * c));
}

ProposalPoint ProposalSampler::draw(Rng& rng) const {
  const DensityGenerator& gen = kernel_->generator();
  ProposalPoint pt;
  if (variant_ == Variant::kA) {
    const double k = mu_marginal_dof();
    const SpdMatrix scale = spd_from_sym(SymMatrix(scatter_.matrix() / (n_ * k)));
    pt.mu = sample_multivariate_t(k, stats_.xbar, scale, rng);
    pt.psi = sample_giw(gen, nu_, spd_from_sym(a_mu(pt.mu)), p_ * n_, rng).sym();
  } else {
    const SpdMatrix psi = sample_giw(gen, psi_marginal_nu(), scatter_, p_ * (n_ - 1), rng);
    pt.psi = psi.sym();
    if (gen.kind() == GeneratorKind::kNormal) {
      pt.mu = sample_multivariate_normal(stats_.xbar, spd_from_sym(pt.psi * (1.0 / n_)), rng);
    } else {
      const double d = gen.dof();
      const double dof = p_ * n_ + d - p_;
      const double c = (d + psi.inv_trace(scatter_.matrix())) / (n_ * dof);
      pt.mu = sample_multivariate_t(dof, stats_.xbar, spd_from_sym(pt.psi * c), rng);
    }
  }
  pt.log_q = log_q(pt.mu, pt.psi);
  return pt;
}

double mh_accept_probability(double lp_proposal, double lq_proposal, double lp_current,
                             double lq_current) {
  const double log_ratio = (lp_proposal - lq_proposal) - (lp_current - lq_current);
  if (std::isnan(log_ratio)) return 0.0;
  return std::exp(std::min(0.0, log_ratio));
}

bool mh_step(ChainState& state, const ProposalPoint& proposal, const PosteriorKernel& kernel,
             Rng& rng) {
  double lp = -std::numeric_limits<double>::infinity();
  try {
    lp = log_joint_posterior(kernel, proposal.mu, proposal.psi);
  } catch (const Error&) {
    lp = -std::numeric_limits<double>::infinity();
  }
  const double u = uniform01(rng);
  if (!std::isfinite(lp) || !std::isfinite(proposal.log_q)) return false;
  const double log_ratio = (lp - proposal.log_q) - (state.log_posterior - state.log_q);
  if (!(std::log(u) < std::min(0.0, log_ratio))) return false;
  state.mu = proposal.mu;
  state.psi = proposal.psi;
  state.log_posterior = lp;
  state.log_q = proposal.log_q;
  return true;
}

namespace {

void fill_ess(Draws& d) {
  d.ess.clear();
  for (int k = 0; k < d.coordinate_count(); ++k) {
    d.ess.push_back(effective_sample_size(d.coordinate(k)));
  }
}

}  // namespace

Draws run_chain(const SamplerConfig& config, const PosteriorKernel& kernel, int chain_index) {
  config.validate();
  if (config.prior_kind != kernel.prior().kind) {
    throw Error(ErrorCode::kInput, "sampler config and posterior kernel disagree on the prior");
  }
  const ProposalSampler sampler(kernel, config.variant);
  const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(chain_index));
  Rng rng(seed);

  ChainState state;
  state.mu = sampler.stats().xbar;
  state.psi = sampler.stats().s;
  state.log_posterior = log_joint_posterior(kernel, state.mu, state.psi);
  state.log_q = sampler.log_q(state.mu, state.psi);
  if (!std::isfinite(state.log_posterior) || !std::isfinite(state.log_q)) {
    throw Error(ErrorCode::kDegenerateProposal, "initial state (xbar, S) has a non-finite density");
  }

  Draws out;
  out.p = kernel.p();
  out.config = config;
  out.chain_seeds.push_back(seed);
  const std::int64_t burn = config.burn_in_count();
  const auto retained = static_cast<std::size_t>(config.retained_per_chain());
  out.mu.reserve(retained);
  out.psi.reserve(retained);
  out.accepted.reserve(retained);
  out.log_posterior.reserve(retained);

  for (std::int64_t t = 0; t < config.draws; ++t) {
    const ProposalPoint prop = sampler.draw(rng);
    const bool acc = mh_step(state, prop, kernel, rng);
    out.accepted_moves += acc ? 1 : 0;
    if (t >= burn && (t - burn) % config.thin == 0) {
      out.mu.push_back(state.mu);
      out.psi.push_back(state.psi);
      out.accepted.push_back(acc ? 1 : 0);
      out.log_posterior.push_back(state.log_posterior);
    }
  }
  out.iterations = config.draws;
  out.acceptance_rate = static_cast<double>(out.accepted_moves) / static_cast<double>(out.iterations);
  fill_ess(out);
  return out;
}

Draws merge_draws(std::vector<Draws> chains) {
  if (chains.empty()) throw Error(ErrorCode::kEmptyDraws, "no chains to merge");
  Draws out = std::move(chains.front());
  for (std::size_t c = 1; c < chains.size(); ++c) {
    Draws& d = chains[c];
    out.mu.insert(out.mu.end(), d.mu.begin(), d.mu.end());
    out.psi.insert(out.psi.end(), d.psi.begin(), d.psi.end());
    out.accepted.insert(out.accepted.end(), d.accepted.begin(), d.accepted.end());
    out.log_posterior.insert(out.log_posterior.end(), d.log_posterior.begin(), d.log_posterior.end());
    out.chain_seeds.insert(out.chain_seeds.end(), d.chain_seeds.begin(), d.chain_seeds.end());
    out.iterations += d.iterations;
    out.accepted_moves += d.accepted_moves;
    for (std::size_t k = 0; k < out.ess.size() && k < d.ess.size(); ++k) out.ess[k] += d.ess[k];
  }
  out.acceptance_rate = out.iterations > 0 ? static_cast<double>(out.accepted_moves) /
                                                 static_cast<double>(out.iterations)
                                           : 0.0;
  return out;
}

Draws run_chains(const SamplerConfig& config, const PosteriorKernel& kernel, int parallel) {
  config.validate();
  const int chains = config.chains;
  std::vector<Draws> results(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  const int workers = std::clamp(parallel, 1, chains);

  auto work = [&](int worker) {
    for (int c = worker; c < chains; c += workers) {
      try {
        results[static_cast<std::size_t>(c)] = run_chain(config, kernel, c);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return merge_draws(std::move(results));
}

}  // namespace ellipmeta
