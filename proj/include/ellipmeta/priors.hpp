#pragma once

// Fisher information blocks of the elliptical random effects model and the
// two objective priors built from them:
//   reference prior   pi_R(Psi) ~ det(F22)^{1/2}
//   Jeffreys prior    pi_J(Psi) ~ det(F11)^{1/2} det(F22)^{1/2}
// Both are evaluated in log space and left unnormalized.

#include <cstdint>
#include <string>
#include <vector>

#include "ellipmeta/dataset.hpp"
#include "ellipmeta/elliptical.hpp"

namespace ellipmeta {

enum class PriorKind { kReference, kJeffreys };

const char* to_string(PriorKind kind);
PriorKind parse_prior_kind(const std::string& s);

/// Hypotheses under which the posterior is known to be proper.
struct GeneratorHypotheses {
  bool non_increasing = false;  // log f non-increasing on the test grid
  bool j2_condition = false;    // J2 / (2pn + p^2 n^2) - 1/4 <= 0
  double j2_excess = 0.0;
  double j2_excess_se = 0.0;
};

/// Number of points of the log-spaced monotonicity grid on [1e-8, 1e8].
inline constexpr int kMonotoneGridPoints = 1024;

GeneratorHypotheses check_generator_hypotheses(const DensityGenerator& gen, const JConstants& j);

struct PriorSpec {
  PriorKind kind = PriorKind::kReference;
  DensityGenerator generator;
  JConstants j;
  Matrix duplication;  // G_p, cached
  GeneratorHypotheses hypotheses;

  int p() const noexcept { return j.p; }
  int n() const noexcept { return j.n; }
};

/// Default seed for Monte Carlo J constants, so priors are reproducible.
inline constexpr std::uint64_t kDefaultJSeed = 0x4a2b1e5dULL;

PriorSpec make_prior_spec(PriorKind kind, DensityGenerator gen, int p, int n,
                          std::uint64_t j_seed = kDefaultJSeed,
                          std::int64_t j_samples = kDefaultJSamples);

/// F11 = (4 J1 / (p n)) sum_i (Psi + U_i)^{-1}.
SymMatrix fisher_f11(const ShiftedCovariances& sc, const JConstants& j);
SymMatrix fisher_f11(const SymMatrix& psi, const std::vector<SymMatrix>& u, const JConstants& j);

/// F22 = G^T [ (J2/(2pn+p^2n^2) - 1/4) vec(W) vec(W)^T
///             + 2 J2/(2pn+p^2n^2) sum_i W_i (x) W_i ] G,
/// with W_i = (Psi + U_i)^{-1} and W = sum_i W_i.
SymMatrix fisher_f22(const ShiftedCovariances& sc, const JConstants& j, const Matrix& duplication);
SymMatrix fisher_f22(const SymMatrix& psi, const std::vector<SymMatrix>& u, const JConstants& j);

/// (1/2) logdet F22. Throws kPriorEvaluation when F22 is not positive definite.
double log_reference_prior(const PriorSpec& spec, const ShiftedCovariances& sc);
double log_reference_prior(const PriorSpec& spec, const SymMatrix& psi,
                           const std::vector<SymMatrix>& u);
/// (1/2) logdet F11 + (1/2) logdet F22.
double log_jeffreys_prior(const PriorSpec& spec, const ShiftedCovariances& sc);
double log_jeffreys_prior(const PriorSpec& spec, const SymMatrix& psi,
                          const std::vector<SymMatrix>& u);
/// Dispatches on spec.kind.
double log_prior(const PriorSpec& spec, const ShiftedCovariances& sc);

struct GateResult {
  bool ok = true;
  std::vector<std::string> reasons;
  std::string message() const;
};

/// Propriety conditions: Jeffreys needs n >= p, reference n >= p + 1, and the
/// generator must satisfy both hypotheses. Never throws for a failed check;
/// the caller decides what to do with the rejection.
GateResult propriety_gate(PriorKind kind, int p, int n, const DensityGenerator& gen,
                          const JConstants& j);
/// Same, computing J with the default seed.
GateResult propriety_gate(PriorKind kind, int p, int n, const DensityGenerator& gen);

}  // namespace ellipmeta
