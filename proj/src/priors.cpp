#include "ellipmeta/priors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ellipmeta/error.hpp"

namespace ellipmeta {

const char* to_string(PriorKind kind) {
  return kind == PriorKind::kReference ? "reference" : "jeffreys";
}

PriorKind parse_prior_kind(const std::string& s) {
  if (s == "reference") return PriorKind::kReference;
  if (s == "jeffreys") return PriorKind::kJeffreys;
  throw Error(ErrorCode::kInput, "unknown prior '" + s + "' (expected reference|jeffreys)");
}

GeneratorHypotheses check_generator_hypotheses(const DensityGenerator& gen, const JConstants& j) {
  GeneratorHypotheses h;
  const int dim = j.p * j.n;
  const double lo = std::log(1e-8);
  const double hi = std::log(1e8);
  h.non_increasing = true;
  double prev = gen.log_f(0.0, dim);
  for (int k = 0; k < kMonotoneGridPoints; ++k) {
    const double u = std::exp(lo + (hi - lo) * k / (kMonotoneGridPoints - 1));
    const double v = gen.log_f(u, dim);
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity() ||
        v > prev + 1e-12 * std::max(1.0, std::abs(prev))) {
      h.non_increasing = false;
      break;
    }
    prev = v;
  }
  const double pn = static_cast<double>(dim);
  h.j2_excess = j.j2_excess();
  h.j2_excess_se = j.j2_se / (2.0 * pn + pn * pn);
  // A Monte Carlo estimate only fails when the excess is significant.
  h.j2_condition = h.j2_excess - 3.0 * h.j2_excess_se <= 1e-12;
  return h;
}

PriorSpec make_prior_spec(PriorKind kind, DensityGenerator gen, int p, int n,
                          std::uint64_t j_seed, std::int64_t j_samples) {
  PriorSpec spec;
  spec.kind = kind;
  spec.j = j_constants(gen, p, n, j_seed, j_samples);
  spec.hypotheses = check_generator_hypotheses(gen, spec.j);
  spec.generator = std::move(gen);
  spec.duplication = duplication_matrix(p);
  return spec;
}

SymMatrix fisher_f11(const ShiftedCovariances& sc, const JConstants& j) {
  const double pn = static_cast<double>(j.p) * j.n;
  return SymMatrix(sc.precision_sum * (4.0 * j.j1 / pn));
}

SymMatrix fisher_f11(const SymMatrix& psi, const std::vector<SymMatrix>& u, const JConstants& j) {
  return fisher_f11(shift_covariances(psi, u), j);
}

SymMatrix fisher_f22(const ShiftedCovariances& sc, const JConstants& j, const Matrix& duplication) {
  const int p = static_cast<int>(sc.precision_sum.rows());
  const double pn = static_cast<double>(j.p) * j.n;
  const double denom = 2.0 * pn + pn * pn;
  const double rank_one = j.j2 / denom - 0.25;
  const double kron_coef = 2.0 * j.j2 / denom;

  Matrix kron_sum = Matrix::Zero(p * p, p * p);
  for (const auto& w : sc.precision) kron_sum += kron(w, w);
  const Vector vw = vec(sc.precision_sum);
  const Matrix inner = rank_one * (vw * vw.transpose()) + kron_coef * kron_sum;
  return SymMatrix(duplication.transpose() * inner * duplication);
}

SymMatrix fisher_f22(const SymMatrix& psi, const std::vector<SymMatrix>& u, const JConstants& j) {
  return fisher_f22(shift_covariances(psi, u), j, duplication_matrix(psi.dim()));
}

namespace {

double half_logdet(const SymMatrix& m, const char* what) {
  try {
    return 0.5 * spd_from_sym(m).logdet();
  } catch (const NotPositiveDefiniteError& e) {
    throw Error(ErrorCode::kPriorEvaluation, std::string(what) + " is not positive definite: " + e.what());
  }
}

}  // namespace

double log_reference_prior(const PriorSpec& spec, const ShiftedCovariances& sc) {
  return half_logdet(fisher_f22(sc, spec.j, spec.duplication), "F22");
}

double log_reference_prior(const PriorSpec& spec, const SymMatrix& psi,
                           const std::vector<SymMatrix>& u) {
  return log_reference_prior(spec, shift_covariances(psi, u));
}

double log_jeffreys_prior(const PriorSpec& spec, const ShiftedCovariances& sc) {
  return half_logdet(fisher_f11(sc, spec.j), "F11") + log_reference_prior(spec, sc);
}

double log_jeffreys_prior(const PriorSpec& spec, const SymMatrix& psi,
                          const std::vector<SymMatrix>& u) {
  return log_jeffreys_prior(spec, shift_covariances(psi, u));
}

double log_prior(const PriorSpec& spec, const ShiftedCovariances& sc) {
  return spec.kind == PriorKind::kReference ? log_reference_prior(spec, sc)
                                            : log_jeffreys_prior(spec, sc);
}

std::string GateResult::message() const {
  std::string out;
  for (const auto& r : reasons) {
    if (!out.empty()) out += "; ";
    out += r;
  }
  return out;
}

GateResult propriety_gate(PriorKind kind, int p, int n, const DensityGenerator& gen,
                          const JConstants& j) {
  GateResult g;
  if (kind == PriorKind::kReference && n < p + 1) g.reasons.emplace_back("n ≥ p+1 required");
  if (kind == PriorKind::kJeffreys && n < p) g.reasons.emplace_back("n ≥ p required");
  if (j.p != p || j.n != n) {
    g.reasons.emplace_back("J constants were computed for a different (p, n)");
  } else {
    const GeneratorHypotheses h = check_generator_hypotheses(gen, j);
    if (!h.non_increasing) {
      g.reasons.emplace_back("density generator is not non-increasing on the test grid");
    }
    if (!h.j2_condition) {
      std::ostringstream os;
      os << "J2/(2pn+p^2n^2) - 1/4 = " << h.j2_excess << " > 0";
      g.reasons.push_back(os.str());
    }
  }
  g.ok = g.reasons.empty();
  return g;
}

GateResult propriety_gate(PriorKind kind, int p, int n, const DensityGenerator& gen) {
  if (p < 1 || n < 1) {
    GateResult g;
    g.ok = false;
    g.reasons.emplace_back("p ≥ 1 and n ≥ 1 required");
    return g;
  }
  return propriety_gate(kind, p, n, gen, j_constants(gen, p, n, kDefaultJSeed));
}

}  // namespace ellipmeta
