#include "ellipmeta/posterior.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ellipmeta/error.hpp"

namespace ellipmeta {

PosteriorKernel::PosteriorKernel(Dataset data, PriorSpec prior)
    : data_(std::move(data)), prior_(std::move(prior)) {
  if (prior_.p() != data_.p() || prior_.n() != data_.n()) {
    std::ostringstream os;
    os << "prior built for (p, n) = (" << prior_.p() << ", " << prior_.n()
       << ") but the dataset has (" << data_.p() << ", " << data_.n() << ")";
    throw Error(ErrorCode::kDimensionMismatch, os.str());
  }
  const GateResult gate =
      propriety_gate(prior_.kind, data_.p(), data_.n(), prior_.generator, prior_.j);
  if (!gate.ok) throw Error(ErrorCode::kGateRejection, gate.message());
}

namespace {

SpdMatrix precision_sum(const ShiftedCovariances& sc) {
  try {
    return spd_from_sym(SymMatrix(sc.precision_sum));
  } catch (const NotPositiveDefiniteError& e) {
    throw NotPositiveDefiniteError(e.pivot(), e.pivot_value(), "sum of (Psi + U_i)^{-1}");
  }
}

Vector weighted_mean(const ShiftedCovariances& sc, const SpdMatrix& w, const Dataset& data) {
  Vector acc = Vector::Zero(data.p());
  for (int i = 0; i < data.n(); ++i) acc += sc.precision[static_cast<std::size_t>(i)] * data.effect(i);
  return w.solve(acc);
}

double radial_log_integral_normal(int p, double r) {
  return (0.5 * p - 1.0) * std::log(2.0) + std::lgamma(0.5 * p) - 0.5 * r;
}

// log int_0^inf u^{p-1} (1 + (u^2 + r)/d)^{-e} du, without the constant K.
double radial_log_integral_t(int p, double d, double e, double r) {
  const double c = d + r;
  return -e * std::log1p(r / d) + 0.5 * p * std::log(c) - std::log(2.0) +
         std::log(boost::math::beta(0.5 * p, e - 0.5 * p));
}

double marginal_prefix(const PosteriorKernel& kernel, const ShiftedCovariances& sc,
                       const SpdMatrix& w) {
  return log_prior(kernel.prior(), sc) - 0.5 * w.logdet() - 0.5 * sc.sum_logdet;
}

}  // namespace

Vector weighted_mean(const ShiftedCovariances& sc, const Dataset& data) {
  return weighted_mean(sc, precision_sum(sc), data);
}

Vector weighted_mean(const SymMatrix& psi, const Dataset& data) {
  return weighted_mean(shift_covariances(psi, data.within()), data);
}

double full_quadform(const ShiftedCovariances& sc, const Dataset& data, const Vector& mu) {
  double q = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    q += sc.shifted[static_cast<std::size_t>(i)].inv_quad(data.effect(i) - mu);
  }
  return q;
}

double residual_quadform(const ShiftedCovariances& sc, const Dataset& data) {
  return std::max(0.0, full_quadform(sc, data, weighted_mean(sc, data)));
}

double residual_quadform(const SymMatrix& psi, const Dataset& data) {
  return residual_quadform(shift_covariances(psi, data.within()), data);
}

double log_likelihood(const Dataset& data, const DensityGenerator& gen, const Vector& mu,
                      const SymMatrix& psi) {
  const ShiftedCovariances sc = shift_covariances(psi, data.within());
  return -0.5 * sc.sum_logdet +
         log_generator(gen, full_quadform(sc, data, mu), data.p(), data.n());
}

double log_joint_posterior(const PosteriorKernel& kernel, const Vector& mu, const SymMatrix& psi) {
  const Dataset& data = kernel.data();
  const ShiftedCovariances sc = shift_covariances(psi, data.within());
  return log_prior(kernel.prior(), sc) - 0.5 * sc.sum_logdet +
         log_generator(kernel.generator(), full_quadform(sc, data, mu), data.p(), data.n());
}

double ConditionalLaw::log_density(const Vector& mu) const {
  const SpdMatrix s = spd_from_sym(dispersion);
  return family == Family::kNormal ? log_density_mvn(mu, location, s)
                                   : log_density_mvt(mu, dof, location, s);
}

ConditionalLaw conditional_mu_params(const PosteriorKernel& kernel, const SymMatrix& psi) {
  const DensityGenerator& gen = kernel.generator();
  if (gen.kind() == GeneratorKind::kCustom) {
    throw Error(ErrorCode::kUnsupportedSampler,
                "conditional law of mu is only available for the normal and t generators");
  }
  const Dataset& data = kernel.data();
  const ShiftedCovariances sc = shift_covariances(psi, data.within());
  const SpdMatrix w = precision_sum(sc);
  ConditionalLaw law;
  law.location = weighted_mean(sc, w, data);
  const SymMatrix w_inv(w.inverse());
  if (gen.kind() == GeneratorKind::kNormal) {
    law.family = ConditionalLaw::Family::kNormal;
    law.dispersion = w_inv;
    return law;
  }
  const double d = gen.dof();
  const int p = data.p();
  const double dof = static_cast<double>(p) * data.n() + d - p;
  const double r = std::max(0.0, full_quadform(sc, data, law.location));
  law.family = ConditionalLaw::Family::kStudentT;
  law.dof = dof;
  law.dispersion = w_inv * ((d + r) / dof);
  return law;
}

double log_marginal_psi(const PosteriorKernel& kernel, const SymMatrix& psi) {
  const DensityGenerator& gen = kernel.generator();
  if (gen.kind() == GeneratorKind::kCustom) return log_marginal_psi_quadrature(kernel, psi);
  const Dataset& data = kernel.data();
  const int p = data.p();
  const int n = data.n();
  const ShiftedCovariances sc = shift_covariances(psi, data.within());
  const SpdMatrix w = precision_sum(sc);
  const double r = std::max(0.0, full_quadform(sc, data, weighted_mean(sc, w, data)));
  const double log_k = log_generator(gen, 0.0, p, n);
  double radial;
  if (gen.kind() == GeneratorKind::kNormal) {
    radial = radial_log_integral_normal(p, r);
  } else {
    const double e = 0.5 * (static_cast<double>(p) * n + gen.dof());
    radial = radial_log_integral_t(p, gen.dof(), e, r);
  }
  return marginal_prefix(kernel, sc, w) + log_k + radial;
}

double log_marginal_psi_quadrature(const PosteriorKernel& kernel, const SymMatrix& psi) {
  const Dataset& data = kernel.data();
  const DensityGenerator& gen = kernel.generator();
  const int p = data.p();
  const int n = data.n();
  const ShiftedCovariances sc = shift_covariances(psi, data.within());
  const SpdMatrix w = precision_sum(sc);
  const double r = std::max(0.0, full_quadform(sc, data, weighted_mean(sc, w, data)));
  const double log_f_r = log_generator(gen, r, p, n);
  if (!std::isfinite(log_f_r)) {
    throw Error(ErrorCode::kMarginalEvaluation, "log f is not finite at the residual quadratic form");
  }

  auto integrand = [&](double theta) {
    const double t = std::tan(theta);
    if (!std::isfinite(t)) return 0.0;
    const double sec2 = 1.0 + t * t;
    const double lf = log_generator(gen, t * t + r, p, n) - log_f_r;
    if (lf == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::pow(t, p - 1) * std::exp(lf) * sec2;
  };
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, 0.5 * std::numbers::pi, 20, kMarginalQuadratureTolerance, &error, &l1);
  if (!std::isfinite(value) || value <= 0.0 ||
      error > 10.0 * kMarginalQuadratureTolerance * std::abs(value)) {
    std::ostringstream os;
    os << "radial quadrature did not converge: value " << value << ", error estimate " << error
       << ", residual " << r;
    throw Error(ErrorCode::kMarginalEvaluation, os.str());
  }
  return marginal_prefix(kernel, sc, w) + log_f_r + std::log(value);
}

double c_factor(const PosteriorKernel& kernel, const SymMatrix& psi) {
  const DensityGenerator& gen = kernel.generator();
  switch (gen.kind()) {
    case GeneratorKind::kNormal:
      return 1.0;
    case GeneratorKind::kStudentT: {
      const int p = kernel.p();
      const double denom = static_cast<double>(p) * kernel.n() + gen.dof() - p - 2.0;
      if (denom <= 0.0) {
        throw Error(ErrorCode::kUndefinedMoment,
                    "posterior covariance of mu is undefined: pn + d - p <= 2");
      }
      return (gen.dof() + residual_quadform(psi, kernel.data())) / denom;
    }
    case GeneratorKind::kCustom:
      break;
  }
  throw Error(ErrorCode::kUnsupportedSampler, "C(Psi) is only available for the normal and t generators");
}

MuMoments posterior_moments_mu(const Draws& draws, const PosteriorKernel& kernel) {
  if (draws.empty()) throw Error(ErrorCode::kEmptyDraws, "no draws to summarize");
  const int p = kernel.p();
  const double count = static_cast<double>(draws.size());
  Vector mean_tilde = Vector::Zero(p);
  Matrix second_tilde = Matrix::Zero(p, p);
  Matrix mean_cond = Matrix::Zero(p, p);
  Vector raw_mean = Vector::Zero(p);
  Matrix raw_second = Matrix::Zero(p, p);
  for (std::size_t b = 0; b < draws.size(); ++b) {
    const ShiftedCovariances sc = shift_covariances(draws.psi[b], kernel.data().within());
    const SpdMatrix w = precision_sum(sc);
    const Vector xt = weighted_mean(sc, w, kernel.data());
    mean_tilde += xt;
    second_tilde += xt * xt.transpose();
    mean_cond += c_factor(kernel, draws.psi[b]) * w.inverse();
    raw_mean += draws.mu[b];
    raw_second += draws.mu[b] * draws.mu[b].transpose();
  }
  MuMoments m;
  mean_tilde /= count;
  raw_mean /= count;
  m.rao_blackwell_mean = mean_tilde;
  m.rao_blackwell_cov =
      SymMatrix(mean_cond / count + second_tilde / count - mean_tilde * mean_tilde.transpose());
  m.raw_mean = raw_mean;
  m.raw_cov = SymMatrix(raw_second / count - raw_mean * raw_mean.transpose());
  return m;
}

}  // namespace ellipmeta
