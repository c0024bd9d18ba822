#include "ellipmeta/elliptical.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ellipmeta/error.hpp"

namespace ellipmeta {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

void require_nonnegative(double u) {
  if (!(u >= 0.0)) {
    std::ostringstream os;
    os << "density generator evaluated at u = " << u << " < 0";
    throw Error(ErrorCode::kDomain, os.str());
  }
}

void require_sampler(const DensityGenerator& gen, const char* what) {
  if (!gen.has_sampler()) {
    throw Error(ErrorCode::kUnsupportedSampler,
                std::string(what) + ": no sampler for custom generator '" + gen.name() + "'");
  }
}

// Mean and standard error of a sample accumulated online.
struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  std::int64_t count = 0;
  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  double se() const {
    if (count < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  }
};

}  // namespace

DensityGenerator DensityGenerator::normal() { return DensityGenerator(); }

DensityGenerator DensityGenerator::student_t(double dof) {
  if (!(dof > 0.0) || !std::isfinite(dof)) {
    throw Error(ErrorCode::kDomain, "student-t generator requires dof > 0");
  }
  DensityGenerator g;
  g.kind_ = GeneratorKind::kStudentT;
  g.dof_ = dof;
  std::ostringstream os;
  os << "t(" << dof << ")";
  g.name_ = os.str();
  return g;
}

DensityGenerator DensityGenerator::custom(std::string name, LogF log_f, Ratio ratio) {
  if (!log_f || !ratio) throw Error(ErrorCode::kDomain, "custom generator needs log f and f'/f");
  DensityGenerator g;
  g.kind_ = GeneratorKind::kCustom;
  g.name_ = std::move(name);
  g.log_f_ = std::move(log_f);
  g.ratio_ = std::move(ratio);
  return g;
}

double DensityGenerator::log_f(double u, int dim) const {
  require_nonnegative(u);
  switch (kind_) {
    case GeneratorKind::kNormal:
      return -0.5 * dim * kLogTwoPi - 0.5 * u;
    case GeneratorKind::kStudentT: {
      const double d = dof_;
      const double log_k = -0.5 * dim * std::log(M_PI * d) + std::lgamma(0.5 * (d + dim)) -
                           std::lgamma(0.5 * d);
      return log_k - 0.5 * (dim + d) * std::log1p(u / d);
    }
    case GeneratorKind::kCustom:
      return log_f_(u);
  }
  return 0.0;
}

double DensityGenerator::ratio(double u, int dim) const {
  require_nonnegative(u);
  switch (kind_) {
    case GeneratorKind::kNormal:
      return -0.5;
    case GeneratorKind::kStudentT:
      return -0.5 * (dim + dof_) / (dof_ + u);
    case GeneratorKind::kCustom:
      return ratio_(u);
  }
  return 0.0;
}

double log_generator(const DensityGenerator& gen, double u, int p, int n) {
  return gen.log_f(u, p * n);
}

double score_ratio(const DensityGenerator& gen, double u, int p, int n) {
  return gen.ratio(u, p * n);
}

double JConstants::j2_excess() const {
  const double pn = static_cast<double>(p) * n;
  return j2 / (2.0 * pn + pn * pn) - 0.25;
}

JConstants j_constants_monte_carlo(const DensityGenerator& gen, int p, int n, std::uint64_t seed,
                                   std::int64_t samples) {
  require_sampler(gen, "j_constants_monte_carlo");
  if (p * n < 1) throw Error(ErrorCode::kInvalidDimension, "j constants require p n >= 1");
  const int dim = p * n;
  Rng rng = make_rng(seed);
  std::chi_squared_distribution<double> chi_dim(dim);
  Moments h1;
  Moments h2;
  for (std::int64_t s = 0; s < samples; ++s) {
    double r2 = chi_dim(rng);
    if (gen.kind() == GeneratorKind::kStudentT) r2 /= chi_squared(rng, gen.dof()) / gen.dof();
    const double ratio = gen.ratio(r2, dim);
    h1.add(r2 * ratio * ratio);
    h2.add(r2 * r2 * ratio * ratio);
  }
  if (!std::isfinite(h1.mean) || !std::isfinite(h2.mean)) {
    throw Error(ErrorCode::kGeneratorUnusable, "non-finite Monte Carlo J estimate");
  }
  JConstants j;
  j.j1 = h1.mean;
  j.j2 = h2.mean;
  j.j1_se = h1.se();
  j.j2_se = h2.se();
  j.j1_method = JMethod::kMonteCarlo;
  j.j2_method = JMethod::kMonteCarlo;
  j.samples = samples;
  j.seed = seed;
  j.p = p;
  j.n = n;
  return j;
}

namespace {

// Self-normalized importance sampling of R^2 with density proportional to
// t^{dim/2-1} f(t). Proposal: chi2_dim / chi2_1, which has density
// proportional to t^{dim/2-1} (1+t)^{-(dim+1)/2}.
JConstants j_constants_importance(const DensityGenerator& gen, int p, int n, std::uint64_t seed,
                                  std::int64_t samples) {
  const int dim = p * n;
  Rng rng = make_rng(seed);
  std::chi_squared_distribution<double> chi_dim(dim);
  std::chi_squared_distribution<double> chi_one(1.0);

  std::vector<double> log_w(static_cast<std::size_t>(samples));
  std::vector<double> h1(log_w.size());
  std::vector<double> h2(log_w.size());
  double max_log_w = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < log_w.size(); ++s) {
    const double t = chi_dim(rng) / chi_one(rng);
    const double lw = gen.log_f(t, dim) + 0.5 * (dim + 1) * std::log1p(t);
    const double ratio = gen.ratio(t, dim);
    log_w[s] = lw;
    h1[s] = t * ratio * ratio;
    h2[s] = t * t * ratio * ratio;
    if (std::isnan(lw) || !std::isfinite(h2[s])) {
      throw Error(ErrorCode::kGeneratorUnusable, "non-finite importance weight or J integrand");
    }
    max_log_w = std::max(max_log_w, lw);
  }
  if (!std::isfinite(max_log_w)) throw Error(ErrorCode::kGeneratorUnusable, "all weights vanish");

  double sum_w = 0.0;
  double sum_h1 = 0.0;
  double sum_h2 = 0.0;
  for (std::size_t s = 0; s < log_w.size(); ++s) {
    log_w[s] = std::exp(log_w[s] - max_log_w);
    sum_w += log_w[s];
    sum_h1 += log_w[s] * h1[s];
    sum_h2 += log_w[s] * h2[s];
  }
  JConstants j;
  j.j1 = sum_h1 / sum_w;
  j.j2 = sum_h2 / sum_w;
  // Delta-method standard errors of the ratio estimators.
  double v1 = 0.0;
  double v2 = 0.0;
  for (std::size_t s = 0; s < log_w.size(); ++s) {
    const double w = log_w[s];
    v1 += w * w * (h1[s] - j.j1) * (h1[s] - j.j1);
    v2 += w * w * (h2[s] - j.j2) * (h2[s] - j.j2);
  }
  j.j1_se = std::sqrt(v1) / sum_w;
  j.j2_se = std::sqrt(v2) / sum_w;
  if (!std::isfinite(j.j1) || !std::isfinite(j.j2) || !std::isfinite(j.j1_se) ||
      !std::isfinite(j.j2_se)) {
    throw Error(ErrorCode::kGeneratorUnusable, "non-finite Monte Carlo J estimate");
  }
  j.j1_method = JMethod::kMonteCarlo;
  j.j2_method = JMethod::kMonteCarlo;
  j.samples = samples;
  j.seed = seed;
  j.p = p;
  j.n = n;
  return j;
}

}  // namespace

JConstants j_constants(const DensityGenerator& gen, int p, int n, std::uint64_t seed,
                       std::int64_t samples) {
  if (p < 1 || n < 1) throw Error(ErrorCode::kInvalidDimension, "j constants require p n >= 1");
  const double pn = static_cast<double>(p) * n;
  switch (gen.kind()) {
    case GeneratorKind::kNormal: {
      JConstants j;
      j.j1 = pn / 4.0;
      j.j2 = (2.0 * pn + pn * pn) / 4.0;
      j.p = p;
      j.n = n;
      return j;
    }
    case GeneratorKind::kStudentT: {
      JConstants j = j_constants_monte_carlo(gen, p, n, seed, samples);
      const double d = gen.dof();
      j.j2 = pn * (pn + 2.0) * (pn + d) / (4.0 * (pn + 2.0 + d));
      j.j2_se = 0.0;
      j.j2_method = JMethod::kClosedForm;
      return j;
    }
    case GeneratorKind::kCustom:
      return j_constants_importance(gen, p, n, seed, samples);
  }
  return {};
}

Matrix sample_standard_elliptical(const DensityGenerator& gen, int p, int n, Rng& rng) {
  require_sampler(gen, "sample_standard_elliptical");
  Matrix z(p, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < p; ++i) z(i, j) = std_normal(rng);
  if (gen.kind() == GeneratorKind::kStudentT) {
    z /= std::sqrt(chi_squared(rng, gen.dof()) / gen.dof());
  }
  return z;
}

SpdMatrix sample_inverse_wishart(double nu, const SpdMatrix& a, Rng& rng) {
  const int p = a.dim();
  if (!(nu > 2.0 * p)) {
    std::ostringstream os;
    os << "inverse Wishart requires nu > 2p (nu = " << nu << ", p = " << p << ")";
    throw Error(ErrorCode::kInvalidDof, os.str());
  }
  const double m = nu - p - 1.0;
  // Bartlett factor T of Wishart(m, I); Psi = L (T T^T)^{-1} L^T with A = L L^T.
  Matrix t = Matrix::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    t(i, i) = std::sqrt(chi_squared(rng, m - i));
    for (int j = 0; j < i; ++j) t(i, j) = std_normal(rng);
  }
  // M = L T^{-T}, solved as T M^T = L^T.
  const Matrix mt = t.triangularView<Eigen::Lower>().solve(Matrix(a.cholesky().transpose()));
  const Matrix psi = mt.transpose() * mt;
  return spd_from_sym(SymMatrix(psi));
}

double giw_mixing_dof(double d, double nu, int p, int generator_dim) {
  return d + generator_dim - p * (nu - p - 1.0);
}

SpdMatrix sample_giw(const DensityGenerator& gen, double nu, const SpdMatrix& a,
                     int generator_dim, Rng& rng) {
  require_sampler(gen, "sample_giw");
  if (gen.kind() == GeneratorKind::kNormal) return sample_inverse_wishart(nu, a, rng);
  const int p = a.dim();
  const double k = giw_mixing_dof(gen.dof(), nu, p, generator_dim);
  if (!(k > 0.0)) {
    std::ostringstream os;
    os << "generalized inverse Wishart is improper: mixing dof " << k << " <= 0";
    throw Error(ErrorCode::kInvalidDof, os.str());
  }
  const double xi = chi_squared(rng, k);
  const SpdMatrix omega = sample_inverse_wishart(nu, a, rng);
  return spd_from_sym(omega.sym() * (xi / gen.dof()));
}

Vector sample_multivariate_normal(const Vector& loc, const SpdMatrix& cov, Rng& rng) {
  Vector z(loc.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = std_normal(rng);
  return loc + cov.cholesky() * z;
}

Vector sample_multivariate_t(double df, const Vector& loc, const SpdMatrix& scale, Rng& rng) {
  if (!(df > 0.0)) throw Error(ErrorCode::kInvalidDof, "multivariate t requires df > 0");
  if (loc.size() != scale.dim()) throw Error(ErrorCode::kDimensionMismatch, "multivariate t");
  Vector z(loc.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = std_normal(rng);
  const double w = std::sqrt(chi_squared(rng, df) / df);
  return loc + (scale.cholesky() * z) / w;
}

Matrix sample_model_data(const Vector& mu, const SymMatrix& psi, const std::vector<SymMatrix>& u,
                         const DensityGenerator& gen, Rng& rng) {
  require_sampler(gen, "sample_model_data");
  const int p = static_cast<int>(mu.size());
  const int n = static_cast<int>(u.size());
  if (psi.dim() != p) throw Error(ErrorCode::kDimensionMismatch, "Psi does not match mu");
  for (const auto& ui : u)
    if (ui.dim() != p) throw Error(ErrorCode::kDimensionMismatch, "U_i does not match mu");

  Matrix x(p, n);
  auto normal_vector = [&] {
    Vector z(p);
    for (int i = 0; i < p; ++i) z(i) = std_normal(rng);
    return z;
  };
  if (gen.kind() == GeneratorKind::kNormal) {
    const Matrix psi_root = psd_sqrt(psi).matrix();
    for (int i = 0; i < n; ++i) {
      const Vector lambda = psi_root * normal_vector();
      const Vector eps = psd_sqrt(u[static_cast<std::size_t>(i)]).matrix() * normal_vector();
      x.col(i) = mu + lambda + eps;
    }
    return x;
  }
  const double w = std::sqrt(chi_squared(rng, gen.dof()) / gen.dof());
  for (int i = 0; i < n; ++i) {
    const Matrix root = psd_sqrt(psi + u[static_cast<std::size_t>(i)]).matrix();
    x.col(i) = mu + root * normal_vector() / w;
  }
  return x;
}

double log_density_mvt(const Vector& x, double df, const Vector& loc, const SpdMatrix& scale) {
  const double p = static_cast<double>(x.size());
  const double q = scale.inv_quad(x - loc);
  return std::lgamma(0.5 * (df + p)) - std::lgamma(0.5 * df) - 0.5 * p * std::log(df * M_PI) -
         0.5 * scale.logdet() - 0.5 * (df + p) * std::log1p(q / df);
}

double log_density_mvn(const Vector& x, const Vector& loc, const SpdMatrix& cov) {
  const double p = static_cast<double>(x.size());
  return -0.5 * p * kLogTwoPi - 0.5 * cov.logdet() - 0.5 * cov.inv_quad(x - loc);
}

double log_density_inverse_wishart(const SpdMatrix& psi, double nu, const SpdMatrix& a) {
  const int p = psi.dim();
  const double m = nu - p - 1.0;
  return 0.5 * m * a.logdet() - 0.5 * m * p * std::log(2.0) - log_multigamma(p, 0.5 * m) -
         0.5 * nu * psi.logdet() - 0.5 * psi.inv_trace(a.matrix());
}

double log_density_giw(const SpdMatrix& psi, const DensityGenerator& gen, double nu,
                       const SpdMatrix& a, int generator_dim) {
  require_sampler(gen, "log_density_giw");
  if (gen.kind() == GeneratorKind::kNormal) return log_density_inverse_wishart(psi, nu, a);
  // Scale mixture of IW_p(nu, c A) over c = xi / d, xi ~ chi2_k.
  const int p = psi.dim();
  const double d = gen.dof();
  const double m = nu - p - 1.0;
  const double k = giw_mixing_dof(d, nu, p, generator_dim);
  const double t = psi.inv_trace(a.matrix());
  const double shape = 0.5 * (p * m + k);
  return 0.5 * m * a.logdet() - 0.5 * m * p * std::log(2.0) - log_multigamma(p, 0.5 * m) -
         0.5 * nu * psi.logdet() + 0.5 * k * std::log(0.5 * d) - std::lgamma(0.5 * k) +
         std::lgamma(shape) - shape * std::log(0.5 * (d + t));
}

}  // namespace ellipmeta
