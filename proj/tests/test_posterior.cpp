#include <doctest.h>

#include <cmath>

#include "ellipmeta/error.hpp"
#include "ellipmeta/posterior.hpp"

using namespace ellipmeta;

namespace {

Dataset make_data(const Matrix& x, const std::vector<SymMatrix>& u,
                  Dataset::WithinCheck check = Dataset::WithinCheck::kPositiveDefinite) {
  std::vector<std::string> labels;
  for (int i = 0; i < x.cols(); ++i) labels.push_back("s" + std::to_string(i + 1));
  return Dataset(labels, x, u, check);
}

Dataset scalar_data(std::vector<double> x, std::vector<double> u) {
  Matrix m(1, static_cast<int>(x.size()));
  std::vector<SymMatrix> w;
  for (std::size_t i = 0; i < x.size(); ++i) {
    m(0, static_cast<int>(i)) = x[i];
    w.push_back(SymMatrix::identity(1) * u[i]);
  }
  return make_data(m, w, Dataset::WithinCheck::kPositiveSemidefinite);
}

Dataset random_dataset(int p, int n, Rng& rng) {
  Matrix x(p, n);
  std::vector<SymMatrix> u;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < p; ++k) x(k, i) = 2.0 * std_normal(rng);
    u.push_back(random_spd(p, 0.2, 2.0, rng));
  }
  return make_data(x, u);
}

Vector vec_of(std::initializer_list<double> v) {
  Vector out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

PosteriorKernel kernel_for(const Dataset& data, PriorKind kind, const DensityGenerator& gen) {
  return PosteriorKernel(data, make_prior_spec(kind, gen, data.p(), data.n()));
}

}  // namespace

TEST_CASE("weighted_mean") {
  Rng rng = make_rng(41);
  Matrix x(2, 5);
  for (int i = 0; i < 5; ++i) x.col(i) = vec_of({std_normal(rng), std_normal(rng)});
  const SymMatrix v = random_spd(2, 0.5, 2.0, rng);
  const Dataset homo = make_data(x, std::vector<SymMatrix>(5, v));
  const Vector xbar = x.rowwise().mean();
  for (int k = 0; k < 3; ++k)
    CHECK((weighted_mean(random_spd(2, 0.0, 3.0, rng), homo) - xbar).norm() < 1e-12);

  const Dataset one = make_data(x.leftCols(1), {v});
  CHECK((weighted_mean(SymMatrix::identity(2), one) - x.col(0)).norm() < 1e-12);

  const Dataset two = scalar_data({0.0, 4.0}, {1.0, 3.0});
  CHECK(weighted_mean(SymMatrix::zero(1), two)(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("residual_quadform") {
  Matrix x(2, 4);
  for (int i = 0; i < 4; ++i) x.col(i) = vec_of({1.5, -0.5});
  Rng rng = make_rng(42);
  std::vector<SymMatrix> u;
  for (int i = 0; i < 4; ++i) u.push_back(random_spd(2, 0.5, 2.0, rng));
  CHECK(std::abs(residual_quadform(SymMatrix::identity(2), make_data(x, u))) < 1e-12);

  CHECK(residual_quadform(SymMatrix::zero(1), scalar_data({0.0, 2.0}, {1.0, 1.0})) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("quadratic form decomposes into residual and weighted distance") {
  Rng rng = make_rng(43);
  for (int rep = 0; rep < 30; ++rep) {
    const int p = 1 + rep % 3, n = p + 2;
    const Dataset data = random_dataset(p, n, rng);
    const SymMatrix psi = random_spd(p, 0.0, 3.0, rng);
    const ShiftedCovariances sc = shift_covariances(psi, data.within());
    Vector mu(p);
    for (int k = 0; k < p; ++k) mu(k) = 3.0 * std_normal(rng);
    const Vector diff = mu - weighted_mean(sc, data);
    const double want = residual_quadform(sc, data) + diff.dot(sc.precision_sum * diff);
    CHECK(full_quadform(sc, data, mu) == doctest::Approx(want).epsilon(1e-10));
    CHECK(residual_quadform(sc, data) >= 0.0);
  }
}

TEST_CASE("log_joint_posterior conditional structure") {
  Rng rng = make_rng(44);
  const Dataset data = random_dataset(2, 6, rng);
  const auto normal = kernel_for(data, PriorKind::kJeffreys, DensityGenerator::normal());
  const SymMatrix psi = random_spd(2, 0.1, 2.0, rng);
  const ShiftedCovariances sc = shift_covariances(psi, data.within());
  const Vector xt = weighted_mean(sc, data);
  for (int k = 0; k < 5; ++k) {
    const Vector mu = xt + vec_of({std_normal(rng), std_normal(rng)});
    const Vector d = mu - xt;
    CHECK(log_joint_posterior(normal, mu, psi) - log_joint_posterior(normal, xt, psi) ==
          doctest::Approx(-0.5 * d.dot(sc.precision_sum * d)).epsilon(1e-10));
  }

  const auto t3 = kernel_for(data, PriorKind::kReference, DensityGenerator::student_t(3.0));
  for (const auto* kernel : {&normal, &t3}) {
    const ConditionalLaw law = conditional_mu_params(*kernel, psi);
    std::vector<double> offsets;
    for (int k = 0; k < 8; ++k) {
      const Vector mu = xt + 2.0 * vec_of({std_normal(rng), std_normal(rng)});
      offsets.push_back(log_joint_posterior(*kernel, mu, psi) - log_marginal_psi(*kernel, psi) -
                        law.log_density(mu));
    }
    for (double o : offsets) CHECK(o == doctest::Approx(offsets[0]).epsilon(1e-10));
  }
}

TEST_CASE("log_joint_posterior ignores study order") {
  Rng rng = make_rng(45);
  const Dataset data = random_dataset(2, 5, rng);
  const Dataset perm = data.permuted({3, 0, 4, 1, 2});
  const auto gen = DensityGenerator::student_t(4.0);
  const auto a = kernel_for(data, PriorKind::kReference, gen);
  const auto b = kernel_for(perm, PriorKind::kReference, gen);
  const SymMatrix psi = random_spd(2, 0.1, 2.0, rng);
  const Vector mu = vec_of({0.3, -0.2});
  CHECK(log_joint_posterior(a, mu, psi) == doctest::Approx(log_joint_posterior(b, mu, psi)).epsilon(1e-13));
}

TEST_CASE("conditional_mu_params") {
  const int p = 2, n = 10;
  Matrix x = Matrix::Zero(p, n);
  const Dataset flat = make_data(x, std::vector<SymMatrix>(n, SymMatrix::identity(p)));
  const auto normal = kernel_for(flat, PriorKind::kReference, DensityGenerator::normal());
  const ConditionalLaw ln = conditional_mu_params(normal, SymMatrix::zero(p));
  CHECK(ln.family == ConditionalLaw::Family::kNormal);
  CHECK((ln.dispersion.matrix() - Matrix::Identity(p, p) / n).norm() < 1e-14);

  const double d = 3.0;
  const auto t3 = kernel_for(flat, PriorKind::kReference, DensityGenerator::student_t(d));
  const ConditionalLaw lt = conditional_mu_params(t3, SymMatrix::zero(p));
  CHECK(lt.family == ConditionalLaw::Family::kStudentT);
  CHECK(lt.dof == 21.0);
  CHECK((lt.dispersion.matrix() - d / 21.0 * Matrix::Identity(p, p) / n).norm() < 1e-14);

  const auto custom = DensityGenerator::custom(
      "normal-copy", [](double u) { return -0.5 * u; }, [](double) { return -0.5; });
  const auto ck = kernel_for(flat, PriorKind::kReference, custom);
  CHECK_THROWS_AS(conditional_mu_params(ck, SymMatrix::zero(p)), Error);
}

TEST_CASE("closed-form marginal of Psi matches the radial quadrature") {
  Rng rng = make_rng(46);
  for (int rep = 0; rep < 12; ++rep) {
    const int p = 1 + rep % 3, n = p + 3;
    const Dataset data = random_dataset(p, n, rng);
    for (double d : {0.0, 3.0}) {
      const DensityGenerator gen = d == 0.0 ? DensityGenerator::normal() : DensityGenerator::student_t(d);
      const auto kernel = kernel_for(data, rep % 2 ? PriorKind::kJeffreys : PriorKind::kReference, gen);
      const SymMatrix psi = random_spd(p, 0.01, 3.0, rng);
      const double closed = log_marginal_psi(kernel, psi);
      const double quad = log_marginal_psi_quadrature(kernel, psi);
      CHECK(closed == doctest::Approx(quad).epsilon(1e-8));
    }
  }
}

TEST_CASE("marginal ratio equals the ratio of mu integrals for p = 1") {
  const Dataset data = scalar_data({-1.0, 0.4, 2.2, 0.9}, {0.5, 1.0, 0.8, 0.3});
  for (double d : {0.0, 3.0}) {
    const DensityGenerator gen = d == 0.0 ? DensityGenerator::normal() : DensityGenerator::student_t(d);
    const auto kernel = kernel_for(data, PriorKind::kJeffreys, gen);
    auto log_integral = [&](double psi) {
      const SymMatrix s = SymMatrix::identity(1) * psi;
      const double ref = log_joint_posterior(kernel, weighted_mean(s, data), s);
      const int m = 200000;
      const double lo = -200.0, hi = 200.0, h = (hi - lo) / m;
      double total = 0.0;
      for (int i = 0; i <= m; ++i) {
        const double w = (i == 0 || i == m) ? 0.5 : 1.0;
        total += w * std::exp(log_joint_posterior(kernel, vec_of({lo + i * h}), s) - ref);
      }
      return ref + std::log(total * h);
    };
    const double a = 0.3, b = 2.5;
    CHECK(log_marginal_psi(kernel, SymMatrix::identity(1) * a) -
              log_marginal_psi(kernel, SymMatrix::identity(1) * b) ==
          doctest::Approx(log_integral(a) - log_integral(b)).epsilon(1e-8));
  }
}

TEST_CASE("c_factor") {
  const int p = 2, n = 10;
  Matrix x = Matrix::Zero(p, n);
  const std::vector<SymMatrix> u(n, SymMatrix::identity(p));
  const Dataset flat = make_data(x, u);
  CHECK(c_factor(kernel_for(flat, PriorKind::kReference, DensityGenerator::normal()), SymMatrix::zero(p)) == 1.0);

  const auto t3 = kernel_for(flat, PriorKind::kReference, DensityGenerator::student_t(3.0));
  CHECK(c_factor(t3, SymMatrix::zero(p)) == doctest::Approx(3.0 / 19.0).epsilon(1e-14));

  x(0, 0) = std::sqrt(8.0);
  x(0, 1) = -std::sqrt(8.0);
  const Dataset spread = make_data(x, u);
  CHECK(residual_quadform(SymMatrix::zero(p), spread) == doctest::Approx(16.0).epsilon(1e-14));
  const auto t3s = kernel_for(spread, PriorKind::kReference, DensityGenerator::student_t(3.0));
  CHECK(c_factor(t3s, SymMatrix::zero(p)) == doctest::Approx(1.0).epsilon(1e-14));

  const Dataset single = scalar_data({0.5}, {1.0});
  const auto t1 = kernel_for(single, PriorKind::kJeffreys, DensityGenerator::student_t(1.0));
  CHECK_THROWS_AS(c_factor(t1, SymMatrix::identity(1)), Error);
}

TEST_CASE("posterior_moments_mu on a degenerate chain") {
  Rng rng = make_rng(47);
  const Dataset data = random_dataset(2, 5, rng);
  const SymMatrix psi0 = random_spd(2, 0.1, 2.0, rng);
  for (double d : {0.0, 3.0}) {
    const DensityGenerator gen = d == 0.0 ? DensityGenerator::normal() : DensityGenerator::student_t(d);
    const auto kernel = kernel_for(data, PriorKind::kReference, gen);
    Draws draws;
    draws.p = 2;
    for (int i = 0; i < 50; ++i) {
      draws.mu.push_back(vec_of({std_normal(rng), std_normal(rng)}));
      draws.psi.push_back(psi0);
      draws.accepted.push_back(1);
      draws.log_posterior.push_back(0.0);
    }
    const MuMoments m = posterior_moments_mu(draws, kernel);
    const ShiftedCovariances sc = shift_covariances(psi0, data.within());
    CHECK((m.rao_blackwell_mean - weighted_mean(sc, data)).norm() < 1e-14);
    const Matrix want = c_factor(kernel, psi0) * sc.precision_sum.inverse();
    CHECK((m.rao_blackwell_cov.matrix() - want).norm() < 1e-12 * want.norm());
  }

  const auto kernel = kernel_for(data, PriorKind::kReference, DensityGenerator::normal());
  CHECK_THROWS_AS(posterior_moments_mu(Draws{}, kernel), Error);
}

TEST_CASE("weighted_mean is equivariant") {
  Rng rng = make_rng(48);
  const Dataset data = random_dataset(3, 5, rng);
  const SymMatrix psi = random_spd(3, 0.1, 2.0, rng);
  const Vector base = weighted_mean(psi, data);

  const Vector c = vec_of({1.0, -2.0, 0.5});
  const Matrix shifted = data.effects().colwise() + c;
  CHECK((weighted_mean(psi, make_data(shifted, data.within())) - (base + c)).norm() < 1e-12);

  const double s = 1.7;
  std::vector<SymMatrix> scaled_u;
  for (const auto& ui : data.within()) scaled_u.push_back(ui * (s * s));
  const Dataset scaled = make_data(data.effects() * s, scaled_u);
  CHECK((weighted_mean(psi * (s * s), scaled) - s * base).norm() < 1e-12);
}

TEST_CASE("PosteriorKernel checks its inputs") {
  Rng rng = make_rng(49);
  const Dataset data = random_dataset(2, 5, rng);
  CHECK_THROWS_AS(PosteriorKernel(data, make_prior_spec(PriorKind::kReference, DensityGenerator::normal(), 2, 6)),
                  Error);
  const Dataset two = random_dataset(2, 2, rng);
  try {
    PosteriorKernel(two, make_prior_spec(PriorKind::kReference, DensityGenerator::normal(), 2, 2));
    FAIL("gate should reject");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGateRejection);
    CHECK(std::string(e.what()).find("n ≥ p+1 required") != std::string::npos);
  }
}

TEST_CASE("log_likelihood matches a direct normal evaluation") {
  Rng rng = make_rng(50);
  const Dataset data = random_dataset(2, 3, rng);
  const SymMatrix psi = random_spd(2, 0.1, 2.0, rng);
  const Vector mu = vec_of({0.2, 0.1});
  double want = 0.0;
  for (int i = 0; i < data.n(); ++i)
    want += log_density_mvn(data.effect(i), mu, spd_from_sym(psi + data.within(i)));
  CHECK(log_likelihood(data, DensityGenerator::normal(), mu, psi) == doctest::Approx(want).epsilon(1e-12));
}
