#include <doctest.h>

#include <cmath>

#include "ellipmeta/elliptical.hpp"
#include "ellipmeta/error.hpp"

using namespace ellipmeta;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <typename F>
Moments moments(int draws, F&& f) {
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double x = f();
    s += x;
    s2 += x * x;
  }
  const double m = s / draws;
  return {m, (s2 - draws * m * m) / (draws - 1)};
}

DensityGenerator laplace_like() {
  return DensityGenerator::custom(
      "sqrt-exp", [](double u) { return -std::sqrt(u + 1.0); },
      [](double u) { return -0.5 / std::sqrt(u + 1.0); });
}

}  // namespace

TEST_CASE("log_generator constants") {
  const auto normal = DensityGenerator::normal();
  CHECK(log_generator(normal, 0.0, 1, 1) == doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-14));
  CHECK(log_generator(normal, 2.0, 2, 3) ==
        doctest::Approx(log_generator(normal, 0.0, 2, 3) - 1.0).epsilon(1e-14));

  const auto t3 = DensityGenerator::student_t(3.0);
  const double want = std::lgamma(2.0) - std::lgamma(1.5) - 0.5 * std::log(3.0 * M_PI);
  CHECK(log_generator(t3, 0.0, 1, 1) == doctest::Approx(want).epsilon(1e-14));

  CHECK_THROWS_AS(log_generator(normal, -1e-3, 1, 1), Error);
  CHECK_THROWS_AS(DensityGenerator::student_t(0.0), Error);
}

TEST_CASE("score_ratio") {
  const auto normal = DensityGenerator::normal();
  for (double u : {0.0, 0.5, 3.0, 1e6}) CHECK(score_ratio(normal, u, 2, 5) == -0.5);

  const auto t3 = DensityGenerator::student_t(3.0);
  CHECK(score_ratio(t3, 0.0, 2, 10) == doctest::Approx(-23.0 / 6.0).epsilon(1e-14));
  const double u = 4.0;
  CHECK(score_ratio(t3, u, 2, 10) == doctest::Approx(-(23.0 / 2.0) / 3.0 / (1.0 + u / 3.0)));

  for (double u2 : {0.0, 1.0, 10.0}) {
    const auto big = DensityGenerator::student_t(1e9);
    CHECK(score_ratio(big, u2, 2, 10) == doctest::Approx(-0.5).epsilon(1e-6));
  }

  CHECK_THROWS_AS(score_ratio(t3, -1.0, 1, 1), Error);
}

TEST_CASE("score_ratio matches the derivative of log_generator") {
  const auto t3 = DensityGenerator::student_t(3.0);
  const auto custom = laplace_like();
  for (double u : {0.3, 2.0, 17.0}) {
    const double h = 1e-5 * u;
    for (const auto* g : {&t3, &custom}) {
      const double fd = (log_generator(*g, u + h, 2, 3) - log_generator(*g, u - h, 2, 3)) / (2 * h);
      CHECK(score_ratio(*g, u, 2, 3) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("J constants closed forms") {
  const auto normal = DensityGenerator::normal();
  const JConstants jn = j_constants(normal, 2, 10, 1);
  CHECK(jn.j2 == 110.0);
  CHECK(jn.j1 == 5.0);
  CHECK(jn.j2_excess() == 0.0);
  for (int p = 1; p <= 4; ++p)
    for (int n = 1; n <= 12; n += 3) {
      const double pn = p * n;
      CHECK(j_constants(normal, p, n, 1).j2 == (2 * pn + pn * pn) / 4.0);
    }

  const auto t3 = DensityGenerator::student_t(3.0);
  const JConstants jt = j_constants(t3, 2, 10, 1);
  CHECK(jt.j2 == doctest::Approx(101.2).epsilon(1e-14));
  CHECK(jt.j2_method == JMethod::kClosedForm);
  CHECK(jt.j1_method == JMethod::kMonteCarlo);

  for (double d : {0.5, 1.0, 3.0, 30.0, 1e4})
    CHECK(j_constants(DensityGenerator::student_t(d), 2, 3, 1, 1000).j2_excess() < 0.0);
}

TEST_CASE("Monte Carlo J estimates agree with closed forms within 3 standard errors") {
  const auto normal = DensityGenerator::normal();
  const JConstants mc = j_constants_monte_carlo(normal, 2, 10, 7);
  CHECK(std::abs(mc.j1 - 5.0) < 3 * mc.j1_se);
  CHECK(std::abs(mc.j2 - 110.0) < 3 * mc.j2_se);

  const auto t3 = DensityGenerator::student_t(3.0);
  const JConstants closed = j_constants(t3, 2, 10, 8);
  const JConstants direct = j_constants_monte_carlo(t3, 2, 10, 9);
  CHECK(std::abs(direct.j2 - closed.j2) < 3 * direct.j2_se);
  CHECK(std::abs(direct.j1 - closed.j1) < 3 * std::hypot(direct.j1_se, closed.j1_se));
  CHECK(std::abs(direct.j2 - closed.j2) / closed.j2 < 0.01);
}

TEST_CASE("importance-sampled J for a custom generator reproduces the normal values") {
  const auto as_custom = DensityGenerator::custom(
      "normal-copy", [](double u) { return -0.5 * u; }, [](double) { return -0.5; });
  const JConstants j = j_constants(as_custom, 2, 3, 5);
  CHECK(j.j1_method == JMethod::kMonteCarlo);
  CHECK(std::abs(j.j1 - 1.5) < 4 * j.j1_se);
  CHECK(std::abs(j.j2 - 12.0) < 4 * j.j2_se);
}

TEST_CASE("sample_standard_elliptical") {
  Rng rng = make_rng(21);
  const auto normal = DensityGenerator::normal();
  const Moments mn = moments(100000, [&] { return sample_standard_elliptical(normal, 1, 1, rng)(0, 0); });
  CHECK(mn.var == doctest::Approx(1.0).epsilon(0.02));

  const auto t3 = DensityGenerator::student_t(3.0);
  const Moments mt = moments(200000, [&] { return sample_standard_elliptical(t3, 1, 1, rng)(0, 0); });
  CHECK(mt.var == doctest::Approx(3.0).epsilon(0.15));

  const Matrix z = sample_standard_elliptical(t3, 2, 4, rng);
  CHECK(z.rows() == 2);
  CHECK(z.cols() == 4);

  CHECK_THROWS_AS(sample_standard_elliptical(laplace_like(), 1, 1, rng), Error);
}

TEST_CASE("sample_inverse_wishart") {
  Rng rng = make_rng(22);
  const SpdMatrix a1 = spd_from_sym(SymMatrix::identity(1) * 2.0);
  const Moments m = moments(100000, [&] { return sample_inverse_wishart(6.0, a1, rng).matrix()(0, 0); });
  CHECK(m.mean == doctest::Approx(1.0).epsilon(0.02));

  const SpdMatrix a2 = spd_from_sym(SymMatrix::identity(2));
  Matrix inv_sum = Matrix::Zero(2, 2);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const SpdMatrix psi = sample_inverse_wishart(8.0, a2, rng);
    CHECK_NOTHROW(spd_from_sym(psi.sym()));
    inv_sum += psi.inverse();
  }
  inv_sum /= draws;
  CHECK(inv_sum(0, 0) == doctest::Approx(5.0).epsilon(0.02));
  CHECK(inv_sum(1, 1) == doctest::Approx(5.0).epsilon(0.02));
  CHECK(std::abs(inv_sum(0, 1)) < 0.1);

  CHECK_THROWS_AS(sample_inverse_wishart(4.0, a2, rng), Error);
}

TEST_CASE("sample_giw") {
  Rng rng = make_rng(23);
  const SpdMatrix a1 = spd_from_sym(SymMatrix::identity(1) * 2.0);
  const auto normal = DensityGenerator::normal();
  const Moments mn = moments(100000, [&] { return sample_giw(normal, 6.0, a1, 1, rng).matrix()(0, 0); });
  CHECK(mn.mean == doctest::Approx(1.0).epsilon(0.02));

  // generator_dim = p (nu - p - 1) makes the mixing variable chi2_d.
  const auto t3 = DensityGenerator::student_t(3.0);
  CHECK(giw_mixing_dof(3.0, 6.0, 1, 4) == 3.0);
  const Moments mt = moments(200000, [&] { return sample_giw(t3, 6.0, a1, 4, rng).matrix()(0, 0); });
  CHECK(mt.mean == doctest::Approx(1.0).epsilon(0.03));

  CHECK_THROWS_AS(sample_giw(t3, 6.0, a1, 0, rng), Error);
  CHECK_THROWS_AS(sample_giw(laplace_like(), 6.0, a1, 4, rng), Error);
}

TEST_CASE("GIW densities integrate to one for p = 1") {
  const SpdMatrix a = spd_from_sym(SymMatrix::identity(1) * 1.7);
  const auto normal = DensityGenerator::normal();
  const auto t3 = DensityGenerator::student_t(3.0);
  struct Case {
    const DensityGenerator* gen;
    double nu;
    int dim;
  };
  for (const Case& c : {Case{&normal, 5.0, 3}, Case{&t3, 6.0, 4}, Case{&t3, 7.0, 9}}) {
    // trapezoid in log psi
    const int m = 20000;
    const double lo = std::log(1e-6), hi = std::log(1e8), h = (hi - lo) / m;
    double total = 0.0;
    for (int i = 0; i <= m; ++i) {
      const double lp = lo + i * h;
      const SpdMatrix psi = spd_from_sym(SymMatrix::identity(1) * std::exp(lp));
      const double w = (i == 0 || i == m) ? 0.5 : 1.0;
      total += w * std::exp(log_density_giw(psi, *c.gen, c.nu, a, c.dim) + lp);
    }
    CHECK(total * h == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("GIW sampler matches its density for p = 1") {
  Rng rng = make_rng(24);
  const auto t3 = DensityGenerator::student_t(3.0);
  const SpdMatrix a = spd_from_sym(SymMatrix::identity(1) * 1.7);
  const double nu = 7.0;
  const int dim = 9;
  const int draws = 200000;
  int below = 0;
  const double cut = 0.5;
  for (int i = 0; i < draws; ++i) below += sample_giw(t3, nu, a, dim, rng).matrix()(0, 0) < cut;

  const int m = 20000;
  const double lo = std::log(1e-8), hi = std::log(cut), h = (hi - lo) / m;
  double cdf = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double lp = lo + i * h;
    const SpdMatrix psi = spd_from_sym(SymMatrix::identity(1) * std::exp(lp));
    const double w = (i == 0 || i == m) ? 0.5 : 1.0;
    cdf += w * std::exp(log_density_giw(psi, t3, nu, a, dim) + lp);
  }
  cdf *= h;
  const double frac = static_cast<double>(below) / draws;
  CHECK(std::abs(frac - cdf) < 4 * std::sqrt(cdf * (1 - cdf) / draws));
}

TEST_CASE("sample_multivariate_t") {
  Rng rng = make_rng(25);
  Vector zero = Vector::Zero(1);
  const SpdMatrix one = spd_from_sym(SymMatrix::identity(1));
  const Moments m = moments(200000, [&] { return sample_multivariate_t(5.0, zero, one, rng)(0); });
  CHECK(m.var == doctest::Approx(5.0 / 3.0).epsilon(0.03));

  Vector loc(2);
  loc << 7, -7;
  const SpdMatrix i2 = spd_from_sym(SymMatrix::identity(2));
  Vector sum = Vector::Zero(2);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) sum += sample_multivariate_t(10.0, loc, i2, rng);
  sum /= draws;
  const double se = std::sqrt(10.0 / 8.0 / draws);
  CHECK(std::abs(sum(0) - 7.0) < 3 * se);
  CHECK(std::abs(sum(1) + 7.0) < 3 * se);

  for (double x : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
    Vector v(1);
    v << x;
    const double ratio = std::exp(log_density_mvt(v, 1e8, zero, one) - log_density_mvn(v, zero, one));
    CHECK(ratio == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("sample_model_data") {
  Rng rng = make_rng(26);
  Vector mu(2);
  mu << 1.0, -2.0;
  Matrix pm(2, 2);
  pm << 1.0, 0.3, 0.3, 0.5;
  const SymMatrix psi(pm);
  Matrix um(2, 2);
  um << 0.4, -0.1, -0.1, 0.2;
  const std::vector<SymMatrix> u(1, SymMatrix(um));
  const Matrix target = pm + um;

  const auto normal = DensityGenerator::normal();
  const auto t3 = DensityGenerator::student_t(3.0);
  for (const auto* gen : {&normal, &t3}) {
    const int draws = 200000;
    Matrix cov = Matrix::Zero(2, 2);
    for (int i = 0; i < draws; ++i) {
      const Vector e = sample_model_data(mu, psi, u, *gen, rng).col(0) - mu;
      cov += e * e.transpose();
    }
    cov /= draws;
    const double scale = gen->kind() == GeneratorKind::kNormal ? 1.0 : 3.0;
    const double tol = gen->kind() == GeneratorKind::kNormal ? 0.02 : 0.1;
    CHECK((cov - scale * target).norm() / (scale * target).norm() < tol);
  }

  const std::vector<SymMatrix> zero_u(5, SymMatrix::zero(2));
  const Matrix x = sample_model_data(mu, SymMatrix::zero(2), zero_u, t3, rng);
  for (int i = 0; i < 5; ++i) CHECK(x.col(i) == mu);

  const std::vector<SymMatrix> bad_u(2, SymMatrix::zero(3));
  CHECK_THROWS_AS(sample_model_data(mu, psi, bad_u, normal, rng), Error);
}
