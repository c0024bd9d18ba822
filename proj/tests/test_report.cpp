#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ellipmeta/error.hpp"
#include "ellipmeta/mcmc.hpp"
#include "ellipmeta/report.hpp"

using namespace ellipmeta;

namespace {

Draws synthetic_draws(int p, std::size_t count, Rng& rng, double sigma = 1.0) {
  Draws d;
  d.p = p;
  for (std::size_t i = 0; i < count; ++i) {
    Vector mu(p);
    for (int k = 0; k < p; ++k) mu(k) = sigma * std_normal(rng);
    d.mu.push_back(mu);
    d.psi.push_back(SymMatrix::identity(p));
    d.accepted.push_back(1);
    d.log_posterior.push_back(0.0);
  }
  d.ess.assign(static_cast<std::size_t>(d.coordinate_count()), static_cast<double>(count));
  return d;
}

}  // namespace

TEST_CASE("quantile_sorted uses linear interpolation") {
  const std::vector<double> v{1.0, 2.0, 4.0, 8.0};
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 8.0);
  CHECK(quantile_sorted(v, 0.5) == 3.0);
  CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_sorted({5.0}, 0.3) == 5.0);
}

TEST_CASE("equal-tailed interval of standard normal draws") {
  Rng rng = make_rng(81);
  std::vector<double> x(1000000);
  for (auto& v : x) v = std_normal(rng);
  const Interval iv = equal_tailed_interval(x, 0.95);
  CHECK(std::abs(iv.lower + 1.959964) < 0.02);
  CHECK(std::abs(iv.upper - 1.959964) < 0.02);

  CHECK_THROWS_AS(equal_tailed_interval({}, 0.95), Error);
  CHECK_THROWS_AS(equal_tailed_interval(x, 1.0), Error);
  CHECK_THROWS_AS(equal_tailed_interval(x, 0.0), Error);
}

TEST_CASE("intervals grow with the level") {
  Rng rng = make_rng(82);
  std::vector<double> x(5000);
  for (auto& v : x) v = std::exp(std_normal(rng));
  Interval prev = equal_tailed_interval(x, 0.01);
  for (double level = 0.05; level < 0.999; level += 0.05) {
    const Interval iv = equal_tailed_interval(x, level);
    CHECK(iv.lower <= prev.lower);
    CHECK(iv.upper >= prev.upper);
    prev = iv;
  }
}

TEST_CASE("summary of constant draws") {
  Draws d;
  d.p = 2;
  Vector c(2);
  c << 3.5, -1.25;
  for (int i = 0; i < 100; ++i) {
    d.mu.push_back(c);
    d.psi.push_back(SymMatrix::identity(2) * 0.5);
    d.accepted.push_back(0);
    d.log_posterior.push_back(-1.0);
  }
  d.ess.assign(5, 1.0);
  const SummaryReport s = summarize(d, 0.9);
  REQUIRE(s.mu.size() == 2);
  REQUIRE(s.psi.size() == 3);
  for (int k = 0; k < 2; ++k) {
    CHECK(s.mu[k].mean == c(k));
    CHECK(s.mu[k].median == c(k));
    CHECK(s.mu[k].sd == 0.0);
    CHECK(s.mu[k].interval.lower == c(k));
    CHECK(s.mu[k].interval.upper == c(k));
  }
  CHECK(s.psi[1].mean == 0.0);
  CHECK(s.mu[0].name == "mu1");
  CHECK(s.psi[1].name == "psi21");
  CHECK_THROWS_AS(summarize(Draws{}, 0.95), Error);
}

TEST_CASE("coordinate names and config hash") {
  CHECK(coordinate_names(2) == std::vector<std::string>{"mu1", "mu2", "psi11", "psi21", "psi22"});
  SamplerConfig a;
  SamplerConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.seed += 1;
  CHECK(config_hash(a) != config_hash(b));
  b = a;
  b.variant = Variant::kB;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("credible region of isotropic Gaussian draws") {
  Rng rng = make_rng(83);
  const double sigma = 1.5;
  const Draws d = synthetic_draws(2, 200000, rng, sigma);
  const CredibleRegions regions = credible_region_2d(d, {0, 1}, {0.90, 0.95, 0.99});
  REQUIRE(regions.regions.size() == 3);

  const double chi2_95 = 5.991464547107979;
  CHECK(regions.regions[1].area() == doctest::Approx(M_PI * chi2_95 * sigma * sigma).epsilon(0.10));

  for (const auto& r : regions.regions) {
    CHECK(r.mass >= r.level);
    CHECK(r.contains(0.0, 0.0));
    CHECK_FALSE(r.polygons.empty());
  }
  for (std::size_t i = 0; i < regions.regions[0].cells.size(); ++i) {
    if (regions.regions[0].cells[i]) CHECK(regions.regions[1].cells[i]);
    if (regions.regions[1].cells[i]) CHECK(regions.regions[2].cells[i]);
  }
  CHECK(regions.regions[0].cell_count() < regions.regions[1].cell_count());
  CHECK(regions.regions[1].cell_count() < regions.regions[2].cell_count());

  const std::string csv = contour_csv(regions);
  CHECK(csv.rfind("level,polygon,vertex,x,y\n", 0) == 0);

  const Draws few = synthetic_draws(2, 999, rng);
  CHECK_THROWS_AS(credible_region_2d(few, {0, 1}, {0.95}), Error);
  CHECK_THROWS_AS(credible_region_2d(d, {0, 1}, {1.5}), Error);
  CHECK_THROWS_AS(credible_region_2d(d, {0, 7}, {0.95}), Error);
}

TEST_CASE("draws csv") {
  Rng rng = make_rng(84);
  const Draws d = synthetic_draws(2, 3, rng);
  const std::string csv = draws_csv(d);
  CHECK(csv.rfind("index,accepted,log_posterior,mu1,mu2,psi11,psi21,psi22\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("reference intervals are wider than Jeffreys intervals on average") {
  const int p = 2, n = 10, seeds = 50;
  double width_ref = 0.0, width_jef = 0.0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng = make_rng(85, static_cast<std::uint64_t>(s));
    const SymMatrix v = random_spd(p, 1.0, 4.0, rng);
    const std::vector<SymMatrix> u(n, v);
    const Vector mu = Vector::Constant(p, 3.0);
    const Matrix x = sample_model_data(mu, random_spd(p, 1.0, 4.0, rng), u, DensityGenerator::normal(), rng);
    const Dataset data({}, x, u);
    for (PriorKind kind : {PriorKind::kReference, PriorKind::kJeffreys}) {
      const PosteriorKernel kernel(data, make_prior_spec(kind, DensityGenerator::normal(), p, n));
      SamplerConfig cfg;
      cfg.prior_kind = kind;
      cfg.draws = 10000;
      cfg.seed = static_cast<std::uint64_t>(s);
      const Interval iv = equal_tailed_interval(run_chain(cfg, kernel).coordinate(0), 0.95);
      (kind == PriorKind::kReference ? width_ref : width_jef) += iv.width() / seeds;
    }
  }
  CAPTURE(width_ref);
  CAPTURE(width_jef);
  CHECK(width_ref > width_jef);
}

TEST_CASE("coverage experiment is reproducible") {
  CoverageDesign design;
  design.replications = 4;
  design.draws = 2000;
  design.tau2_values = {0.5};
  design.master_seed = 7;
  const CoverageResult a = coverage_experiment(design);
  design.parallel = 2;
  const CoverageResult b = coverage_experiment(design);
  REQUIRE(a.cells.size() == 2);
  REQUIRE(b.cells.size() == 2);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(a.cells[i].covered == b.cells[i].covered);
    CHECK(a.cells[i].widths == b.cells[i].widths);
    CHECK(a.cells[i].mean_acceptance == b.cells[i].mean_acceptance);
  }
  CHECK(coverage_csv(a) == coverage_csv(b));
}

TEST_CASE("coverage without heterogeneity stays above the nominal level") {
  CoverageDesign design;
  design.replications = 100;
  design.draws = 5000;
  design.tau2_values = {0.0};
  design.priors = {PriorKind::kReference};
  design.fixed_mu = 2.0;
  design.master_seed = 11;
  const CoverageResult r = coverage_experiment(design);
  REQUIRE(r.cells.size() == 1);
  CAPTURE(r.cells[0].coverage);
  CHECK(r.cells[0].coverage >= 0.95);
}
