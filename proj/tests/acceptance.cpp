// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Detail lines are indented under their criterion.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "ellipmeta/app.hpp"
#include "ellipmeta/error.hpp"
#include "ellipmeta/io.hpp"
#include "ellipmeta/mcmc.hpp"
#include "ellipmeta/oracle.hpp"
#include "ellipmeta/priors.hpp"
#include "ellipmeta/report.hpp"

using namespace ellipmeta;

namespace {

const std::string kHypertension = std::string(ELLIPMETA_DATA_DIR) + "/hypertension.csv";

void detail(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void detail(const char* fmt, ...) {
  std::va_list args;
  va_start(args, fmt);
  std::fputs("    ", stdout);
  std::vprintf(fmt, args);
  std::fputc('\n', stdout);
  va_end(args);
  std::fflush(stdout);
}

bool report_all(const std::vector<OracleReport>& reports) {
  bool ok = true;
  for (const auto& r : reports) {
    detail("%s %s: error %.3g (tolerance %.3g)%s%s", r.passed ? "ok " : "BAD", r.name.c_str(), r.error,
           r.tolerance, r.note.empty() ? "" : ", ", r.note.c_str());
    ok = ok && r.passed;
  }
  return ok;
}

struct Published {
  PriorKind prior;
  Variant variant;
  double mean[2];
  double sd[2];
};

// Posterior summaries reported for the hypertension data.
const std::vector<Published> kNormalRows{
    {PriorKind::kJeffreys, Variant::kA, {-9.79, -4.05}, {0.88, 0.93}},
    {PriorKind::kJeffreys, Variant::kB, {-9.78, -4.37}, {0.74, 0.50}},
    {PriorKind::kReference, Variant::kA, {-9.81, -4.49}, {1.04, 0.59}},
    {PriorKind::kReference, Variant::kB, {-9.70, -4.51}, {1.01, 0.58}},
};
const std::vector<Published> kStudentRows{
    {PriorKind::kJeffreys, Variant::kA, {-10.15, -4.67}, {1.08, 0.60}},
    {PriorKind::kJeffreys, Variant::kB, {-10.03, -4.66}, {1.13, 0.61}},
    {PriorKind::kReference, Variant::kA, {-10.11, -4.67}, {1.16, 0.64}},
    {PriorKind::kReference, Variant::kB, {-10.08, -4.68}, {1.13, 0.64}},
};

bool reproduce_rows(ModelKind model, const std::vector<Published>& rows) {
  const Dataset data = ingest(kHypertension, InputFormat::kCsv);
  bool ok = true;
  for (const auto& row : rows) {
    RunConfig c;
    c.model = model;
    if (model == ModelKind::kStudentT) {
      c.t_dof = 3.0;
      c.rescale_u = true;
    }
    c.prior = row.prior;
    c.variant = row.variant;
    const FitResult r = fit(c, data);
    bool row_ok = true;
    for (int k = 0; k < 2; ++k) {
      row_ok = row_ok && std::abs(r.summary.mu[k].mean - row.mean[k]) <= 0.35;
      row_ok = row_ok && std::abs(r.summary.mu[k].sd - row.sd[k]) <= 0.30;
    }
    detail("%s %s/%s: mean (%.3f, %.3f) vs (%.2f, %.2f), sd (%.3f, %.3f) vs (%.2f, %.2f), acceptance %.3f",
           row_ok ? "ok " : "BAD", to_string(row.prior), to_string(row.variant), r.summary.mu[0].mean,
           r.summary.mu[1].mean, row.mean[0], row.mean[1], r.summary.mu[0].sd, r.summary.mu[1].sd, row.sd[0],
           row.sd[1], r.summary.acceptance_rate);
    ok = ok && row_ok;
  }
  return ok;
}

bool normal_rows() { return reproduce_rows(ModelKind::kNormal, kNormalRows); }

bool student_rows() { return reproduce_rows(ModelKind::kStudentT, kStudentRows); }

bool j_constants_identities() {
  bool ok = true;
  for (int p = 1; p <= 5; ++p)
    for (int n : {1, 2, 10, 20}) {
      const double j2 = j_constants(DensityGenerator::normal(), p, n, 1).j2;
      const double expected = (2.0 * p * n + double(p) * p * n * n) / 4.0;
      if (j2 != expected) {
        detail("BAD normal (%d, %d): %.17g vs %.17g", p, n, j2, expected);
        ok = false;
      }
    }
  detail("%s normal J2 closed form over p 1..5, n in {1, 2, 10, 20}", ok ? "ok " : "BAD");

  struct Case {
    int p, n;
    double d;
  };
  std::uint64_t seed = 301;
  for (const Case& c : {Case{2, 10, 3.0}, Case{5, 20, 3.0}, Case{2, 10, 30.0}}) {
    const OracleReport r = j2_check(DensityGenerator::student_t(c.d), c.p, c.n, 200000, seed++, 0.01);
    detail("%s t(%g) p=%d n=%d: relative error %.4f", r.passed ? "ok " : "BAD", c.d, c.p, c.n, r.error);
    ok = ok && r.passed;
  }
  return ok;
}

bool fisher_oracle() {
  Matrix psi2(2, 2), u1(2, 2), u2(2, 2), u3(2, 2);
  psi2 << 0.8, 0.2, 0.2, 0.5;
  u1 << 0.5, 0.1, 0.1, 0.3;
  u2 << 1.0, -0.2, -0.2, 0.6;
  u3 << 0.3, 0.0, 0.0, 0.9;
  const std::vector<SymMatrix> scalar_u{SymMatrix::identity(1) * 0.5, SymMatrix::identity(1) * 0.8};
  const std::vector<SymMatrix> matrix_u{SymMatrix(u1), SymMatrix(u2), SymMatrix(u3)};

  bool ok = true;
  std::uint64_t seed = 401;
  for (double d : {0.0, 3.0}) {
    const DensityGenerator gen = d == 0.0 ? DensityGenerator::normal() : DensityGenerator::student_t(d);
    detail("%s, p=1 n=2", gen.name().c_str());
    ok = report_all(fisher_information_check(gen, SymMatrix::identity(1) * 0.6, scalar_u, 200000, seed++)) && ok;
    detail("%s, p=2 n=3", gen.name().c_str());
    ok = report_all(fisher_information_check(gen, SymMatrix(psi2), matrix_u, 200000, seed++)) && ok;
  }
  return ok;
}

bool homoscedastic_forms() {
  bool ok = true;
  std::uint64_t seed = 501;
  for (int p : {2, 3})
    for (double d : {0.0, 3.0})
      for (PriorKind kind : {PriorKind::kReference, PriorKind::kJeffreys}) {
        const DensityGenerator gen = d == 0.0 ? DensityGenerator::normal() : DensityGenerator::student_t(d);
        const OracleReport r = homoscedastic_prior_check(gen, kind, p, 10, 20, seed++, 1e-8);
        detail("%s %s %s p=%d: sd %.3g", r.passed ? "ok " : "BAD", gen.name().c_str(), to_string(kind), p,
               r.error);
        ok = ok && r.passed;
      }
  return ok;
}

bool kronecker_order() {
  const OracleReport r = kronecker_order_check(100, 601);
  detail("min eigenvalue %.3g over %lld cases", r.error, static_cast<long long>(r.samples));
  return r.passed && r.error >= -1e-10;
}

bool propriety_gate_rules() {
  bool ok = true;
  for (double d : {0.0, 3.0}) {
    const DensityGenerator gen = d == 0.0 ? DensityGenerator::normal() : DensityGenerator::student_t(d);
    for (int p = 1; p <= 4; ++p) {
      const bool ref_rejects = !propriety_gate(PriorKind::kReference, p, p, gen).ok;
      const bool ref_accepts_next = propriety_gate(PriorKind::kReference, p, p + 1, gen).ok;
      const bool jef_accepts = propriety_gate(PriorKind::kJeffreys, p, p, gen).ok;
      const bool jef_rejects = p == 1 || !propriety_gate(PriorKind::kJeffreys, p, p - 1, gen).ok;
      const bool row_ok = ref_rejects && ref_accepts_next && jef_accepts && jef_rejects;
      detail("%s %s p=%d", row_ok ? "ok " : "BAD", gen.name().c_str(), p);
      ok = ok && row_ok;
    }
  }
  return ok;
}

bool trivial_acceptance() {
  bool ok = true;
  std::uint64_t seed = 801;
  for (PriorKind kind : {PriorKind::kReference, PriorKind::kJeffreys})
    for (Variant v : {Variant::kA, Variant::kB}) {
      detail("normal %s/%s", to_string(kind), to_string(v));
      ok = report_all(trivial_acceptance_check(DensityGenerator::normal(), kind, v, 2, 10, 10000, seed++)) && ok;
    }
  return ok;
}

bool quadrature_agreement() {
  Matrix x(1, 5);
  x << 2.1, 3.4, 1.2, 4.0, 2.7;
  std::vector<SymMatrix> u;
  for (double v : {0.4, 0.8, 0.3, 1.0, 0.5}) u.push_back(SymMatrix::identity(1) * v);
  const Dataset data({"s1", "s2", "s3", "s4", "s5"}, x, u);

  bool ok = true;
  for (PriorKind kind : {PriorKind::kReference, PriorKind::kJeffreys}) {
    const QuadratureResult q = quadrature_posterior_1d(data, kind, DensityGenerator::normal());
    RunConfig c;
    c.prior = kind;
    const FitResult r = fit(c, data);
    const double mean_err = std::abs(r.summary.mu[0].mean - q.mu_mean) / std::abs(q.mu_mean);
    const double sd_err = std::abs(r.summary.mu[0].sd - q.mu_sd) / q.mu_sd;
    const bool row_ok = mean_err <= 0.02 && sd_err <= 0.05;
    detail("%s %s: mean %.4f vs %.4f (%.2f%%), sd %.4f vs %.4f (%.2f%%)", row_ok ? "ok " : "BAD", to_string(kind),
           r.summary.mu[0].mean, q.mu_mean, 100 * mean_err, r.summary.mu[0].sd, q.mu_sd, 100 * sd_err);
    ok = ok && row_ok;
  }
  return ok;
}

bool factorization() {
  const Dataset data = ingest(kHypertension, InputFormat::kCsv);
  bool ok = true;

  FactorizationOptions analytic;
  analytic.statistical = false;
  for (PriorKind kind : {PriorKind::kReference, PriorKind::kJeffreys}) {
    detail("normal %s", to_string(kind));
    const PosteriorKernel kernel(data, make_prior_spec(kind, DensityGenerator::normal(), data.p(), data.n()));
    ok = report_all(factorization_consistency(kernel, analytic, 1001)) && ok;
  }

  FactorizationOptions moments;
  moments.analytic = false;
  moments.moment_draws = 100000;
  RunConfig t;
  t.model = ModelKind::kStudentT;
  t.t_dof = 3.0;
  t.rescale_u = true;
  const Dataset scaled = t.prepare(data);
  for (PriorKind kind : {PriorKind::kReference, PriorKind::kJeffreys}) {
    detail("t(3) %s", to_string(kind));
    const PosteriorKernel kernel(scaled, make_prior_spec(kind, t.generator(), data.p(), data.n()));
    ok = report_all(factorization_consistency(kernel, moments, 1002)) && ok;
  }
  return ok;
}

bool coverage() {
  CoverageDesign design;
  design.n_values = {10, 20};
  design.tau2_values = {0.25, 1.0};
  design.replications = 300;
  design.draws = 20000;
  design.master_seed = 1101;
  const CoverageResult r = coverage_experiment(design);
  bool ok = true;
  for (const auto& cell : r.cells) {
    const double lo = cell.n == 10 ? 0.92 : 0.93;
    const double hi = cell.n == 10 ? 0.995 : 0.985;
    const bool cell_ok = cell.coverage >= lo && cell.coverage <= hi;
    detail("%s n=%d tau2=%.2f %s: coverage %.3f in [%.3f, %.3f], mean width %.3f", cell_ok ? "ok " : "BAD", cell.n,
           cell.tau2, to_string(cell.prior), cell.coverage, lo, hi, cell.mean_width);
    ok = ok && cell_ok;
  }
  return ok;
}

bool determinism() {
  const Dataset data = ingest(kHypertension, InputFormat::kCsv);
  bool ok = true;
  RunConfig normal;
  RunConfig t;
  t.model = ModelKind::kStudentT;
  t.t_dof = 3.0;
  t.rescale_u = true;
  t.variant = Variant::kB;
  t.chains = 2;
  t.draws = 20000;
  for (const RunConfig& c : {normal, t}) {
    const FitResult a = fit(c, data);
    const FitResult b = fit(c, data);
    const bool same = a.document == b.document && a.draws_csv == b.draws_csv && a.contours_csv == b.contours_csv;
    detail("%s %s/%s: %zu bytes of output", same ? "ok " : "BAD", to_string(c.model), to_string(c.variant),
           a.document.size() + a.draws_csv.size() + a.contours_csv.size());
    ok = ok && same;
  }
  return ok;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<bool()> run;
  };
  const std::vector<Criterion> criteria{
      {"hypertension data, normal model, published posterior summaries", normal_rows},
      {"hypertension data, t(3) model, published posterior summaries", student_rows},
      {"J constants: normal closed form, t closed form vs Monte Carlo", j_constants_identities},
      {"Fisher information vs Monte Carlo score covariance", fisher_oracle},
      {"homoscedastic prior closed forms", homoscedastic_forms},
      {"Kronecker ordering property", kronecker_order},
      {"propriety gate", propriety_gate_rules},
      {"trivial acceptance with zero within-study covariances", trivial_acceptance},
      {"MCMC vs quadrature posterior for p = 1", quadrature_agreement},
      {"proposal factorization consistency", factorization},
      {"coverage of 95% intervals for mu1", coverage},
      {"determinism of fit output", determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::printf("[%zu] %s\n", i + 1, criteria[i].name);
    std::fflush(stdout);
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criteria[i].run();
    } catch (const std::exception& e) {
      detail("exception: %s", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s (%.1f s)\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].name, secs);
    std::fflush(stdout);
    failed += ok ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
