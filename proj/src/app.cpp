#include "ellipmeta/app.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <sstream>

#include "ellipmeta/error.hpp"
#include "ellipmeta/io.hpp"
#include "ellipmeta/mcmc.hpp"

#ifndef ELLIPMETA_VERSION
#define ELLIPMETA_VERSION "unknown"
#endif

namespace ellipmeta {

using nlohmann::json;

const char* to_string(ModelKind m) { return m == ModelKind::kNormal ? "normal" : "t"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "normal") return ModelKind::kNormal;
  if (s == "t") return ModelKind::kStudentT;
  throw Error(ErrorCode::kInput, "unknown model '" + s + "' (expected normal|t)");
}

void RunConfig::validate() const {
  if (model == ModelKind::kStudentT) {
    if (!t_dof) throw Error(ErrorCode::kInput, "the t model needs --t-dof");
    if (!(*t_dof > 0.0)) throw Error(ErrorCode::kInput, "--t-dof must be > 0");
  } else if (t_dof) {
    throw Error(ErrorCode::kInput, "--t-dof only applies to the t model");
  }
  if (rescale_u && (model != ModelKind::kStudentT || !(*t_dof > 2.0))) {
    throw Error(ErrorCode::kInput, "--rescale-u needs the t model with d > 2");
  }
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::kInput, "--level must lie in (0, 1)");
  if (parallel < 1) throw Error(ErrorCode::kInput, "--parallel must be >= 1");
  sampler().validate();
}

DensityGenerator RunConfig::generator() const {
  return model == ModelKind::kNormal ? DensityGenerator::normal()
                                     : DensityGenerator::student_t(t_dof.value_or(0.0));
}

SamplerConfig RunConfig::sampler() const {
  SamplerConfig s;
  s.variant = variant;
  s.prior_kind = prior;
  s.draws = draws;
  s.burn_in_fraction = burn_in_fraction;
  s.seed = seed;
  s.thin = thin;
  s.chains = chains;
  return s;
}

Dataset RunConfig::prepare(const Dataset& data) const {
  if (!rescale_u) return data;
  return data.with_scaled_within((*t_dof - 2.0) / *t_dof);
}

namespace {

json config_to_json(const RunConfig& c) {
  json j;
  j["model"] = to_string(c.model);
  j["t_dof"] = c.t_dof ? json(*c.t_dof) : json(nullptr);
  j["rescale_u"] = c.rescale_u;
  j["prior"] = to_string(c.prior);
  j["variant"] = to_string(c.variant);
  j["draws"] = c.draws;
  j["burn_in_fraction"] = c.burn_in_fraction;
  j["thin"] = c.thin;
  j["chains"] = c.chains;
  j["seed"] = c.seed;
  j["level"] = c.level;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.model = parse_model_kind(j.at("model").get<std::string>());
  if (j.contains("t_dof") && !j["t_dof"].is_null()) c.t_dof = j["t_dof"].get<double>();
  c.rescale_u = j.value("rescale_u", false);
  c.prior = parse_prior_kind(j.at("prior").get<std::string>());
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.draws = j.at("draws").get<std::int64_t>();
  c.burn_in_fraction = j.at("burn_in_fraction").get<double>();
  c.thin = j.at("thin").get<int>();
  c.chains = j.at("chains").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.level = j.at("level").get<double>();
  return c;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json coordinate_json(const CoordinateSummary& s) {
  return json{{"name", s.name},        {"mean", s.mean},
              {"median", s.median},    {"sd", s.sd},
              {"lower", s.interval.lower}, {"upper", s.interval.upper},
              {"ess", s.ess}};
}

json summary_json(const SummaryReport& r) {
  json j;
  j["level"] = r.level;
  j["draws"] = r.draws;
  j["acceptance_rate"] = r.acceptance_rate;
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["mu"] = json::array();
  for (const auto& s : r.mu) j["mu"].push_back(coordinate_json(s));
  j["psi"] = json::array();
  for (const auto& s : r.psi) j["psi"].push_back(coordinate_json(s));
  if (r.rao_blackwell) {
    j["rao_blackwell"] = {{"mean", vector_json(r.rao_blackwell->rao_blackwell_mean)},
                          {"cov", matrix_json(r.rao_blackwell->rao_blackwell_cov.matrix())}};
    j["raw_moments"] = {{"mean", vector_json(r.rao_blackwell->raw_mean)},
                        {"cov", matrix_json(r.rao_blackwell->raw_cov.matrix())}};
  }
  return j;
}

json oracle_json(const OracleReport& r) {
  return json{{"name", r.name},
              {"oracle", r.oracle_values},
              {"main", r.main_values},
              {"error", r.error},
              {"tolerance", r.tolerance},
              {"passed", r.passed},
              {"samples", r.samples},
              {"seed", r.seed},
              {"note", r.note}};
}

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const char* j_method(JMethod m) { return m == JMethod::kClosedForm ? "closed_form" : "monte_carlo"; }

}  // namespace

std::string run_config_json(const RunConfig& config) { return config_to_json(config).dump(2); }

RunConfig run_config_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    return config_from_json(doc.contains("config") ? doc["config"] : doc);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("malformed run configuration: ") + e.what());
  }
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* v = std::getenv("ELLIPMETA_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  std::uint64_t seed = 0;
  const std::string s(v);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInput, "ELLIPMETA_SEED must be an unsigned integer");
  }
  return seed;
}

FitResult fit(const RunConfig& config, const Dataset& data) {
  config.validate();
  const Dataset prepared = config.prepare(data);
  const DensityGenerator gen = config.generator();
  const GateResult gate = propriety_gate(config.prior, prepared.p(), prepared.n(), gen);
  if (!gate.ok) throw Error(ErrorCode::kGateRejection, gate.message());
  const PosteriorKernel kernel(prepared,
                               make_prior_spec(config.prior, gen, prepared.p(), prepared.n()));

  FitResult out;
  out.draws = run_chains(config.sampler(), kernel, config.parallel);
  out.summary = summarize(out.draws, config.level, kernel);
  out.draws_csv = draws_csv(out.draws);
  if (prepared.p() >= 2 && out.draws.size() >= kMinRegionDraws) {
    out.regions = credible_region_2d(out.draws, {0, 1}, kRegionLevels);
    out.contours_csv = contour_csv(*out.regions);
  }

  const PriorSpec& prior = kernel.prior();
  json doc;
  doc["tool"] = "ellipmeta";
  doc["version"] = ELLIPMETA_VERSION;
  doc["command"] = "fit";
  doc["config"] = config_to_json(config);
  doc["dataset"] = {{"p", prepared.p()},
                    {"n", prepared.n()},
                    {"labels", prepared.labels()},
                    {"within_rescaled", config.rescale_u},
                    {"fingerprint", fnv1a(export_json(prepared))}};
  doc["prior"] = {{"kind", to_string(prior.kind)},
                  {"generator", gen.name()},
                  {"j1", prior.j.j1},
                  {"j2", prior.j.j2},
                  {"j1_method", j_method(prior.j.j1_method)},
                  {"j2_method", j_method(prior.j.j2_method)},
                  {"j1_se", prior.j.j1_se},
                  {"j2_se", prior.j.j2_se},
                  {"j_seed", prior.j.seed},
                  {"j2_excess", prior.hypotheses.j2_excess}};
  doc["sampler"] = {{"chain_seeds", out.draws.chain_seeds},
                    {"iterations", out.draws.iterations},
                    {"accepted_moves", out.draws.accepted_moves},
                    {"acceptance_rate", out.draws.acceptance_rate},
                    {"retained", out.draws.size()},
                    {"ess", out.draws.ess}};
  doc["summary"] = summary_json(out.summary);
  if (out.regions) {
    json regions = json::array();
    for (const auto& r : out.regions->regions) {
      regions.push_back({{"level", r.level},
                         {"area", r.area()},
                         {"cells", r.cell_count()},
                         {"mass", r.mass},
                         {"polygons", r.polygons.size()},
                         {"contains_posterior_mean",
                          r.contains(out.summary.mu[0].mean, out.summary.mu[1].mean)}});
    }
    doc["regions"] = {{"coords", {"mu1", "mu2"}}, {"levels", regions}};
  }
  out.document = doc.dump(2) + "\n";
  return out;
}

ValidateScope parse_validate_scope(const std::string& s) {
  if (s == "linalg") return ValidateScope::kLinalg;
  if (s == "priors") return ValidateScope::kPriors;
  if (s == "samplers") return ValidateScope::kSamplers;
  if (s == "all") return ValidateScope::kAll;
  throw Error(ErrorCode::kInput, "unknown scope '" + s + "' (expected linalg|priors|samplers|all)");
}

namespace {

OracleReport duplication_check(int cases, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const int p = 1 + c % 4;
    Matrix m(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) m(i, j) = std_normal(rng);
    const SymMatrix s(m);
    worst = std::max(worst, (duplication_matrix(p) * vech(s) - vec(s.matrix())).cwiseAbs().maxCoeff());
  }
  OracleReport r;
  r.name = "duplication_identity";
  r.oracle_values = {worst};
  r.error = worst;
  r.tolerance = 0.0;
  r.passed = worst == 0.0;
  r.samples = cases;
  r.seed = seed;
  r.note = "max |G vech(S) - vec(S)|";
  return r;
}

void append(std::vector<OracleReport>& to, std::vector<OracleReport> from) {
  for (auto& r : from) to.push_back(std::move(r));
}

}  // namespace

std::string oracle_document(const std::vector<OracleReport>& reports, const std::string& scope) {
  json doc;
  doc["tool"] = "ellipmeta";
  doc["version"] = ELLIPMETA_VERSION;
  doc["command"] = "validate";
  doc["scope"] = scope;
  bool passed = true;
  doc["checks"] = json::array();
  for (const auto& r : reports) {
    doc["checks"].push_back(oracle_json(r));
    passed = passed && r.passed;
  }
  doc["passed"] = passed;
  return doc.dump(2) + "\n";
}

ValidationResult validate(ValidateScope scope, const ValidateOptions& options) {
  ValidationResult out;
  const bool all = scope == ValidateScope::kAll;
  const std::uint64_t seed = options.seed;
  const DensityGenerator normal = DensityGenerator::normal();
  const DensityGenerator t3 = DensityGenerator::student_t(3.0);

  if (all || scope == ValidateScope::kLinalg) {
    out.reports.push_back(kronecker_order_check(100, derive_seed(seed, 1)));
    out.reports.push_back(duplication_check(100, derive_seed(seed, 2)));
  }
  if (all || scope == ValidateScope::kPriors) {
    Rng rng = make_rng(seed, 3);
    const int p = 2;
    const int n = 3;
    const SymMatrix psi = random_spd(p, 0.5, 2.0, rng);
    std::vector<SymMatrix> u;
    for (int i = 0; i < n; ++i) u.push_back(random_spd(p, 0.5, 2.0, rng));
    append(out.reports,
           fisher_information_check(normal, psi, u, options.fisher_samples, derive_seed(seed, 4)));
    for (PriorKind kind : {PriorKind::kReference, PriorKind::kJeffreys}) {
      out.reports.push_back(homoscedastic_prior_check(normal, kind, 2, 10, 20, derive_seed(seed, 5)));
      out.reports.push_back(homoscedastic_prior_check(t3, kind, 3, 10, 20, derive_seed(seed, 6)));
    }
    out.reports.push_back(j2_check(t3, 2, 10, 200000, derive_seed(seed, 7)));
  }
  if (all || scope == ValidateScope::kSamplers) {
    Rng rng = make_rng(seed, 8);
    const int p = 2;
    const int n = 10;
    Matrix x(p, n);
    std::vector<SymMatrix> u;
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < p; ++k) x(k, i) = 2.0 * std_normal(rng);
      u.push_back(random_spd(p, 0.5, 2.0, rng));
    }
    const Dataset data({}, x, u);
    FactorizationOptions fo;
    fo.dof_offset = options.dof_offset;
    fo.moment_draws = 20000;
    for (PriorKind kind : {PriorKind::kReference, PriorKind::kJeffreys}) {
      const PosteriorKernel kernel(data, make_prior_spec(kind, normal, p, n));
      append(out.reports, factorization_consistency(kernel, fo, derive_seed(seed, 9)));
    }
    append(out.reports, trivial_acceptance_check(normal, PriorKind::kReference, Variant::kA, 2, 10,
                                                 10000, derive_seed(seed, 10)));
  }
  for (const auto& r : out.reports) out.passed = out.passed && r.passed;
  static const char* names[] = {"linalg", "priors", "samplers", "all"};
  out.document = oracle_document(out.reports, names[static_cast<int>(scope)]);
  return out;
}

std::vector<SymMatrix> default_psi_grid(int p) {
  std::vector<SymMatrix> grid;
  for (double s : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) grid.push_back(SymMatrix::identity(p) * s);
  return grid;
}

std::vector<SymMatrix> parse_psi_grid(const std::string& text) {
  try {
    const json doc = json::parse(text);
    std::vector<SymMatrix> grid;
    for (const auto& m : doc) {
      const auto rows = m.get<std::vector<std::vector<double>>>();
      const auto p = static_cast<Eigen::Index>(rows.size());
      Matrix a(p, p);
      for (Eigen::Index r = 0; r < p; ++r) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != p) {
          throw Error(ErrorCode::kInput, "grid matrices must be square");
        }
        for (Eigen::Index c = 0; c < p; ++c) {
          a(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
      }
      grid.emplace_back(a);
    }
    return grid;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInput, std::string("malformed Psi grid: ") + e.what());
  }
}

PriorsEvalResult priors_eval(const RunConfig& config, const Dataset& data,
                             const std::vector<SymMatrix>& grid) {
  config.validate();
  const Dataset prepared = config.prepare(data);
  const DensityGenerator gen = config.generator();
  const GateResult gate = propriety_gate(config.prior, prepared.p(), prepared.n(), gen);
  if (!gate.ok) throw Error(ErrorCode::kGateRejection, gate.message());
  const PriorSpec reference =
      make_prior_spec(PriorKind::kReference, gen, prepared.p(), prepared.n());
  PriorSpec jeffreys = reference;
  jeffreys.kind = PriorKind::kJeffreys;

  PriorsEvalResult out;
  json rows = json::array();
  std::ostringstream csv;
  csv << "row,ok,log_reference,log_jeffreys,logdet_psi_plus_u1,error\n";
  csv.precision(17);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    PriorsEvalRow row;
    row.psi = grid[k];
    double logdet1 = 0.0;
    try {
      if (grid[k].dim() != prepared.p()) {
        throw Error(ErrorCode::kDimensionMismatch, "grid matrix is not p x p");
      }
      const ShiftedCovariances sc = shift_covariances(grid[k], prepared.within());
      row.log_reference = log_prior(reference, sc);
      row.log_jeffreys = log_prior(jeffreys, sc);
      logdet1 = sc.shifted.front().logdet();
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
    json r{{"psi", matrix_json(row.psi.matrix())}, {"ok", row.ok}};
    if (row.ok) {
      r["log_reference"] = row.log_reference;
      r["log_jeffreys"] = row.log_jeffreys;
      csv << k << ",1," << row.log_reference << ',' << row.log_jeffreys << ',' << logdet1 << ",\n";
    } else {
      r["error"] = row.error;
      csv << k << ",0,,,,\"" << row.error << "\"\n";
    }
    rows.push_back(r);
    out.rows.push_back(std::move(row));
  }
  json doc;
  doc["tool"] = "ellipmeta";
  doc["version"] = ELLIPMETA_VERSION;
  doc["command"] = "priors-eval";
  doc["config"] = config_to_json(config);
  doc["j"] = {{"j1", reference.j.j1}, {"j2", reference.j.j2}};
  doc["rows"] = rows;
  out.document = doc.dump(2) + "\n";
  out.csv = csv.str();
  return out;
}

std::string coverage_document(const CoverageDesign& design, const CoverageResult& result) {
  json doc;
  doc["tool"] = "ellipmeta";
  doc["version"] = ELLIPMETA_VERSION;
  doc["command"] = "simulate-coverage";
  std::vector<std::string> priors, variants;
  for (auto k : design.priors) priors.emplace_back(to_string(k));
  for (auto v : design.variants) variants.emplace_back(to_string(v));
  doc["design"] = {{"p", design.p_values},
                   {"n", design.n_values},
                   {"tau2", design.tau2_values},
                   {"priors", priors},
                   {"variants", variants},
                   {"replications", design.replications},
                   {"draws", design.draws},
                   {"burn_in_fraction", design.burn_in_fraction},
                   {"level", design.level},
                   {"master_seed", design.master_seed}};
  json cells = json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"p", c.p},
                     {"n", c.n},
                     {"tau2", c.tau2},
                     {"prior", to_string(c.prior)},
                     {"variant", to_string(c.variant)},
                     {"replications", c.replications},
                     {"covered", c.covered},
                     {"coverage", c.coverage},
                     {"std_error", c.std_error},
                     {"mean_width", c.mean_width},
                     {"mean_acceptance", c.mean_acceptance}});
  }
  doc["cells"] = cells;
  return doc.dump(2) + "\n";
}

}  // namespace ellipmeta
