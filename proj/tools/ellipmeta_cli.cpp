// ellipmeta: objective Bayesian multivariate random-effects meta-analysis.
//
// Exit codes: 0 success, 2 validation failure, 3 propriety gate rejection,
// 4 input error, 1 anything else.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "ellipmeta/app.hpp"
#include "ellipmeta/error.hpp"
#include "ellipmeta/io.hpp"

namespace {

using namespace ellipmeta;

constexpr int kExitValidation = 2;
constexpr int kExitGate = 3;
constexpr int kExitInput = 4;

struct CliOptions {
  std::string model = "normal";
  std::optional<double> t_dof;
  bool rescale_u = false;
  std::string prior = "jeffreys";
  std::string variant = "A";
  std::int64_t draws = 100000;
  double burn_in = 0.10;
  int thin = 1;
  int chains = 1;
  std::uint64_t seed = 20240601;
  double level = 0.95;
  std::string input;
  std::string format;
  std::string out;
  int parallel = 1;
};

void add_model_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--model", o.model, "normal | t")->check(CLI::IsMember({"normal", "t"}));
  cmd->add_option("--t-dof", o.t_dof, "degrees of freedom d of the t model");
  cmd->add_flag("--rescale-u", o.rescale_u, "multiply every U_i by (d - 2) / d");
  cmd->add_option("--prior", o.prior, "reference | jeffreys")
      ->check(CLI::IsMember({"reference", "jeffreys"}));
}

void add_input_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--input", o.input, "dataset path")->required();
  cmd->add_option("--format", o.format, "json | csv (default: from the extension)")
      ->check(CLI::IsMember({"json", "csv"}));
}

void add_sampler_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--variant", o.variant, "proposal factorization A | B")
      ->check(CLI::IsMember({"A", "B", "a", "b"}));
  cmd->add_option("--draws", o.draws, "iterations per chain, burn-in included");
  cmd->add_option("--burn-in", o.burn_in, "burn-in fraction in [0, 1)");
  cmd->add_option("--thin", o.thin, "keep every k-th draw");
  cmd->add_option("--chains", o.chains, "number of chains");
  cmd->add_option("--seed", o.seed, "master seed (ELLIPMETA_SEED overrides)");
  cmd->add_option("--level", o.level, "credible level");
  cmd->add_option("--parallel", o.parallel, "worker threads");
}

RunConfig make_run_config(const CliOptions& o) {
  RunConfig c;
  c.model = parse_model_kind(o.model);
  c.t_dof = o.t_dof;
  c.rescale_u = o.rescale_u;
  c.prior = parse_prior_kind(o.prior);
  c.variant = parse_variant(o.variant);
  c.draws = o.draws;
  c.burn_in_fraction = o.burn_in;
  c.thin = o.thin;
  c.chains = o.chains;
  c.seed = seed_from_environment().value_or(o.seed);
  c.level = o.level;
  c.parallel = o.parallel;
  c.validate();
  return c;
}

Dataset load(const CliOptions& o) {
  const InputFormat f = o.format.empty() ? infer_input_format(o.input) : parse_input_format(o.format);
  return ingest(o.input, f);
}

void emit(const std::string& out_dir, const std::string& name, const std::string& text) {
  if (out_dir.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(out_dir);
  write_file((std::filesystem::path(out_dir) / name).string(), text);
}

void emit_sidecar(const std::string& out_dir, const std::string& name, const std::string& text) {
  if (out_dir.empty() || text.empty()) return;
  write_file((std::filesystem::path(out_dir) / name).string(), text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Objective Bayesian inference for the elliptical multivariate random-effects model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ELLIPMETA_VERSION);

  CliOptions o;

  auto* fit_cmd = app.add_subcommand("fit", "sample the posterior and summarize it");
  add_model_flags(fit_cmd, o);
  add_input_flags(fit_cmd, o);
  add_sampler_flags(fit_cmd, o);
  fit_cmd->add_option("--out", o.out, "output directory (summary.json, draws.csv, contours.csv)");

  auto* cov_cmd = app.add_subcommand("simulate-coverage", "coverage of the interval for mu_1");
  CoverageDesign design;
  std::vector<std::string> cov_priors{"reference", "jeffreys"};
  std::vector<std::string> cov_variants{"A"};
  cov_cmd->add_option("--p", design.p_values, "dimensions");
  cov_cmd->add_option("--n", design.n_values, "numbers of studies");
  cov_cmd->add_option("--tau2", design.tau2_values, "heterogeneity scales");
  cov_cmd->add_option("--priors", cov_priors, "reference and/or jeffreys");
  cov_cmd->add_option("--variants", cov_variants, "A and/or B");
  cov_cmd->add_option("--replications", design.replications, "replications per cell");
  cov_cmd->add_option("--draws", design.draws, "iterations per fit");
  cov_cmd->add_option("--burn-in", design.burn_in_fraction, "burn-in fraction");
  cov_cmd->add_option("--level", design.level, "credible level");
  cov_cmd->add_option("--seed", design.master_seed, "master seed (ELLIPMETA_SEED overrides)");
  cov_cmd->add_option("--parallel", design.parallel, "worker threads");
  cov_cmd->add_option("--out", o.out, "output directory (coverage.json, coverage.csv)");

  auto* val_cmd = app.add_subcommand("validate", "run the oracle checks");
  std::string scope = "all";
  ValidateOptions vopt;
  val_cmd->add_option("--scope", scope, "linalg | priors | samplers | all")
      ->check(CLI::IsMember({"linalg", "priors", "samplers", "all"}));
  val_cmd->add_option("--seed", vopt.seed, "seed (ELLIPMETA_SEED overrides)");
  val_cmd->add_option("--out", o.out, "output directory (validate.json)");

  auto* pri_cmd = app.add_subcommand("priors-eval", "log priors over a grid of Psi");
  add_model_flags(pri_cmd, o);
  add_input_flags(pri_cmd, o);
  std::string grid_path;
  pri_cmd->add_option("--grid", grid_path, "JSON array of p x p matrices (default: s I)");
  pri_cmd->add_option("--out", o.out, "output directory (priors.json, priors.csv)");

  auto* exp_cmd = app.add_subcommand("export", "convert a dataset to JSON");
  add_input_flags(exp_cmd, o);
  exp_cmd->add_option("--out", o.out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*fit_cmd) {
      const RunConfig config = make_run_config(o);
      const FitResult r = fit(config, load(o));
      emit(o.out, "summary.json", r.document);
      emit_sidecar(o.out, "draws.csv", r.draws_csv);
      emit_sidecar(o.out, "contours.csv", r.contours_csv);
      return 0;
    }
    if (*cov_cmd) {
      design.master_seed = seed_from_environment().value_or(design.master_seed);
      design.priors.clear();
      for (const auto& s : cov_priors) design.priors.push_back(parse_prior_kind(s));
      design.variants.clear();
      for (const auto& s : cov_variants) design.variants.push_back(parse_variant(s));
      const CoverageResult r = coverage_experiment(design);
      emit(o.out, "coverage.json", coverage_document(design, r));
      emit_sidecar(o.out, "coverage.csv", coverage_csv(r));
      return 0;
    }
    if (*val_cmd) {
      vopt.seed = seed_from_environment().value_or(vopt.seed);
      const ValidationResult r = validate(parse_validate_scope(scope), vopt);
      emit(o.out, "validate.json", r.document);
      if (!r.passed) {
        std::cerr << "validation failed\n";
        return kExitValidation;
      }
      return 0;
    }
    if (*pri_cmd) {
      const RunConfig config = make_run_config(o);
      const Dataset data = load(o);
      const auto grid = grid_path.empty() ? default_psi_grid(data.p()) : parse_psi_grid(read_file(grid_path));
      const PriorsEvalResult r = priors_eval(config, data, grid);
      emit(o.out, "priors.json", r.document);
      emit_sidecar(o.out, "priors.csv", r.csv);
      return 0;
    }
    if (*exp_cmd) {
      const std::string text = export_json(load(o));
      if (o.out.empty()) {
        std::cout << text;
      } else {
        write_file(o.out, text);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kGateRejection:
        return kExitGate;
      case ErrorCode::kInput:
      case ErrorCode::kNotPositiveDefinite:
      case ErrorCode::kDimensionMismatch:
      case ErrorCode::kInvalidDimension:
      case ErrorCode::kDegenerateProposal:
        return kExitInput;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
