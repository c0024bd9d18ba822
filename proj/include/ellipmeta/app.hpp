#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ellipmeta/dataset.hpp"
#include "ellipmeta/draws.hpp"
#include "ellipmeta/elliptical.hpp"
#include "ellipmeta/oracle.hpp"
#include "ellipmeta/report.hpp"

namespace ellipmeta {

enum class ModelKind { kNormal, kStudentT };

const char* to_string(ModelKind m);
ModelKind parse_model_kind(const std::string& s);

/// Everything a fit depends on. Echoed into every output document.
struct RunConfig {
  ModelKind model = ModelKind::kNormal;
  std::optional<double> t_dof;  // required for the t model
  bool rescale_u = false;       // multiply U_i by (d - 2) / d
  PriorKind prior = PriorKind::kJeffreys;
  Variant variant = Variant::kA;
  std::int64_t draws = 100000;
  double burn_in_fraction = 0.10;
  int thin = 1;
  int chains = 1;
  std::uint64_t seed = 20240601;
  double level = 0.95;
  int parallel = 1;  // threads; never changes the result

  /// Throws kInput for inconsistent settings.
  void validate() const;
  DensityGenerator generator() const;
  SamplerConfig sampler() const;
  /// The dataset the model actually sees (rescaled when requested).
  Dataset prepare(const Dataset& data) const;
};

std::string run_config_json(const RunConfig& config);
/// Reads the "config" member of a fit document (or a bare config object).
RunConfig run_config_from_json(const std::string& text);

/// Seed override from ELLIPMETA_SEED, if set and numeric.
std::optional<std::uint64_t> seed_from_environment();

struct FitResult {
  SummaryReport summary;
  Draws draws;
  std::optional<CredibleRegions> regions;  // mu1 x mu2, p >= 2
  std::string document;                    // JSON
  std::string draws_csv;
  std::string contours_csv;
};

inline const std::vector<double> kRegionLevels{0.90, 0.95, 0.99};

/// Gate rejection surfaces as Error(kGateRejection) carrying the reasons.
FitResult fit(const RunConfig& config, const Dataset& data);

enum class ValidateScope { kLinalg, kPriors, kSamplers, kAll };
ValidateScope parse_validate_scope(const std::string& s);

struct ValidateOptions {
  std::uint64_t seed = 20240601;
  std::int64_t fisher_samples = 200000;
  double dof_offset = 0.0;  // negative control: corrupt the proposal sampler
};

struct ValidationResult {
  bool passed = true;
  std::vector<OracleReport> reports;
  std::string document;
};

ValidationResult validate(ValidateScope scope, const ValidateOptions& options = {});

struct PriorsEvalRow {
  SymMatrix psi;
  bool ok = false;
  double log_reference = 0.0;
  double log_jeffreys = 0.0;
  std::string error;
};

struct PriorsEvalResult {
  std::vector<PriorsEvalRow> rows;
  std::string document;
  std::string csv;
};

/// Unnormalized log priors over a grid of Psi. A grid entry whose shifted
/// covariances are not SPD is flagged and skipped.
PriorsEvalResult priors_eval(const RunConfig& config, const Dataset& data,
                             const std::vector<SymMatrix>& grid);
/// s I for s in {0, 0.25, 0.5, 1, 2, 4, 8}.
std::vector<SymMatrix> default_psi_grid(int p);
/// JSON array of p x p matrices.
std::vector<SymMatrix> parse_psi_grid(const std::string& text);

std::string coverage_document(const CoverageDesign& design, const CoverageResult& result);
std::string oracle_document(const std::vector<OracleReport>& reports, const std::string& scope);

}  // namespace ellipmeta
