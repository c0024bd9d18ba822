#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ellipmeta/draws.hpp"
#include "ellipmeta/posterior.hpp"

namespace ellipmeta {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
  double width() const noexcept { return upper - lower; }
};

/// Linear-interpolation quantile (type 7) of ascending-sorted values.
double quantile_sorted(const std::vector<double>& sorted, double prob);

/// Interval between the (1-level)/2 and (1+level)/2 empirical quantiles.
/// Throws kEmptyDraws on empty input and kDomain unless 0 < level < 1.
Interval equal_tailed_interval(std::vector<double> values, double level);

struct CoordinateSummary {
  std::string name;  // mu1, ..., psi11, psi21, ...
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  Interval interval;
  double ess = 0.0;
};

struct SummaryReport {
  double level = 0.95;
  std::size_t draws = 0;
  std::vector<CoordinateSummary> mu;
  std::vector<CoordinateSummary> psi;  // vech order
  std::optional<MuMoments> rao_blackwell;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Raw moments, medians and equal-tailed intervals of every coordinate.
SummaryReport summarize(const Draws& draws, double level);
/// Same, plus Rao-Blackwellized moments of mu.
SummaryReport summarize(const Draws& draws, double level, const PosteriorKernel& kernel);

/// FNV-1a of the sampler configuration, as 16 hex digits.
std::string config_hash(const SamplerConfig& config);

/// Coordinate names in Draws::coordinate order.
std::vector<std::string> coordinate_names(int p);

struct RegionGrid {
  double x0 = 0.0;  // lower-left corner
  double y0 = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  int size = 0;
  /// Cell index of (x, y), or -1 outside the grid.
  int cell(double x, double y) const;
};

using Polygon = std::vector<std::array<double, 2>>;  // closed ring, first vertex not repeated

struct CredibleRegion {
  double level = 0.0;
  RegionGrid grid;
  std::vector<unsigned char> cells;  // size*size, row-major in y
  std::vector<Polygon> polygons;
  double mass = 0.0;  // smoothed histogram mass actually enclosed

  bool contains(double x, double y) const;
  double area() const;
  std::size_t cell_count() const;
};

struct CredibleRegions {
  std::pair<int, int> coords;
  std::vector<CredibleRegion> regions;  // in the order of the requested levels
};

inline constexpr int kDefaultRegionGrid = 200;
inline constexpr std::size_t kMinRegionDraws = 1000;

/// Histogram highest-density regions of a pair of coordinates (as indexed
/// by Draws::coordinate). The histogram spans the bounding box padded by 1%
/// per side and is smoothed once with the [1 2 1]/4 kernel in each
/// direction. Throws kEmptyDraws below kMinRegionDraws draws and kDomain
/// for invalid levels or coordinates.
CredibleRegions credible_region_2d(const Draws& draws, std::pair<int, int> coords,
                                   const std::vector<double>& levels,
                                   int grid_size = kDefaultRegionGrid);

struct CoverageDesign {
  std::vector<int> p_values{2};
  std::vector<int> n_values{10};
  std::vector<double> tau2_values{0.25, 1.0};
  std::vector<PriorKind> priors{PriorKind::kReference, PriorKind::kJeffreys};
  std::vector<Variant> variants{Variant::kA};
  int replications = 300;
  std::int64_t draws = 20000;
  double burn_in_fraction = 0.10;
  double level = 0.95;
  std::uint64_t master_seed = 1;
  std::optional<double> fixed_mu;  // every element of mu; drawn from U[1, 5] otherwise
  int parallel = 1;
};

struct CoverageCell {
  int p = 0;
  int n = 0;
  double tau2 = 0.0;
  PriorKind prior = PriorKind::kReference;
  Variant variant = Variant::kA;
  int replications = 0;
  int covered = 0;
  double coverage = 0.0;
  double std_error = 0.0;  // binomial
  double mean_width = 0.0;
  double mean_acceptance = 0.0;
  std::vector<double> widths;  // per replication
};

struct CoverageResult {
  std::uint64_t master_seed = 0;
  double level = 0.95;
  std::vector<CoverageCell> cells;
};

/// Coverage of the equal-tailed interval for mu_1 under the normal model.
/// Replication r draws its data from seed master_seed ^ r; all priors and
/// variants of one replication see the same data and sampler seed.
CoverageResult coverage_experiment(const CoverageDesign& design);

std::string draws_csv(const Draws& draws);
std::string contour_csv(const CredibleRegions& regions);
std::string coverage_csv(const CoverageResult& result);

}  // namespace ellipmeta
