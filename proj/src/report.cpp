#include "ellipmeta/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "ellipmeta/error.hpp"

namespace ellipmeta {

namespace {

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CoordinateSummary summarize_coordinate(std::string name, std::vector<double> values, double level) {
  CoordinateSummary s;
  s.name = std::move(name);
  const double count = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  std::sort(values.begin(), values.end());
  s.median = quantile_sorted(values, 0.5);
  s.interval = {quantile_sorted(values, 0.5 * (1.0 - level)),
                quantile_sorted(values, 0.5 * (1.0 + level))};
  return s;
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::kDomain, "level must lie in (0, 1)");
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw Error(ErrorCode::kEmptyDraws, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Interval equal_tailed_interval(std::vector<double> values, double level) {
  check_level(level);
  if (values.empty()) throw Error(ErrorCode::kEmptyDraws, "interval of an empty sample");
  std::sort(values.begin(), values.end());
  return {quantile_sorted(values, 0.5 * (1.0 - level)), quantile_sorted(values, 0.5 * (1.0 + level))};
}

std::vector<std::string> coordinate_names(int p) {
  std::vector<std::string> names;
  for (int i = 0; i < p; ++i) names.push_back("mu" + std::to_string(i + 1));
  for (int j = 0; j < p; ++j)
    for (int i = j; i < p; ++i) names.push_back("psi" + std::to_string(i + 1) + std::to_string(j + 1));
  return names;
}

std::string config_hash(const SamplerConfig& c) {
  std::ostringstream os;
  os << to_string(c.variant) << '|' << to_string(c.prior_kind) << '|' << c.draws << '|'
     << fmt(c.burn_in_fraction) << '|' << c.seed << '|' << c.thin << '|' << c.chains;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SummaryReport summarize(const Draws& draws, double level) {
  check_level(level);
  if (draws.empty()) throw Error(ErrorCode::kEmptyDraws, "no draws to summarize");
  SummaryReport r;
  r.level = level;
  r.draws = draws.size();
  r.acceptance_rate = draws.acceptance_rate;
  r.seed = draws.config.seed;
  r.config_hash = config_hash(draws.config);
  const auto names = coordinate_names(draws.p);
  for (int k = 0; k < draws.coordinate_count(); ++k) {
    CoordinateSummary s = summarize_coordinate(names[static_cast<std::size_t>(k)],
                                               draws.coordinate(k), level);
    if (static_cast<std::size_t>(k) < draws.ess.size()) s.ess = draws.ess[static_cast<std::size_t>(k)];
    (k < draws.p ? r.mu : r.psi).push_back(std::move(s));
  }
  return r;
}

SummaryReport summarize(const Draws& draws, double level, const PosteriorKernel& kernel) {
  SummaryReport r = summarize(draws, level);
  r.rao_blackwell = posterior_moments_mu(draws, kernel);
  return r;
}

int RegionGrid::cell(double x, double y) const {
  const double fx = (x - x0) / dx;
  const double fy = (y - y0) / dy;
  if (!(fx >= 0.0 && fy >= 0.0)) return -1;
  const auto i = static_cast<long>(std::floor(fx));
  const auto j = static_cast<long>(std::floor(fy));
  if (i >= size || j >= size) return -1;
  return static_cast<int>(j * size + i);
}

bool CredibleRegion::contains(double x, double y) const {
  const int c = grid.cell(x, y);
  return c >= 0 && cells[static_cast<std::size_t>(c)] != 0;
}

std::size_t CredibleRegion::cell_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1));
}

double CredibleRegion::area() const {
  return static_cast<double>(cell_count()) * grid.dx * grid.dy;
}

namespace {

using Vertex = std::pair<int, int>;

// Boundary of the selected cells as closed rings, inside on the left.
std::vector<Polygon> trace_polygons(const std::vector<unsigned char>& cells, const RegionGrid& g) {
  const int n = g.size;
  auto in = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < n && j < n && cells[static_cast<std::size_t>(j * n + i)] != 0;
  };
  std::multimap<Vertex, Vertex> edges;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!in(i, j)) continue;
      if (!in(i, j - 1)) edges.emplace(Vertex{i, j}, Vertex{i + 1, j});
      if (!in(i + 1, j)) edges.emplace(Vertex{i + 1, j}, Vertex{i + 1, j + 1});
      if (!in(i, j + 1)) edges.emplace(Vertex{i + 1, j + 1}, Vertex{i, j + 1});
      if (!in(i - 1, j)) edges.emplace(Vertex{i, j + 1}, Vertex{i, j});
    }
  }
  std::vector<Polygon> out;
  while (!edges.empty()) {
    auto it = edges.begin();
    const Vertex start = it->first;
    std::vector<Vertex> ring{start};
    Vertex cur = it->second;
    edges.erase(it);
    while (cur != start) {
      ring.push_back(cur);
      auto next = edges.find(cur);
      if (next == edges.end()) break;
      cur = next->second;
      edges.erase(next);
    }
    Polygon poly;
    const std::size_t m = ring.size();
    for (std::size_t k = 0; k < m; ++k) {
      const Vertex& a = ring[(k + m - 1) % m];
      const Vertex& b = ring[k];
      const Vertex& c = ring[(k + 1) % m];
      const bool collinear = (b.first - a.first) * (c.second - b.second) ==
                             (b.second - a.second) * (c.first - b.first);
      if (collinear) continue;
      poly.push_back({g.x0 + b.first * g.dx, g.y0 + b.second * g.dy});
    }
    out.push_back(std::move(poly));
  }
  return out;
}

}  // namespace

CredibleRegions credible_region_2d(const Draws& draws, std::pair<int, int> coords,
                                   const std::vector<double>& levels, int grid_size) {
  if (draws.size() < kMinRegionDraws) {
    throw Error(ErrorCode::kEmptyDraws, "credible regions need at least 1000 retained draws");
  }
  if (draws.p < 2) throw Error(ErrorCode::kDomain, "credible regions need p >= 2");
  const int cc = draws.coordinate_count();
  if (coords.first < 0 || coords.second < 0 || coords.first >= cc || coords.second >= cc ||
      coords.first == coords.second) {
    throw Error(ErrorCode::kDomain, "invalid coordinate pair for a credible region");
  }
  if (grid_size < 2) throw Error(ErrorCode::kDomain, "grid size must be >= 2");
  for (double l : levels) check_level(l);

  const std::vector<double> xs = draws.coordinate(coords.first);
  const std::vector<double> ys = draws.coordinate(coords.second);
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  RegionGrid g;
  g.size = grid_size;
  const double wx = std::max(*xmax - *xmin, 1e-12);
  const double wy = std::max(*ymax - *ymin, 1e-12);
  g.x0 = *xmin - 0.01 * wx;
  g.y0 = *ymin - 0.01 * wy;
  g.dx = 1.02 * wx / grid_size;
  g.dy = 1.02 * wy / grid_size;

  const int n = grid_size;
  std::vector<double> hist(static_cast<std::size_t>(n * n), 0.0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const int c = g.cell(xs[k], ys[k]);
    if (c >= 0) hist[static_cast<std::size_t>(c)] += 1.0;
  }
  // Separable binomial smoothing; mass leaving the grid is dropped.
  auto at = [n](const std::vector<double>& h, int i, int j) {
    return (i < 0 || j < 0 || i >= n || j >= n) ? 0.0 : h[static_cast<std::size_t>(j * n + i)];
  };
  std::vector<double> tmp(hist.size()), smooth(hist.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      tmp[static_cast<std::size_t>(j * n + i)] =
          0.25 * at(hist, i - 1, j) + 0.5 * at(hist, i, j) + 0.25 * at(hist, i + 1, j);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      smooth[static_cast<std::size_t>(j * n + i)] =
          0.25 * at(tmp, i, j - 1) + 0.5 * at(tmp, i, j) + 0.25 * at(tmp, i, j + 1);

  std::vector<int> order(smooth.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return smooth[static_cast<std::size_t>(a)] > smooth[static_cast<std::size_t>(b)];
  });
  const double total = std::accumulate(smooth.begin(), smooth.end(), 0.0);

  CredibleRegions out;
  out.coords = coords;
  for (double level : levels) {
    CredibleRegion r;
    r.level = level;
    r.grid = g;
    r.cells.assign(smooth.size(), 0);
    double acc = 0.0;
    for (int idx : order) {
      if (acc >= level * total) break;
      r.cells[static_cast<std::size_t>(idx)] = 1;
      acc += smooth[static_cast<std::size_t>(idx)];
    }
    r.mass = acc / total;
    r.polygons = trace_polygons(r.cells, g);
    out.regions.push_back(std::move(r));
  }
  return out;
}

std::string draws_csv(const Draws& draws) {
  std::ostringstream os;
  os << "index,accepted,log_posterior";
  for (const auto& name : coordinate_names(draws.p)) os << ',' << name;
  os << '\n';
  for (std::size_t b = 0; b < draws.size(); ++b) {
    os << b << ',' << static_cast<int>(draws.accepted[b]) << ',' << fmt(draws.log_posterior[b]);
    for (Eigen::Index k = 0; k < draws.mu[b].size(); ++k) os << ',' << fmt(draws.mu[b](k));
    const Vector v = vech(draws.psi[b]);
    for (Eigen::Index k = 0; k < v.size(); ++k) os << ',' << fmt(v(k));
    os << '\n';
  }
  return os.str();
}

std::string contour_csv(const CredibleRegions& regions) {
  std::ostringstream os;
  os << "level,polygon,vertex,x,y\n";
  for (const auto& r : regions.regions) {
    for (std::size_t pi = 0; pi < r.polygons.size(); ++pi) {
      for (std::size_t vi = 0; vi < r.polygons[pi].size(); ++vi) {
        os << fmt(r.level) << ',' << pi << ',' << vi << ',' << fmt(r.polygons[pi][vi][0]) << ','
           << fmt(r.polygons[pi][vi][1]) << '\n';
      }
    }
  }
  return os.str();
}

std::string coverage_csv(const CoverageResult& result) {
  std::ostringstream os;
  os << "p,n,tau2,prior,variant,replications,covered,coverage,std_error,mean_width,mean_acceptance\n";
  for (const auto& c : result.cells) {
    os << c.p << ',' << c.n << ',' << fmt(c.tau2) << ',' << to_string(c.prior) << ','
       << to_string(c.variant) << ',' << c.replications << ',' << c.covered << ',' << fmt(c.coverage)
       << ',' << fmt(c.std_error) << ',' << fmt(c.mean_width) << ',' << fmt(c.mean_acceptance)
       << '\n';
  }
  return os.str();
}

}  // namespace ellipmeta
