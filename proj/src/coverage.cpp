#include <cmath>
#include <exception>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "ellipmeta/error.hpp"
#include "ellipmeta/mcmc.hpp"
#include "ellipmeta/report.hpp"

namespace ellipmeta {

namespace {

struct Scenario {
  int p;
  int n;
  std::size_t tau_index;
};

struct FitOutcome {
  bool covered = false;
  double width = 0.0;
  double acceptance = 0.0;
};

}  // namespace

CoverageResult coverage_experiment(const CoverageDesign& design) {
  if (design.replications < 1) throw Error(ErrorCode::kInput, "coverage needs at least one replication");
  if (!(design.level > 0.0 && design.level < 1.0)) {
    throw Error(ErrorCode::kDomain, "level must lie in (0, 1)");
  }
  const DensityGenerator gen = DensityGenerator::normal();

  std::vector<Scenario> scenarios;
  for (int p : design.p_values)
    for (int n : design.n_values)
      for (std::size_t t = 0; t < design.tau2_values.size(); ++t) scenarios.push_back({p, n, t});

  std::map<std::tuple<int, int, PriorKind>, PriorSpec> priors;
  for (const auto& s : scenarios) {
    for (PriorKind kind : design.priors) {
      const auto key = std::make_tuple(s.p, s.n, kind);
      if (priors.count(key) != 0) continue;
      const GateResult gate = propriety_gate(kind, s.p, s.n, gen);
      if (!gate.ok) {
        std::ostringstream os;
        os << "coverage design (p=" << s.p << ", n=" << s.n << ", " << to_string(kind)
           << "): " << gate.message();
        throw Error(ErrorCode::kGateRejection, os.str());
      }
      priors.emplace(key, make_prior_spec(kind, gen, s.p, s.n));
    }
  }

  const std::size_t fits_per_rep = design.priors.size() * design.variants.size();
  const std::size_t per_rep = scenarios.size() * fits_per_rep;
  const auto reps = static_cast<std::size_t>(design.replications);
  std::vector<FitOutcome> outcomes(reps * per_rep);
  std::vector<std::exception_ptr> errors(reps);

  auto replicate = [&](std::size_t r) {
    const std::uint64_t base = design.master_seed ^ static_cast<std::uint64_t>(r);
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
      const Scenario& sc = scenarios[si];
      Rng rng = make_rng(base, 1000 + si);
      Vector mu(sc.p);
      for (int k = 0; k < sc.p; ++k) {
        mu(k) = design.fixed_mu ? *design.fixed_mu : 1.0 + 4.0 * uniform01(rng);
      }
      const SymMatrix xi = random_spd(sc.p, 1.0, 4.0, rng);
      const SymMatrix psi = xi * design.tau2_values[sc.tau_index];
      std::vector<SymMatrix> u;
      for (int i = 0; i < sc.n; ++i) u.push_back(random_spd(sc.p, 1.0, 4.0, rng));
      const Matrix x = sample_model_data(mu, psi, u, gen, rng);
      const Dataset data({}, x, u);

      std::size_t f = 0;
      for (PriorKind kind : design.priors) {
        const PosteriorKernel kernel(data, priors.at(std::make_tuple(sc.p, sc.n, kind)));
        for (Variant variant : design.variants) {
          SamplerConfig cfg;
          cfg.variant = variant;
          cfg.prior_kind = kind;
          cfg.draws = design.draws;
          cfg.burn_in_fraction = design.burn_in_fraction;
          cfg.seed = derive_seed(base, si);
          const Draws d = run_chain(cfg, kernel);
          const Interval iv = equal_tailed_interval(d.coordinate(0), design.level);
          FitOutcome& o = outcomes[r * per_rep + si * fits_per_rep + f];
          o.covered = iv.contains(mu(0));
          o.width = iv.width();
          o.acceptance = d.acceptance_rate;
          ++f;
        }
      }
    }
  };

  const auto workers = static_cast<std::size_t>(std::max(1, design.parallel));
  auto work = [&](std::size_t w) {
    for (std::size_t r = w; r < reps; r += workers) {
      try {
        replicate(r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CoverageResult result;
  result.master_seed = design.master_seed;
  result.level = design.level;
  for (std::size_t si = 0; si < scenarios.size(); ++si) {
    std::size_t f = 0;
    for (PriorKind kind : design.priors) {
      for (Variant variant : design.variants) {
        CoverageCell cell;
        cell.p = scenarios[si].p;
        cell.n = scenarios[si].n;
        cell.tau2 = design.tau2_values[scenarios[si].tau_index];
        cell.prior = kind;
        cell.variant = variant;
        cell.replications = design.replications;
        double acc = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
          const FitOutcome& o = outcomes[r * per_rep + si * fits_per_rep + f];
          cell.covered += o.covered ? 1 : 0;
          cell.widths.push_back(o.width);
          acc += o.acceptance;
        }
        const double R = static_cast<double>(reps);
        cell.coverage = cell.covered / R;
        cell.std_error = std::sqrt(cell.coverage * (1.0 - cell.coverage) / R);
        double wsum = 0.0;
        for (double w : cell.widths) wsum += w;
        cell.mean_width = wsum / R;
        cell.mean_acceptance = acc / R;
        result.cells.push_back(std::move(cell));
        ++f;
      }
    }
  }
  return result;
}

}  // namespace ellipmeta
