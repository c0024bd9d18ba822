#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ellipmeta/linalg.hpp"
#include "ellipmeta/priors.hpp"

namespace ellipmeta {

/// Proposal factorization of the independence sampler.
///   A: mu from its marginal t, then Psi | mu from a generalized inverse Wishart.
///   B: Psi from its marginal, then mu | Psi.
enum class Variant { kA, kB };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

struct SamplerConfig {
  Variant variant = Variant::kA;
  PriorKind prior_kind = PriorKind::kReference;
  std::int64_t draws = 100000;     // iterations per chain, burn-in included
  double burn_in_fraction = 0.10;  // in [0, 1)
  std::uint64_t seed = 20240601;
  int thin = 1;
  int chains = 1;

  /// Throws kInput when a field is out of range.
  void validate() const;
  std::int64_t burn_in_count() const;
  /// ceil((1 - burn_in) * draws / thin) with the burn-in rounded down.
  std::int64_t retained_per_chain() const;
};

/// Retained posterior sample of (mu, Psi), possibly merged over chains.
struct Draws {
  int p = 0;
  std::vector<Vector> mu;
  std::vector<SymMatrix> psi;
  std::vector<unsigned char> accepted;  // whether the move into this state was accepted
  std::vector<double> log_posterior;

  SamplerConfig config;
  std::vector<std::uint64_t> chain_seeds;
  std::int64_t iterations = 0;        // MH steps taken, all chains
  std::int64_t accepted_moves = 0;    // accepted MH steps, all chains
  double acceptance_rate = 0.0;
  std::vector<double> ess;            // per coordinate: mu_1..mu_p, vech(Psi)

  std::size_t size() const noexcept { return mu.size(); }
  bool empty() const noexcept { return mu.empty(); }
  /// Coordinate k of every draw: 0..p-1 index mu, the rest index vech(Psi).
  std::vector<double> coordinate(int k) const;
  int coordinate_count() const noexcept { return p + p * (p + 1) / 2; }
};

}  // namespace ellipmeta
