#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ordsim/diagnostics.hpp"
#include "ordsim/model.hpp"
#include "ordsim/nuts.hpp"
#include "ordsim/ordinal.hpp"

namespace ordsim {

// Cut-point log-OR draws from one fitted analysis, chain identity retained.
struct PosteriorDraws {
  std::size_t n_chains = 0;
  std::size_t n_per_chain = 0;
  std::vector<std::size_t> cutpoints;  // data-scale labels k = 2..j
  std::vector<double> values;          // chain-major: [chain][draw][cut-point]

  std::size_t n_cutpoints() const { return cutpoints.size(); }
  double value(std::size_t chain, std::size_t draw, std::size_t cp) const {
    return values[(chain * n_per_chain + draw) * cutpoints.size() + cp];
  }
  // One cut-point's draws shaped as per-chain sequences, the diagnostics
  // input layout.
  ChainDraws chain_series(std::size_t cp) const;
  // All chains pooled, for posterior summaries.
  std::vector<double> pooled(std::size_t cp) const;
};

// A fitted analysis: draws, convergence diagnostics, and the divergence
// escalation trail.
struct ModelFit {
  PosteriorDraws draws;
  DiagnosticsBundle diagnostics;
  bool escalated = false;
  // When escalated: diagnostics of the abandoned first attempt.
  std::optional<DiagnosticsBundle> first_attempt;
};

// Fits the analysis to two-arm ordinal counts.  Chains start from
// initial_point under chain-specific seed streams and run sequentially, so
// the result depends only on (spec, data, cfg).  A sep-logistic spec built
// for the full data runs j-1 independent dichotomized fits and assembles
// them by cut-point.  If any post-warmup divergence occurs, the fit is
// retried once with target_accept 0.99 and max_treedepth 12, keeping the
// first attempt's diagnostics alongside the retry's.
ModelFit run_model(const ModelSpec& spec, const OrdinalCounts& data,
                   const SamplerConfig& cfg);

}  // namespace ordsim
