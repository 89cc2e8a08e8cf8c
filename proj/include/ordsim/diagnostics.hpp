#pragma once

#include <cstddef>
#include <vector>

namespace ordsim {

// Draws for one scalar quantity, one sequence per chain.  All chains must
// hold the same number of draws.
using ChainDraws = std::vector<std::vector<double>>;

// Rank-normalized split potential-scale-reduction factor.  Chains are split
// in half (an odd middle draw is dropped), all splits are jointly converted
// to average ranks, mapped through the normal quantile function with the
// (r - 3/8) / (S + 1/4) offset, and the classic between/within variance
// ratio is taken on the transformed splits.  Constant input returns exactly
// 1 by convention.  Requires >= 2 chains with >= 4 draws each.
double split_rhat(const ChainDraws& chains);

// Effective sample sizes from split chains, via FFT autocovariance combined
// across chains and Geyer's initial-monotone-sequence truncation.  Bulk ESS
// rank-normalizes the draws first; tail ESS is the smaller of the ESS of
// the 5% and 95% exceedance indicators.  Constant input returns the total
// draw count by convention; results are capped at total * log10(total).
double ess_bulk(const ChainDraws& chains);
double ess_tail(const ChainDraws& chains);

// Central summary of one monitored quantity.
struct PosteriorSummary {
  double median = 0.0;
  double ci_low = 0.0;   // 2.5% quantile
  double ci_high = 0.0;  // 97.5% quantile
};

// Linear-interpolation quantile of the pooled draws (the same definition
// everywhere in this codebase, so downstream reimplementations can match
// bit-near-exactly).  Requires a non-empty sample and p in [0, 1].
double quantile(std::vector<double> draws, double p);

// Median and equal-tailed 95% interval.  Requires >= 2 draws.
PosteriorSummary summarize(const std::vector<double>& draws);

// Convergence record for one fitted model.
struct ParamDiagnostics {
  double rhat = 1.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
};

struct DiagnosticsBundle {
  std::vector<ParamDiagnostics> params;  // one entry per cut-point log-OR
  int n_divergent = 0;                   // post-warmup, summed over chains
  int max_treedepth_hits = 0;
  bool converged = false;

  // rhat < 1.01, bulk and tail ESS of at least 100 per chain, and zero
  // post-warmup divergences, across all parameters.
  void evaluate(unsigned chains);
};

}  // namespace ordsim
