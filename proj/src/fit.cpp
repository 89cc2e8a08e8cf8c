#include "ordsim/fit.hpp"

#include <string>
#include <utility>

#include "ordsim/errors.hpp"
#include "ordsim/rng.hpp"

namespace ordsim {
namespace {

// One complete multi-chain sampling pass for a single spec; fills diag with
// per-cut-point convergence measures and whole-fit counters.
PosteriorDraws sample_analysis(const ModelSpec& spec,
                               const OrdinalCounts& data,
                               const SamplerConfig& cfg,
                               const std::vector<std::size_t>& labels,
                               DiagnosticsBundle& diag) {
  PosteriorDraws out;
  out.n_chains = cfg.chains;
  out.n_per_chain = cfg.post_warmup_per_chain;
  out.cutpoints = labels;
  const std::size_t ncp = labels.size();
  out.values.resize(std::size_t(cfg.chains) * out.n_per_chain * ncp);

  diag = DiagnosticsBundle{};
  for (unsigned c = 0; c < cfg.chains; ++c) {
    RngStream init_rng(mix_key(mix_key(cfg.seed, fnv1a64("fit-init")), c));
    const ParamVector init = initial_point(spec, data, init_rng);
    PosteriorTarget target(spec, data);
    const ChainOutput chain = nuts_chain(target, init, cfg, c);
    diag.n_divergent += chain.n_divergent;
    diag.max_treedepth_hits += chain.max_treedepth_hits;
    for (std::size_t d = 0; d < chain.draws.size(); ++d) {
      const std::vector<double> theta = cutpoint_log_ors(spec, chain.draws[d]);
      double* row = &out.values[(std::size_t(c) * out.n_per_chain + d) * ncp];
      for (std::size_t m = 0; m < ncp; ++m) row[m] = theta[m];
    }
  }

  diag.params.resize(ncp);
  for (std::size_t m = 0; m < ncp; ++m) {
    const ChainDraws series = out.chain_series(m);
    diag.params[m].rhat = split_rhat(series);
    diag.params[m].ess_bulk = ess_bulk(series);
    diag.params[m].ess_tail = ess_tail(series);
  }
  diag.evaluate(cfg.chains);
  return out;
}

SamplerConfig escalated_config(const SamplerConfig& cfg) {
  SamplerConfig esc = cfg;
  esc.target_accept = 0.99;
  esc.max_treedepth = 12;
  esc.seed = mix_key(cfg.seed, fnv1a64("escalation-refit"));
  return esc;
}

// Fit one spec under the single-escalation policy: any post-warmup
// divergence buys one retry with gentler integration.
ModelFit fit_with_escalation(const ModelSpec& spec, const OrdinalCounts& data,
                             const SamplerConfig& cfg,
                             const std::vector<std::size_t>& labels) {
  ModelFit fit;
  fit.draws = sample_analysis(spec, data, cfg, labels, fit.diagnostics);
  if (fit.diagnostics.n_divergent == 0) return fit;

  ModelFit retry;
  retry.draws =
      sample_analysis(spec, data, escalated_config(cfg), labels,
                      retry.diagnostics);
  retry.escalated = true;
  retry.first_attempt = std::move(fit.diagnostics);
  return retry;
}

}  // namespace

ChainDraws PosteriorDraws::chain_series(std::size_t cp) const {
  ChainDraws series(n_chains);
  for (std::size_t c = 0; c < n_chains; ++c) {
    series[c].reserve(n_per_chain);
    for (std::size_t d = 0; d < n_per_chain; ++d)
      series[c].push_back(value(c, d, cp));
  }
  return series;
}

std::vector<double> PosteriorDraws::pooled(std::size_t cp) const {
  std::vector<double> out;
  out.reserve(n_chains * n_per_chain);
  for (std::size_t c = 0; c < n_chains; ++c)
    for (std::size_t d = 0; d < n_per_chain; ++d)
      out.push_back(value(c, d, cp));
  return out;
}

ModelFit run_model(const ModelSpec& spec, const OrdinalCounts& data,
                   const SamplerConfig& cfg) {
  cfg.validate();
  validate_counts(data);
  const std::size_t j = data.j();

  const bool assembled =
      spec.variant == ModelSpec::Variant::SepLogistic && spec.sep_cutpoint == 0;
  if (!assembled) {
    std::vector<std::size_t> labels;
    if (spec.variant == ModelSpec::Variant::SepLogistic) {
      labels.push_back(spec.sep_cutpoint);
    } else {
      for (std::size_t k = 2; k <= spec.j; ++k) labels.push_back(k);
    }
    return fit_with_escalation(spec, data, cfg, labels);
  }

  if (spec.j != j)
    throw ShapeMismatch("run_model: sep-logistic spec was built for " +
                        std::to_string(spec.j) + " categories, data has " +
                        std::to_string(j));

  // Independent dichotomized fits, one per cut-point, assembled into a
  // single result keyed by the original category labels.
  ModelFit combined;
  combined.draws.n_chains = cfg.chains;
  combined.draws.n_per_chain = cfg.post_warmup_per_chain;
  for (std::size_t k = 2; k <= j; ++k) combined.draws.cutpoints.push_back(k);
  const std::size_t ncp = j - 1;
  combined.draws.values.resize(std::size_t(cfg.chains) *
                               cfg.post_warmup_per_chain * ncp);
  combined.diagnostics.params.resize(ncp);
  DiagnosticsBundle first;
  first.params.resize(ncp);
  bool any_escalated = false;

  for (std::size_t k = 2; k <= j; ++k) {
    SamplerConfig sub_cfg = cfg;
    sub_cfg.seed = mix_key(mix_key(cfg.seed, fnv1a64("dichotomized")), k);
    const OrdinalCounts sub_data = dichotomize(data, k);
    const ModelFit sub = fit_with_escalation(ModelSpec::sep_logistic(k),
                                             sub_data, sub_cfg, {k});

    const std::size_t m = k - 2;
    for (std::size_t c = 0; c < combined.draws.n_chains; ++c)
      for (std::size_t d = 0; d < combined.draws.n_per_chain; ++d)
        combined.draws.values[(c * combined.draws.n_per_chain + d) * ncp + m] =
            sub.draws.value(c, d, 0);

    combined.diagnostics.params[m] = sub.diagnostics.params[0];
    combined.diagnostics.n_divergent += sub.diagnostics.n_divergent;
    combined.diagnostics.max_treedepth_hits +=
        sub.diagnostics.max_treedepth_hits;

    const DiagnosticsBundle& before =
        sub.escalated ? *sub.first_attempt : sub.diagnostics;
    first.params[m] = before.params[0];
    first.n_divergent += before.n_divergent;
    first.max_treedepth_hits += before.max_treedepth_hits;
    any_escalated = any_escalated || sub.escalated;
  }

  combined.diagnostics.evaluate(cfg.chains);
  combined.escalated = any_escalated;
  if (any_escalated) {
    first.evaluate(cfg.chains);
    combined.first_attempt = std::move(first);
  }
  return combined;
}

}  // namespace ordsim
