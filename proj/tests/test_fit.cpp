#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "ordsim/dgm.hpp"
#include "ordsim/errors.hpp"
#include "ordsim/fit.hpp"

using namespace ordsim;

namespace {

// A simulated two-arm trial whose cut-point log-ORs all equal `log_or`.
OrdinalCounts proportional_trial(std::size_t j, double log_or,
                                 std::uint64_t n_obs, std::uint64_t seed) {
  RngStream rng(seed);
  const Simplex pi0 = discretize_beta(ControlShape::symmetric(), j);
  const TruePair tp = gen_true_pair(pi0, PropScenario::s1(log_or, 0.0), rng);
  return sample_trial(tp, n_obs, rng);
}

SamplerConfig quick_config(std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.chains = 4;
  cfg.warmup = 500;
  cfg.post_warmup_per_chain = 750;
  cfg.seed = seed;
  return cfg;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Log odds ratio of the 2x2 table from dichotomizing at cut-point k.
double empirical_log_or(const OrdinalCounts& data, std::size_t k) {
  const OrdinalCounts d = dichotomize(data, k);
  return std::log(static_cast<double>(d.treatment[1])) -
         std::log(static_cast<double>(d.treatment[0])) -
         std::log(static_cast<double>(d.control[1])) +
         std::log(static_cast<double>(d.control[0]));
}

}  // namespace

TEST_CASE("proportional odds fit recovers a common log-OR") {
  const double truth = std::log(1.5);
  const OrdinalCounts data = proportional_trial(3, truth, 4000, 0xF17A);
  const ModelFit fit = run_model(ModelSpec::po(3), data, quick_config(21));

  REQUIRE(fit.draws.cutpoints == std::vector<std::size_t>{2, 3});
  REQUIRE(fit.draws.n_chains == 4);
  REQUIRE(fit.draws.n_per_chain == 750);
  REQUIRE(fit.draws.values.size() == 4 * 750 * 2);

  // The single effect parameter is replicated across cut-points, so the two
  // columns must agree draw for draw.
  for (std::size_t c = 0; c < fit.draws.n_chains; ++c) {
    for (std::size_t d = 0; d < fit.draws.n_per_chain; ++d) {
      REQUIRE(fit.draws.value(c, d, 0) == fit.draws.value(c, d, 1));
    }
  }

  const std::vector<double> pooled = fit.draws.pooled(0);
  REQUIRE(pooled.size() == 4 * 750);
  const double med = summarize(pooled).median;
  const double sd = sd_of(pooled);
  CHECK(std::fabs(med - truth) < 3.0 * sd);

  REQUIRE(fit.diagnostics.params.size() == 2);
  for (const ParamDiagnostics& pd : fit.diagnostics.params) {
    CHECK(pd.rhat < 1.01);
    CHECK(pd.ess_bulk >= 400.0);
    CHECK(pd.ess_tail >= 400.0);
  }
  CHECK(fit.diagnostics.n_divergent == 0);
  CHECK(fit.diagnostics.converged);
  CHECK_FALSE(fit.escalated);
  CHECK_FALSE(fit.first_attempt.has_value());
}

TEST_CASE("unconstrained partial fit brackets the pooled effect") {
  const double truth = std::log(1.5);
  const OrdinalCounts data = proportional_trial(3, truth, 4000, 0xF17A);

  const ModelFit po = run_model(ModelSpec::po(3), data, quick_config(22));
  const double po_med = summarize(po.draws.pooled(0)).median;

  const ModelFit ppo =
      run_model(ModelSpec::ppo_unconstrained(3), data, quick_config(23));
  REQUIRE(ppo.draws.cutpoints == std::vector<std::size_t>{2, 3});
  for (std::size_t cp = 0; cp < ppo.draws.n_cutpoints(); ++cp) {
    const PosteriorSummary s = summarize(ppo.draws.pooled(cp));
    CHECK(s.ci_low < po_med);
    CHECK(s.ci_high > po_med);
  }
  CHECK(ppo.diagnostics.converged);
}

TEST_CASE("dichotomized fits assemble across cut-points and replay exactly") {
  const OrdinalCounts data = proportional_trial(4, std::log(1.3), 3000, 0x5EB1);
  const ModelSpec spec = model_by_label("sep-logistic", 4);
  SamplerConfig cfg = quick_config(31);
  // The dichotomized intercept/effect posteriors are correlated enough that
  // a diagonal metric mixes with an autocorrelation time around five, so the
  // R-hat gate needs a little more than the minimal draw budget.
  cfg.warmup = 600;
  cfg.post_warmup_per_chain = 2000;

  const ModelFit fit = run_model(spec, data, cfg);
  REQUIRE(fit.draws.cutpoints == std::vector<std::size_t>{2, 3, 4});
  REQUIRE(fit.draws.values.size() == 4 * 2000 * 3);

  // With a diffuse prior each dichotomized posterior should sit on top of
  // the observed 2x2 log odds ratio.
  for (std::size_t cp = 0; cp < fit.draws.n_cutpoints(); ++cp) {
    const std::vector<double> pooled = fit.draws.pooled(cp);
    const double med = summarize(pooled).median;
    const double target = empirical_log_or(data, fit.draws.cutpoints[cp]);
    CHECK(std::fabs(med - target) < 3.0 * sd_of(pooled));
  }
  CHECK(fit.diagnostics.params.size() == 3);
  CHECK(fit.diagnostics.converged);

  const ModelFit replay = run_model(spec, data, cfg);
  REQUIRE(replay.draws.values == fit.draws.values);
  CHECK(replay.escalated == fit.escalated);
}

TEST_CASE("post-warmup divergences trigger exactly one escalated refit") {
  const OrdinalCounts data = proportional_trial(3, std::log(1.2), 500, 0xD1CE);
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 200;
  cfg.post_warmup_per_chain = 250;
  cfg.seed = 77;
  // An absurdly strict energy-error threshold makes routine trajectories
  // count as divergent on both attempts.
  cfg.divergence_energy_threshold = 0.02;

  const ModelFit fit = run_model(ModelSpec::po(3), data, cfg);
  CHECK(fit.escalated);
  REQUIRE(fit.first_attempt.has_value());
  CHECK(fit.first_attempt->n_divergent > 0);
  CHECK(fit.diagnostics.n_divergent > 0);
  CHECK_FALSE(fit.diagnostics.converged);
  // The retry's draws are kept in full despite the flags.
  CHECK(fit.draws.values.size() == 2 * 250 * 2);
  for (double v : fit.draws.values) CHECK(std::isfinite(v));
}

TEST_CASE("analysis specs come from stable labels") {
  const ModelSpec po = model_by_label("po", 5);
  CHECK(po.variant == ModelSpec::Variant::PO);
  CHECK(po.j == 5);
  CHECK(po.e_dim() == 1);

  const ModelSpec ppo = model_by_label("ppo-u", 5);
  CHECK(ppo.variant == ModelSpec::Variant::PPOUnconstrained);
  CHECK(ppo.e_dim() == 4);

  const ModelSpec lin = model_by_label("cppo-linear", 5);
  CHECK(lin.gamma_fixed == std::vector<double>{0.0, 1.0, 2.0, 3.0});

  const ModelSpec last = model_by_label("cppo-last", 5);
  CHECK(last.gamma_fixed == std::vector<double>{0.0, 0.0, 0.0, 1.0});

  const ModelSpec sep = model_by_label("sep-logistic", 4);
  CHECK(sep.variant == ModelSpec::Variant::SepLogistic);
  CHECK(sep.j == 4);

  CHECK_THROWS_AS(model_by_label("logit", 3), UnknownKind);

  // The assembled spec is an analysis plan, not a directly fittable target.
  OrdinalCounts data;
  data.control = {40, 30, 20, 10};
  data.treatment = {35, 30, 20, 15};
  CHECK_THROWS_AS(PosteriorTarget(sep, data), ShapeMismatch);
}
