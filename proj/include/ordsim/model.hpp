#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ordsim/ordinal.hpp"
#include "ordsim/rng.hpp"
#include "ordsim/target.hpp"

namespace ordsim {

// One of the five model variants fit to a two-arm ordinal outcome.
//
// Parameter vectors are laid out as [U block | E block]: the U block holds
// j-1 unconstrained coordinates that map to the baseline (control-arm)
// category simplex via stick-breaking, carrying a flat Dirichlet prior; the
// E block holds the treatment-effect parameters, with independent
// Normal(0, sd) priors.
struct ModelSpec {
  enum class Variant { SepLogistic, PO, PPOUnconstrained, CPPO };

  Variant variant = Variant::PO;
  std::size_t j = 2;  // category count the model is fit to

  // SepLogistic only: the cut-point this dichotomized fit belongs to, in the
  // original data's labeling (k = 2..j_original).  Purely a label.
  std::size_t sep_cutpoint = 2;

  // CPPO only: fixed multipliers Gamma[m] on the shared increment, one per
  // cut-point m = k-2; Gamma[0] must be 0 so the first cut-point anchors zeta.
  std::vector<double> gamma_fixed;

  double prior_sd_effect = 100.0;
  double prior_sd_increment = 100.0;

  static ModelSpec sep_logistic(std::size_t cutpoint);
  static ModelSpec po(std::size_t j);
  static ModelSpec ppo_unconstrained(std::size_t j);
  static ModelSpec cppo_linear(std::size_t j);
  static ModelSpec cppo_last_diverge(std::size_t j);

  std::size_t u_dim() const { return j - 1; }
  std::size_t e_dim() const;
  std::size_t dim() const { return u_dim() + e_dim(); }

  // Stable identifier used in records and on the command line: one of
  // "sep-logistic", "po", "ppo-u", "cppo-linear", "cppo-last".
  const std::string& label() const { return label_; }

  std::string label_ = "po";
};

// The five analysis labels in their canonical reporting order.
const std::vector<std::string>& all_model_labels();

// Analysis spec from its stable label ("sep-logistic", "po", "ppo-u",
// "cppo-linear", "cppo-last") for j-category data; the sep-logistic result
// is the assembled all-cut-points analysis.  Throws UnknownKind otherwise.
ModelSpec model_by_label(const std::string& label, std::size_t j);

using ParamVector = std::vector<double>;

struct LogDensityResult {
  double logp = 0.0;
  ParamVector grad;
};

// Arm-level cumulative logits implied by a parameter vector: arm 0 gives the
// baseline intercepts, arm 1 adds the variant's effect shift per cut-point.
CumulativeLogits cumlogits_for_arm(const ModelSpec& spec, const ParamVector& p,
                                   int arm);

// Cut-point log-ORs theta_k implied by the parameters: beta replicated for
// PO, zeta + gamma_k for PPO-U, zeta + Gamma_k*gamma for CPPO, theta itself
// for SepLogistic (length 1).
std::vector<double> cutpoint_log_ors(const ModelSpec& spec, const ParamVector& p);

// Reentrant log-posterior evaluator with preallocated scratch.  Make one
// instance per chain; instances share nothing but the immutable spec/data.
class PosteriorTarget : public GradTarget {
 public:
  PosteriorTarget(const ModelSpec& spec, const OrdinalCounts& data);

  std::size_t dim() const override { return spec_.dim(); }
  double logp_grad(const double* x, double* grad) override;

  const ModelSpec& spec() const { return spec_; }

 private:
  ModelSpec spec_;
  OrdinalCounts data_;
  std::vector<double> suffix0_;  // arm-0 suffix count sums
  // Per-evaluation scratch, sized once in the constructor.
  std::vector<double> z_, lsa_, lsna_, logx_, xlin_, csum_, alpha_, eta_,
      logp1_, g_;
};

// One-shot evaluation of the log posterior density and its exact gradient.
// States whose implied category probabilities are not all positive get
// logp = -inf and a zero gradient.
LogDensityResult log_posterior(const ModelSpec& spec, const ParamVector& p,
                               const OrdinalCounts& data);

// Starting point: U block from smoothed pooled category frequencies through
// the inverse simplex transform, E block zero, then uniform jitter per
// coordinate, redrawn until the log density is finite (at most 100 tries).
ParamVector initial_point(const ModelSpec& spec, const OrdinalCounts& data,
                          RngStream& rng, double jitter = 1.0);

}  // namespace ordsim
