#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ordsim/ordinal.hpp"
#include "ordsim/rng.hpp"

namespace ordsim {

// Beta density shape for the control-arm outcome distribution.
struct ControlShape {
  double a = 1.8;
  double b = 1.8;
  std::string name = "symmetric";

  static ControlShape symmetric() { return {1.8, 1.8, "symmetric"}; }
  static ControlShape skewed() { return {1.3, 0.9, "skewed"}; }
};

// Treatment-effect scenario for the cut-point log-ORs theta_k, k = 2..j.
struct PropScenario {
  enum class Kind { S1, S2, S3 };
  Kind kind = Kind::S1;

  // S1: theta_k ~ Normal(mean_log_or, sigma^2), jointly valid by rejection.
  double mean_log_or = 0.0;
  double sigma = 0.0;

  // S2: theta_k = zeta + gamma * (k - 2), a linear trend across cut-points.
  double zeta = 0.0;
  double gamma = 0.0;

  // S3: theta_k = 0 except at the top cut-point, where it is top_log_or.
  double top_log_or = 0.0;

  static PropScenario s1(double mean_log_or, double sigma);
  static PropScenario s2();  // zeta = log 0.8, gamma = 0.06
  static PropScenario s3(double top_log_or);

  // Short human-readable key, e.g. "s1-or1.10-sd0.05", "s2", "s3-or1.50".
  std::string key() const;
};

// A pair of arm-level outcome distributions plus the cut-point log-ORs that
// relate them; theta_true is the evaluation truth for a simulated replicate.
struct TruePair {
  Simplex pi0;
  Simplex pi1;
  std::vector<double> theta_true;  // entry k-2 holds theta_k, k = 2..j
};

// Discretize the Beta(a, b) density into j categories over equal-width bins.
Simplex discretize_beta(const ControlShape& shape, std::size_t j);

// Scenario 1: i.i.d. normal theta draws, rejected as a whole vector until the
// treatment cumulative logits are strictly decreasing (valid simplex).
// Throws RejectionExhausted after 1e6 failed attempts.
TruePair gen_scenario1(const Simplex& pi0, const PropScenario& s, RngStream& rng);

// Scenario 2: deterministic linear trend theta_k = zeta + gamma*(k-2).
// Throws InvalidScenario if the implied treatment simplex is invalid.
TruePair gen_scenario2(const Simplex& pi0, const PropScenario& s);

// Scenario 3: null effect everywhere except the top cut-point.
// Throws InvalidScenario if the implied treatment simplex is invalid.
TruePair gen_scenario3(const Simplex& pi0, const PropScenario& s);

// Dispatch on the scenario kind.
TruePair gen_true_pair(const Simplex& pi0, const PropScenario& s, RngStream& rng);

// Simulate one trial: Bernoulli(0.5) treatment allocation, then a multinomial
// outcome draw per arm.
OrdinalCounts sample_trial(const TruePair& tp, std::uint64_t n_obs, RngStream& rng);

// Normal(mean, sd^2) conditioned on (lower, upper) by inverse CDF.  sd = 0
// returns mean, or throws BoundsViolation if mean is outside the bounds.
double truncnorm_sample(double mean, double sd, double lower, double upper,
                        RngStream& rng);

}  // namespace ordsim
