#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ordsim {

// Aggregated category counts for a two-arm trial: arm 0 is control, arm 1 is
// treatment; each arm holds one count per ordinal category 1..j.
struct OrdinalCounts {
  std::vector<std::uint64_t> control;
  std::vector<std::uint64_t> treatment;

  std::size_t j() const { return control.size(); }

  const std::vector<std::uint64_t>& arm(int a) const {
    return a == 0 ? control : treatment;
  }
  std::vector<std::uint64_t>& arm(int a) { return a == 0 ? control : treatment; }

  std::uint64_t arm_total(int a) const;
};

// Throws ShapeMismatch if the arms differ in length or j < 2, and
// BoundsViolation if an arm has no observations at all.
void validate_counts(const OrdinalCounts& counts);

// Probability vector over the j ordinal categories.
struct Simplex {
  std::vector<double> probs;

  std::size_t j() const { return probs.size(); }

  // All entries nonnegative and summing to 1 within tol.
  bool valid(double tol = 1e-12) const;
};

// Cumulative logits eta[k-2] = logit P(Y >= k) for cut-points k = 2..j.
// Higher category = event, so a valid vector is strictly decreasing.
struct CumulativeLogits {
  std::vector<double> eta;

  std::size_t n_cutpoints() const { return eta.size(); }

  bool strictly_decreasing() const;
};

// Inverse cumulative-logit map.  Purely algebraic: non-monotone eta yields
// negative entries, and the caller decides whether that is an error.
Simplex probs_from_cumlogits(const CumulativeLogits& eta);

// Forward cumulative-logit map.  Throws DegenerateTail when some tail
// probability P(Y >= k) is 0 or 1, where the logit is undefined.
CumulativeLogits cumlogits_from_probs(const Simplex& p);

// Result of the stick-breaking transform.  Alongside the simplex point it
// exposes the intermediate stick fractions and survivor tails that gradient
// code needs, plus the log-Jacobian that carries the flat Dirichlet prior.
struct StickBreak {
  Simplex simplex;
  std::vector<double> z;          // stick fractions, size j-1
  std::vector<double> survivors;  // survivors[t] = P(Y >= t+1), size j, [0] = 1
  double log_jacobian = 0.0;
};

// Bijection from R^{j-1} onto the open simplex interior (j = u.size() + 1),
// using stick-breaking with centering offsets so u = 0 maps to the uniform
// simplex point.  With a Dirichlet(1,...,1) target the whole log prior
// contribution is exactly log_jacobian.
StickBreak simplex_from_unconstrained(const std::vector<double>& u);

// Inverse of simplex_from_unconstrained.  Throws DegenerateTail when a stick
// fraction lands on the boundary of (0,1).
std::vector<double> unconstrained_from_simplex(const Simplex& p);

// Collapse to a binary outcome at cut-point k (2 <= k <= j): output category 2
// aggregates original categories >= k (the event), category 1 the rest.
// Throws BoundsViolation for k outside 2..j.
OrdinalCounts dichotomize(const OrdinalCounts& counts, std::size_t k);

}  // namespace ordsim
