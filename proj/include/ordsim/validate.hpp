#pragma once

#include <string>
#include <vector>

namespace ordsim {

// One verification check's outcome.  Failures are reported in-band, never
// thrown: a suite always returns every check it ran.
struct ValidateCheck {
  std::string suite;
  std::string name;
  bool pass = false;
  std::string detail;  // the numbers behind the verdict
};

// Analytic gradients of all five model variants against central finite
// differences (step 1e-5) at 100 random (parameters, data) points each;
// passes when the worst relative error is below 1e-6.  Small-magnitude
// coordinates are compared with the denominator floored at 1, where
// finite-difference roundoff (~1e-8 here) would otherwise swamp an exact
// gradient.
std::vector<ValidateCheck> validate_gradients();

// The proportional-odds posterior on a fixed seeded 3-category trial
// against a dense-grid numerical posterior: trapezoid integration on a
// 201^3 grid spanning 6 standard errors around the posterior mode, checked
// via the marginal medians of (alpha_2, alpha_3, beta) agreeing within
// 0.02.  Includes a containment check that the grid boundary carries no
// appreciable posterior mass.
std::vector<ValidateCheck> validate_oracle();

// The sampler against closed-form targets: a 5-dim standard normal and a
// 2-dim rho = 0.9 correlated normal (per-coordinate mean within 3 MCSE of
// 0, variance within 5% of truth, zero divergences), plus bit-exact replay
// of a chain under an identical configuration.
std::vector<ValidateCheck> validate_sampler();

// Data-generating analytics: Beta(1, 1) discretizes to exactly uniform
// bins, Beta(1.8, 1.8) discretizes symmetrically, and the three
// treatment-effect generators reproduce their closed-form theta vectors
// exactly.
std::vector<ValidateCheck> validate_dgm();

// Dispatch by name: "gradients", "oracle", "sampler", "dgm", or "all" (the
// four in that order).  Throws UnknownKind for anything else.
std::vector<ValidateCheck> validate_suite(const std::string& name);

bool all_passed(const std::vector<ValidateCheck>& checks);

}  // namespace ordsim
