#include "ordsim/dgm.hpp"

#include <cmath>
#include <cstdio>

#include "ordsim/errors.hpp"
#include "ordsim/special.hpp"

namespace ordsim {

namespace {

constexpr int kRejectionCap = 1000000;

std::string format_or(double log_or) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", std::exp(log_or));
  return buf;
}

// Build the treatment arm from control logits plus per-cut-point shifts.
// Returns false if the shifted logits are not strictly decreasing.
bool apply_shifts(const CumulativeLogits& alpha, const std::vector<double>& theta,
                  Simplex* pi1) {
  CumulativeLogits eta;
  eta.eta.resize(alpha.eta.size());
  for (std::size_t m = 0; m < alpha.eta.size(); ++m) {
    eta.eta[m] = alpha.eta[m] + theta[m];
  }
  if (!eta.strictly_decreasing()) return false;
  *pi1 = probs_from_cumlogits(eta);
  return pi1->valid(1e-12);
}

}  // namespace

PropScenario PropScenario::s1(double mean_log_or, double sigma) {
  PropScenario s;
  s.kind = Kind::S1;
  s.mean_log_or = mean_log_or;
  s.sigma = sigma;
  return s;
}

PropScenario PropScenario::s2() {
  PropScenario s;
  s.kind = Kind::S2;
  s.zeta = std::log(0.8);
  s.gamma = 0.06;
  return s;
}

PropScenario PropScenario::s3(double top_log_or) {
  PropScenario s;
  s.kind = Kind::S3;
  s.top_log_or = top_log_or;
  return s;
}

std::string PropScenario::key() const {
  switch (kind) {
    case Kind::S1: {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.2f", sigma);
      return "s1-or" + format_or(mean_log_or) + "-sd" + buf;
    }
    case Kind::S2:
      return "s2";
    case Kind::S3:
      return "s3-or" + format_or(top_log_or);
  }
  return "";
}

Simplex discretize_beta(const ControlShape& shape, std::size_t j) {
  if (j < 2) throw ShapeMismatch("discretize_beta: need at least 2 categories");
  Simplex out;
  out.probs.resize(j);
  double prev = 0.0;
  for (std::size_t k = 1; k < j; ++k) {
    const double cdf = reg_inc_beta(shape.a, shape.b, static_cast<double>(k) / j);
    out.probs[k - 1] = cdf - prev;
    prev = cdf;
  }
  out.probs[j - 1] = 1.0 - prev;
  return out;
}

TruePair gen_scenario1(const Simplex& pi0, const PropScenario& s, RngStream& rng) {
  const CumulativeLogits alpha = cumlogits_from_probs(pi0);
  const std::size_t m = alpha.eta.size();
  TruePair tp;
  tp.pi0 = pi0;
  tp.theta_true.assign(m, s.mean_log_or);

  if (s.sigma == 0.0) {
    if (s.mean_log_or == 0.0) {
      tp.pi1 = pi0;  // exact null: no round trip through logit space
      return tp;
    }
    // Constant shift preserves strict monotonicity, so no rejection needed.
    if (!apply_shifts(alpha, tp.theta_true, &tp.pi1)) {
      throw InvalidScenario("gen_scenario1: constant shift broke the simplex");
    }
    return tp;
  }

  for (int attempt = 0; attempt < kRejectionCap; ++attempt) {
    for (std::size_t i = 0; i < m; ++i) {
      tp.theta_true[i] = rng.normal(s.mean_log_or, s.sigma);
    }
    if (apply_shifts(alpha, tp.theta_true, &tp.pi1)) return tp;
  }
  throw RejectionExhausted("gen_scenario1: no valid theta vector in " +
                           std::to_string(kRejectionCap) + " attempts");
}

TruePair gen_scenario2(const Simplex& pi0, const PropScenario& s) {
  const CumulativeLogits alpha = cumlogits_from_probs(pi0);
  TruePair tp;
  tp.pi0 = pi0;
  tp.theta_true.resize(alpha.eta.size());
  for (std::size_t i = 0; i < tp.theta_true.size(); ++i) {
    tp.theta_true[i] = s.zeta + s.gamma * static_cast<double>(i);
  }
  if (!apply_shifts(alpha, tp.theta_true, &tp.pi1)) {
    throw InvalidScenario("gen_scenario2: linear trend broke the simplex");
  }
  return tp;
}

TruePair gen_scenario3(const Simplex& pi0, const PropScenario& s) {
  const CumulativeLogits alpha = cumlogits_from_probs(pi0);
  TruePair tp;
  tp.pi0 = pi0;
  tp.theta_true.assign(alpha.eta.size(), 0.0);
  tp.theta_true.back() = s.top_log_or;
  if (!apply_shifts(alpha, tp.theta_true, &tp.pi1)) {
    throw InvalidScenario("gen_scenario3: top divergence broke the simplex");
  }
  return tp;
}

TruePair gen_true_pair(const Simplex& pi0, const PropScenario& s, RngStream& rng) {
  switch (s.kind) {
    case PropScenario::Kind::S1:
      return gen_scenario1(pi0, s, rng);
    case PropScenario::Kind::S2:
      return gen_scenario2(pi0, s);
    case PropScenario::Kind::S3:
      return gen_scenario3(pi0, s);
  }
  throw InvalidScenario("gen_true_pair: unknown scenario kind");
}

OrdinalCounts sample_trial(const TruePair& tp, std::uint64_t n_obs, RngStream& rng) {
  const std::uint64_t n1 = rng.binomial_half(n_obs);
  const std::uint64_t n0 = n_obs - n1;
  OrdinalCounts counts;
  counts.control = rng.multinomial(n0, tp.pi0.probs);
  counts.treatment = rng.multinomial(n1, tp.pi1.probs);
  return counts;
}

double truncnorm_sample(double mean, double sd, double lower, double upper,
                        RngStream& rng) {
  if (!(lower < upper)) throw BoundsViolation("truncnorm_sample: lower must be < upper");
  if (sd < 0.0) throw BoundsViolation("truncnorm_sample: sd must be >= 0");
  if (sd == 0.0) {
    if (mean <= lower || mean >= upper) {
      throw BoundsViolation("truncnorm_sample: sd = 0 with mean outside bounds");
    }
    return mean;
  }
  return rng.truncated_normal(mean, sd, lower, upper);
}

}  // namespace ordsim
