#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace ordsim {

// log(1 + exp(x)), stable for |x| up to the double exponent range.
inline double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Standard logistic function; never overflows.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log sigmoid(x) = -log(1 + exp(-x))
inline double log_sigmoid(double x) { return -log1p_exp(-x); }

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// log(sigmoid(a) - sigmoid(b)) for a > b, stable when both tails saturate.
inline double log_sigmoid_diff(double a, double b) {
  return log_sigmoid(a) + log_sigmoid(-b) + std::log1p(-std::exp(b - a));
}

inline double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;  // both -inf, or one +inf
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Regularized incomplete beta function I_x(a, b), a,b > 0, x in [0,1].
// Continued fraction (modified Lentz), abs tol ~1e-15.
double reg_inc_beta(double a, double b, double x);

// Standard normal CDF.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Inverse standard normal CDF (Wichura's AS 241, double precision).
double norm_cdf_inv(double p);

}  // namespace ordsim
