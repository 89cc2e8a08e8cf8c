#include "ordsim/ordinal.hpp"

#include <cmath>
#include <numeric>

#include "ordsim/errors.hpp"
#include "ordsim/special.hpp"

namespace ordsim {

std::uint64_t OrdinalCounts::arm_total(int a) const {
  const auto& v = arm(a);
  return std::accumulate(v.begin(), v.end(), std::uint64_t{0});
}

void validate_counts(const OrdinalCounts& counts) {
  if (counts.control.size() != counts.treatment.size()) {
    throw ShapeMismatch("ordinal counts: arms have different category counts");
  }
  if (counts.j() < 2) {
    throw ShapeMismatch("ordinal counts: need at least 2 categories");
  }
  for (int a = 0; a < 2; ++a) {
    if (counts.arm_total(a) == 0) {
      throw BoundsViolation("ordinal counts: arm " + std::to_string(a) +
                            " has no observations");
    }
  }
}

bool Simplex::valid(double tol) const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) return false;
    sum += p;
  }
  return std::fabs(sum - 1.0) <= tol;
}

bool CumulativeLogits::strictly_decreasing() const {
  for (std::size_t m = 0; m + 1 < eta.size(); ++m) {
    if (!(eta[m] > eta[m + 1])) return false;
  }
  return true;
}

Simplex probs_from_cumlogits(const CumulativeLogits& eta) {
  const std::size_t j = eta.eta.size() + 1;
  Simplex out;
  out.probs.resize(j);
  // Tail probabilities q_k = P(Y >= k); q_1 = 1, q_{j+1} = 0 implicitly.
  double prev = 1.0;
  for (std::size_t m = 0; m < eta.eta.size(); ++m) {
    const double q = sigmoid(eta.eta[m]);
    out.probs[m] = prev - q;
    prev = q;
  }
  out.probs[j - 1] = prev;
  return out;
}

CumulativeLogits cumlogits_from_probs(const Simplex& p) {
  const std::size_t j = p.probs.size();
  if (j < 2) throw ShapeMismatch("cumlogits_from_probs: need at least 2 categories");
  CumulativeLogits out;
  out.eta.resize(j - 1);
  // Accumulate tails from the top so each q_k sums the fewest terms possible.
  double tail = 0.0;
  for (std::size_t k = j; k >= 2; --k) {
    tail += p.probs[k - 1];
    if (!(tail > 0.0) || !(tail < 1.0)) {
      throw DegenerateTail("cumlogits_from_probs: P(Y >= " + std::to_string(k) +
                           ") = " + std::to_string(tail) + " has no logit");
    }
    out.eta[k - 2] = logit(tail);
  }
  return out;
}

StickBreak simplex_from_unconstrained(const std::vector<double>& u) {
  const std::size_t j = u.size() + 1;
  StickBreak out;
  out.simplex.probs.resize(j);
  out.z.resize(j - 1);
  out.survivors.resize(j);
  double stick = 1.0;
  double log_stick = 0.0;
  for (std::size_t k = 0; k < j - 1; ++k) {
    // Centering offset makes u = 0 split the remaining stick evenly.
    const double a = u[k] - std::log(static_cast<double>(j - k - 1));
    const double z = sigmoid(a);
    out.survivors[k] = stick;
    out.z[k] = z;
    out.simplex.probs[k] = stick * z;
    out.log_jacobian += log_stick + log_sigmoid(a) + log_sigmoid(-a);
    stick *= 1.0 - z;
    log_stick += log_sigmoid(-a);
  }
  out.survivors[j - 1] = stick;
  out.simplex.probs[j - 1] = stick;
  return out;
}

std::vector<double> unconstrained_from_simplex(const Simplex& p) {
  const std::size_t j = p.probs.size();
  if (j < 2) throw ShapeMismatch("unconstrained_from_simplex: need at least 2 categories");
  std::vector<double> u(j - 1);
  double stick = 1.0;
  for (std::size_t k = 0; k < j - 1; ++k) {
    const double z = p.probs[k] / stick;
    if (!(z > 0.0) || !(z < 1.0)) {
      throw DegenerateTail("unconstrained_from_simplex: stick fraction " +
                           std::to_string(z) + " at position " + std::to_string(k));
    }
    u[k] = logit(z) + std::log(static_cast<double>(j - k - 1));
    stick -= p.probs[k];
  }
  return u;
}

OrdinalCounts dichotomize(const OrdinalCounts& counts, std::size_t k) {
  const std::size_t j = counts.j();
  if (k < 2 || k > j) {
    throw BoundsViolation("dichotomize: cut-point " + std::to_string(k) +
                          " outside 2.." + std::to_string(j));
  }
  OrdinalCounts out;
  out.control.assign(2, 0);
  out.treatment.assign(2, 0);
  for (int a = 0; a < 2; ++a) {
    for (std::size_t c = 1; c <= j; ++c) {
      out.arm(a)[c >= k ? 1 : 0] += counts.arm(a)[c - 1];
    }
  }
  return out;
}

}  // namespace ordsim
