#include "ordsim/rng.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "ordsim/special.hpp"

namespace ordsim {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double RngStream::uniform() {
  // 53 high bits, offset by half a ulp so the result is strictly inside (0,1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return norm_cdf_inv(uniform()); }

double RngStream::truncated_normal(double mean, double sd, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("truncated_normal: lo must be < hi");
  if (sd <= 0.0) throw std::invalid_argument("truncated_normal: sd must be > 0");
  const double plo = norm_cdf((lo - mean) / sd);
  const double phi = norm_cdf((hi - mean) / sd);
  if (!(phi > plo)) {
    // Truncation range has no representable mass; clamp to the nearer bound.
    return (std::fabs(lo - mean) < std::fabs(hi - mean)) ? lo : hi;
  }
  const double p = plo + (phi - plo) * uniform();
  double x = mean + sd * norm_cdf_inv(p);
  return std::min(hi, std::max(lo, x));
}

std::uint64_t RngStream::binomial_half(std::uint64_t n) {
  std::uint64_t count = 0;
  while (n >= 64) {
    count += std::popcount(next_u64());
    n -= 64;
  }
  if (n > 0) {
    count += std::popcount(next_u64() >> (64 - n));
  }
  return count;
}

std::size_t RngStream::categorical(const std::vector<double>& weights) {
  if (weights.empty()) throw std::invalid_argument("categorical: empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("categorical: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("categorical: zero total weight");
  double target = total * uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  return weights.size() - 1;
}

std::vector<std::uint64_t> RngStream::multinomial(std::uint64_t n,
                                                  const std::vector<double>& probs) {
  std::vector<std::uint64_t> counts(probs.size(), 0);
  for (std::uint64_t i = 0; i < n; ++i) {
    counts[categorical(probs)] += 1;
  }
  return counts;
}

}  // namespace ordsim
