#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace ordsim {

// 64-bit FNV-1a hash, used to derive stable numeric ids from string keys.
std::uint64_t fnv1a64(std::string_view s);

// SplitMix64 finalizer; mixes a word into a well-distributed 64-bit value.
std::uint64_t splitmix64(std::uint64_t x);

// Combine an existing key with one more word (order-sensitive).
inline std::uint64_t mix_key(std::uint64_t key, std::uint64_t word) {
  return splitmix64(key ^ (word + 0x9e3779b97f4a7c15ULL));
}

// Deterministic random stream.  The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard, so streams reproduce exactly across
// platforms and compilers.  All variate generation is implemented on top of
// raw 64-bit draws; nothing here depends on <random> distribution objects,
// whose outputs are implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key), engine_(splitmix64(key)) {}

  std::uint64_t key() const { return key_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1): (x >> 11) + 0.5 scaled by 2^-53.
  double uniform();

  // Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via the inverse CDF applied to uniform().
  double normal();

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Normal(mean, sd) truncated to [lo, hi], by inverse-CDF on the restricted
  // quantile range.  Degenerate ranges fall back to the nearer bound.
  double truncated_normal(double mean, double sd, double lo, double hi);

  // Binomial(n, 1/2) by counting set bits of random words.
  std::uint64_t binomial_half(std::uint64_t n);

  // Index draw from unnormalised nonnegative weights.
  std::size_t categorical(const std::vector<double>& weights);

  // n draws from a categorical distribution; returns per-category counts.
  std::vector<std::uint64_t> multinomial(std::uint64_t n,
                                         const std::vector<double>& probs);

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace ordsim
