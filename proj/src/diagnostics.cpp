#include "ordsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>

#include "ordsim/errors.hpp"
#include "ordsim/special.hpp"

namespace ordsim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_chains(const ChainDraws& chains, const char* op) {
  if (chains.size() < 2)
    throw BoundsViolation(std::string(op) + " requires at least 2 chains");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n)
      throw ShapeMismatch(std::string(op) + ": chains have unequal lengths");
    if (c.size() < 4)
      throw BoundsViolation(std::string(op) +
                            " requires at least 4 draws per chain");
  }
}

bool all_equal(const ChainDraws& chains) {
  const double v = chains.front().front();
  for (const auto& c : chains)
    for (double x : c)
      if (x != v) return false;
  return true;
}

std::size_t total_draws(const ChainDraws& chains) {
  std::size_t t = 0;
  for (const auto& c : chains) t += c.size();
  return t;
}

// Each chain halved into two sequences; an odd middle draw is dropped.
ChainDraws split_chains(const ChainDraws& chains) {
  ChainDraws out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + half);
    out.emplace_back(c.end() - half, c.end());
  }
  return out;
}

// Joint average ranks over all sequences mapped through the normal quantile
// function with the (r - 3/8) / (S + 1/4) offset.
void rank_normalize(ChainDraws& seqs) {
  struct Entry {
    double value;
    std::size_t seq, pos;
  };
  std::vector<Entry> entries;
  std::size_t total = 0;
  for (const auto& s : seqs) total += s.size();
  entries.reserve(total);
  for (std::size_t m = 0; m < seqs.size(); ++m)
    for (std::size_t i = 0; i < seqs[m].size(); ++i)
      entries.push_back({seqs[m][i], m, i});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.value < b.value; });

  const double denom = double(total) + 0.25;
  std::size_t run = 0;
  while (run < entries.size()) {
    std::size_t end = run;
    while (end + 1 < entries.size() &&
           entries[end + 1].value == entries[run].value)
      ++end;
    // Average 1-based rank across the tie run.
    const double rank = 0.5 * (double(run + 1) + double(end + 1));
    const double z = norm_cdf_inv((rank - 0.375) / denom);
    for (std::size_t i = run; i <= end; ++i)
      seqs[entries[i].seq][entries[i].pos] = z;
    run = end + 1;
  }
}

// Iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::complex<double> w0 =
        std::polar(1.0, sign * 2.0 * 3.14159265358979323846 / double(len));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w = 1.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= w0;
      }
    }
  }
  if (inverse)
    for (auto& z : a) z /= double(n);
}

// Biased autocovariance acov[t] = (1/n) sum_i (x_i - xbar)(x_{i+t} - xbar),
// computed by zero-padded FFT.
std::vector<double> autocovariance(const std::vector<double>& x) {
  const std::size_t n = x.size();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<std::complex<double>> buf(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) buf[i] = x[i] - mean;
  fft(buf, false);
  for (auto& z : buf) z = z * std::conj(z);
  fft(buf, true);
  std::vector<double> acov(n);
  for (std::size_t t = 0; t < n; ++t) acov[t] = buf[t].real() / double(n);
  return acov;
}

// Effective sample size of already-split sequences: cross-chain pooled
// autocovariance, Geyer initial-positive pairing, then the
// initial-monotone correction, truncated estimator of the autocorrelation
// time, and an overdispersion cap for antithetic chains.
double ess_core(const ChainDraws& seqs) {
  const std::size_t m_chains = seqs.size();
  const std::size_t n = seqs.front().size();
  const double num_total = double(m_chains) * double(n);

  std::vector<std::vector<double>> acov(m_chains);
  std::vector<double> means(m_chains);
  double mean_var = 0.0;
  for (std::size_t c = 0; c < m_chains; ++c) {
    acov[c] = autocovariance(seqs[c]);
    means[c] =
        std::accumulate(seqs[c].begin(), seqs[c].end(), 0.0) / double(n);
    mean_var += acov[c][0] * double(n) / double(n - 1) / double(m_chains);
  }
  double var_plus = mean_var * double(n - 1) / double(n);
  if (m_chains > 1) {
    const double gm =
        std::accumulate(means.begin(), means.end(), 0.0) / double(m_chains);
    double b = 0.0;
    for (double mu : means) b += (mu - gm) * (mu - gm);
    var_plus += b / double(m_chains - 1);
  }
  if (!(var_plus > 0.0)) return num_total;

  auto mean_acov = [&](std::size_t t) {
    double s = 0.0;
    for (std::size_t c = 0; c < m_chains; ++c) s += acov[c][t];
    return s / double(m_chains);
  };

  std::vector<double> rho(n + 2, 0.0);
  double rho_even = 1.0;
  rho[0] = rho_even;
  double rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
  rho[1] = rho_odd;

  // Initial positive sequence: keep lag pairs while their sum stays
  // non-negative.
  int s = 1;
  while (s < int(n) - 4 && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - mean_acov(s + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - mean_acov(s + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[s + 1] = rho_even;
      rho[s + 2] = rho_odd;
    }
    s += 2;
  }
  const int max_s = s;
  if (rho_even > 0.0) rho[max_s + 1] = rho_even;

  // Initial monotone sequence: pair sums must not increase.
  for (int i = 1; i <= max_s - 3; i += 2) {
    if (rho[i + 1] + rho[i + 2] > rho[i - 1] + rho[i]) {
      rho[i + 1] = (rho[i - 1] + rho[i]) / 2.0;
      rho[i + 2] = rho[i + 1];
    }
  }

  double tau = -1.0 + rho[max_s + 1];
  for (int i = 0; i < max_s; ++i) tau += 2.0 * rho[i];

  const double cap = num_total * std::log10(num_total);
  if (!(tau > 0.0)) return cap;
  return std::min(num_total / tau, cap);
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  const double h = p * double(n - 1);
  const std::size_t lo = std::size_t(h);
  if (lo + 1 >= n) return sorted.back();
  return sorted[lo] + (h - double(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double split_rhat(const ChainDraws& chains) {
  validate_chains(chains, "split_rhat");
  if (all_equal(chains)) return 1.0;

  ChainDraws splits = split_chains(chains);
  rank_normalize(splits);

  const std::size_t m = splits.size();
  const std::size_t n = splits.front().size();
  std::vector<double> means(m);
  double w = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    const auto& x = splits[c];
    const double mu =
        std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    means[c] = mu;
    double s2 = 0.0;
    for (double v : x) s2 += (v - mu) * (v - mu);
    w += s2 / double(n - 1) / double(m);
  }
  const double gm =
      std::accumulate(means.begin(), means.end(), 0.0) / double(m);
  double b = 0.0;
  for (double mu : means) b += (mu - gm) * (mu - gm);
  b *= double(n) / double(m - 1);

  if (!(w > 0.0)) return kInf;  // distinct constant splits never mix
  const double var_plus = (double(n - 1) / double(n)) * w + b / double(n);
  // The raw ratio can dip as low as 1 - 1/n by sampling noise; closeness to
  // 1 is all that matters, so floor the report there.
  return std::max(1.0, std::sqrt(var_plus / w));
}

double ess_bulk(const ChainDraws& chains) {
  validate_chains(chains, "ess_bulk");
  if (all_equal(chains)) return double(total_draws(chains));
  ChainDraws splits = split_chains(chains);
  rank_normalize(splits);
  return ess_core(splits);
}

double ess_tail(const ChainDraws& chains) {
  validate_chains(chains, "ess_tail");
  if (all_equal(chains)) return double(total_draws(chains));

  std::vector<double> pooled;
  pooled.reserve(total_draws(chains));
  for (const auto& c : chains) pooled.insert(pooled.end(), c.begin(), c.end());
  std::sort(pooled.begin(), pooled.end());

  double ess = kInf;
  for (double p : {0.05, 0.95}) {
    const double threshold = sorted_quantile(pooled, p);
    ChainDraws indicator = split_chains(chains);
    bool constant = true;
    for (auto& seq : indicator)
      for (double& v : seq) {
        v = v <= threshold ? 1.0 : 0.0;
        constant = constant && v == indicator.front().front();
      }
    ess = std::min(ess, constant ? double(total_draws(chains))
                                 : ess_core(indicator));
  }
  return ess;
}

double quantile(std::vector<double> draws, double p) {
  if (draws.empty()) throw BoundsViolation("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0))
    throw BoundsViolation("quantile level must lie in [0, 1]");
  std::sort(draws.begin(), draws.end());
  return sorted_quantile(draws, p);
}

PosteriorSummary summarize(const std::vector<double>& draws) {
  if (draws.size() < 2)
    throw BoundsViolation("summarize requires at least 2 draws");
  std::vector<double> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  PosteriorSummary s;
  s.median = sorted_quantile(sorted, 0.5);
  s.ci_low = sorted_quantile(sorted, 0.025);
  s.ci_high = sorted_quantile(sorted, 0.975);
  return s;
}

void DiagnosticsBundle::evaluate(unsigned chains) {
  converged = n_divergent == 0;
  for (const ParamDiagnostics& p : params) {
    converged = converged && p.rhat < 1.01 && p.ess_bulk >= 100.0 * chains &&
                p.ess_tail >= 100.0 * chains;
  }
}

}  // namespace ordsim
