#include "ordsim/validate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ordsim/dgm.hpp"
#include "ordsim/diagnostics.hpp"
#include "ordsim/errors.hpp"
#include "ordsim/model.hpp"
#include "ordsim/nuts.hpp"
#include "ordsim/ordinal.hpp"
#include "ordsim/rng.hpp"
#include "ordsim/target.hpp"

namespace ordsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

ValidateCheck check(const std::string& suite, const std::string& name,
                    bool pass, const std::string& detail) {
  return ValidateCheck{suite, name, pass, detail};
}

// --- gradients --------------------------------------------------------------

// A random two-arm table with every cell occupied, so the density is finite
// on the whole unconstrained U block.
OrdinalCounts random_counts(std::size_t j, RngStream& rng) {
  OrdinalCounts counts;
  counts.control.resize(j);
  counts.treatment.resize(j);
  for (std::size_t k = 0; k < j; ++k) {
    counts.control[k] = 1 + static_cast<std::uint64_t>(rng.uniform() * 40.0);
    counts.treatment[k] = 1 + static_cast<std::uint64_t>(rng.uniform() * 40.0);
  }
  return counts;
}

// Draws parameters until the density is finite (the unconstrained-effect
// variants can break cumulative-logit monotonicity, giving -inf) and every
// implied cell probability clears a margin.  The margin keeps the central
// difference well conditioned: its truncation error grows like the third
// derivative, which scales as 1/p^3 in the smallest cell, so points right
// at the simplex boundary would drown a 1e-6 relative tolerance in pure
// step error (verified by h^2 scaling) even with an exact gradient.
ParamVector random_params(const ModelSpec& spec, const OrdinalCounts& data,
                          RngStream& rng) {
  for (int attempt = 0; attempt < 500; ++attempt) {
    ParamVector p(spec.dim());
    for (std::size_t i = 0; i < spec.u_dim(); ++i) p[i] = rng.normal(0.0, 1.5);
    for (std::size_t i = spec.u_dim(); i < spec.dim(); ++i)
      p[i] = rng.normal(0.0, 0.75);
    if (!std::isfinite(log_posterior(spec, p, data).logp)) continue;
    double pmin = 1.0;
    for (int arm = 0; arm < 2; ++arm) {
      const Simplex probs =
          probs_from_cumlogits(cumlogits_for_arm(spec, p, arm));
      for (const double v : probs.probs) pmin = std::min(pmin, v);
    }
    if (pmin >= 5e-3) return p;
  }
  throw InitFailure(
      "validate_gradients: no well-conditioned point in 500 draws");
}

ModelSpec random_spec(const std::string& label, RngStream& rng) {
  // The sep-logistic density is always a 2-category dichotomized fit; the
  // assembled analysis reuses that same surface per cut-point, so checking
  // it at j = 2 checks every cut-point's gradient.
  if (label == "sep-logistic") return ModelSpec::sep_logistic(2);
  const std::size_t j = 3 + static_cast<std::size_t>(rng.uniform() * 6.0);
  return model_by_label(label, j);
}

ValidateCheck gradient_check(const std::string& label) {
  RngStream rng(mix_key(fnv1a64("validate-gradients"), fnv1a64(label)));
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  std::size_t dim_lo = SIZE_MAX, dim_hi = 0;

  for (int point = 0; point < 100; ++point) {
    const ModelSpec spec = random_spec(label, rng);
    const OrdinalCounts data = random_counts(spec.j, rng);
    ParamVector p = random_params(spec, data, rng);
    const LogDensityResult at = log_posterior(spec, p, data);
    dim_lo = std::min(dim_lo, spec.dim());
    dim_hi = std::max(dim_hi, spec.dim());

    for (std::size_t i = 0; i < spec.dim(); ++i) {
      const double keep = p[i];
      p[i] = keep + kStep;
      const double up = log_posterior(spec, p, data).logp;
      p[i] = keep - kStep;
      const double dn = log_posterior(spec, p, data).logp;
      p[i] = keep;
      if (!std::isfinite(up) || !std::isfinite(dn)) continue;  // off-support
      const double fd = (up - dn) / (2.0 * kStep);
      const double g = at.grad[i];
      const double denom = std::max({1.0, std::fabs(fd), std::fabs(g)});
      worst = std::max(worst, std::fabs(fd - g) / denom);
    }
  }
  return check("gradients", label, worst < 1e-6,
               fmt("max rel err %.3g over 100 points (dim %zu..%zu)", worst,
                   dim_lo, dim_hi));
}

// --- posterior grid oracle ----------------------------------------------------

double log1p_exp(double x) {  // log(1 + e^x), overflow-safe
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Proportional-odds log posterior for j = 3 in (alpha_2, alpha_3, beta)
// space.  The flat Dirichlet prior on the baseline simplex transforms to
// sigma'(alpha_2) * sigma'(alpha_3) on alpha_2 > alpha_3; beta keeps its
// Normal(0, 100) prior.
double po3_alpha_logpost(double a2, double a3, double b,
                         const OrdinalCounts& counts) {
  if (!(a2 > a3)) return -kInf;
  const auto arm_ll = [](double e2, double e3,
                         const std::vector<std::uint64_t>& c) {
    const double s2 = 1.0 / (1.0 + std::exp(-e2));
    const double s3 = 1.0 / (1.0 + std::exp(-e3));
    const double p1 = 1.0 - s2, p2 = s2 - s3, p3 = s3;
    if (!(p1 > 0.0) || !(p2 > 0.0) || !(p3 > 0.0)) return -kInf;
    return static_cast<double>(c[0]) * std::log(p1) +
           static_cast<double>(c[1]) * std::log(p2) +
           static_cast<double>(c[2]) * std::log(p3);
  };
  const double ll = arm_ll(a2, a3, counts.control) +
                    arm_ll(a2 + b, a3 + b, counts.treatment);
  if (!std::isfinite(ll)) return -kInf;
  // log sigma'(x) = -log(1+e^x) - log(1+e^-x)
  const double lprior = -log1p_exp(a2) - log1p_exp(-a2) - log1p_exp(a3) -
                        log1p_exp(-a3) - b * b / (2.0 * 100.0 * 100.0);
  return ll + lprior;
}

struct GridOracle {
  std::array<double, 3> median{};   // alpha2, alpha3, beta
  double edge_drop = 0.0;           // max boundary logp minus peak logp
};

// Newton ascent with finite-difference derivatives; the surface is smooth
// and unimodal, so a handful of damped steps lands on the mode.
std::array<double, 3> po3_mode(const OrdinalCounts& counts,
                               std::array<double, 3> x) {
  const auto f = [&](const std::array<double, 3>& v) {
    return po3_alpha_logpost(v[0], v[1], v[2], counts);
  };
  const double hg = 1e-5;
  for (int iter = 0; iter < 80; ++iter) {
    std::array<double, 3> g{};
    std::array<std::array<double, 3>, 3> H{};
    for (int i = 0; i < 3; ++i) {
      auto up = x, dn = x;
      up[i] += hg;
      dn[i] -= hg;
      g[i] = (f(up) - f(dn)) / (2.0 * hg);
    }
    const double hh = 1e-4;
    for (int cidx = 0; cidx < 3; ++cidx) {
      auto up = x, dn = x;
      up[cidx] += hh;
      dn[cidx] -= hh;
      for (int r = 0; r < 3; ++r) {
        auto upr = up, upl = up, dnr = dn, dnl = dn;
        upr[r] += hg;
        upl[r] -= hg;
        dnr[r] += hg;
        dnl[r] -= hg;
        const double gu = (f(upr) - f(upl)) / (2.0 * hg);
        const double gd = (f(dnr) - f(dnl)) / (2.0 * hg);
        H[r][cidx] = (gu - gd) / (2.0 * hh);
      }
    }
    // Solve H step = g by Gaussian elimination with partial pivoting.
    std::array<std::array<double, 4>, 3> M{};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) M[r][c] = H[r][c];
      M[r][3] = g[r];
    }
    for (int col = 0; col < 3; ++col) {
      int piv = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::fabs(M[r][col]) > std::fabs(M[piv][col])) piv = r;
      std::swap(M[col], M[piv]);
      for (int r = 0; r < 3; ++r) {
        if (r == col) continue;
        const double m = M[r][col] / M[col][col];
        for (int c = col; c < 4; ++c) M[r][c] -= m * M[col][c];
      }
    }
    std::array<double, 3> step{};
    double step_max = 0.0;
    for (int r = 0; r < 3; ++r) {
      step[r] = M[r][3] / M[r][r];
      step_max = std::max(step_max, std::fabs(step[r]));
    }
    // Newton direction for a maximum: x - H^{-1} g.
    const double f0 = f(x);
    double scale = 1.0;
    for (int half = 0; half < 30; ++half) {
      std::array<double, 3> trial = x;
      for (int r = 0; r < 3; ++r) trial[r] -= scale * step[r];
      if (f(trial) >= f0) {
        x = trial;
        break;
      }
      scale *= 0.5;
    }
    if (step_max < 1e-10) break;
  }
  return x;
}

std::array<double, 3> po3_mode_sd(const OrdinalCounts& counts,
                                  const std::array<double, 3>& mode) {
  // Curvature from finite differences of the density itself.
  const auto f = [&](double d0, double d1, double d2) {
    return po3_alpha_logpost(mode[0] + d0, mode[1] + d1, mode[2] + d2, counts);
  };
  const double h = 1e-4;
  std::array<std::array<double, 3>, 3> H{};
  const double f0 = f(0, 0, 0);
  const std::array<std::array<double, 3>, 3> e = {
      {{h, 0, 0}, {0, h, 0}, {0, 0, h}}};
  for (int i = 0; i < 3; ++i) {
    H[i][i] = (f(e[i][0], e[i][1], e[i][2]) - 2.0 * f0 +
               f(-e[i][0], -e[i][1], -e[i][2])) /
              (h * h);
    for (int jdx = i + 1; jdx < 3; ++jdx) {
      const double fpp = f(e[i][0] + e[jdx][0], e[i][1] + e[jdx][1],
                           e[i][2] + e[jdx][2]);
      const double fpm = f(e[i][0] - e[jdx][0], e[i][1] - e[jdx][1],
                           e[i][2] - e[jdx][2]);
      const double fmp = f(e[jdx][0] - e[i][0], e[jdx][1] - e[i][1],
                           e[jdx][2] - e[i][2]);
      const double fmm = f(-e[i][0] - e[jdx][0], -e[i][1] - e[jdx][1],
                           -e[i][2] - e[jdx][2]);
      H[i][jdx] = H[jdx][i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  // Invert -H (3x3, positive definite at the mode) for the variances.
  const auto& A = H;
  const double det =
      A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
      A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
      A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
  const double c00 = A[1][1] * A[2][2] - A[1][2] * A[2][1];
  const double c11 = A[0][0] * A[2][2] - A[0][2] * A[2][0];
  const double c22 = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  return {std::sqrt(-c00 / det), std::sqrt(-c11 / det),
          std::sqrt(-c22 / det)};
}

GridOracle po3_grid_oracle(const OrdinalCounts& counts) {
  std::array<double, 3> start{};
  {
    // Smoothed empirical cumulative logits and a pooled 2x2 log-OR.
    const auto& c0 = counts.control;
    const auto& c1 = counts.treatment;
    const double n0 = static_cast<double>(c0[0] + c0[1] + c0[2]);
    const double ge2 = static_cast<double>(c0[1] + c0[2]) + 0.5;
    const double ge3 = static_cast<double>(c0[2]) + 0.5;
    start[0] = std::log(ge2 / (n0 + 1.0 - ge2));
    start[1] = std::log(ge3 / (n0 + 1.0 - ge3));
    const double t_ev = static_cast<double>(c1[1] + c1[2]) + 0.5;
    const double t_no = static_cast<double>(c1[0]) + 0.5;
    const double c_ev = static_cast<double>(c0[1] + c0[2]) + 0.5;
    const double c_no = static_cast<double>(c0[0]) + 0.5;
    start[2] = std::log(t_ev / t_no) - std::log(c_ev / c_no);
  }
  const std::array<double, 3> mode = po3_mode(counts, start);
  const std::array<double, 3> sd = po3_mode_sd(counts, mode);

  constexpr int kPoints = 201;
  constexpr double kSpan = 6.0;
  std::array<std::vector<double>, 3> axis;
  for (int d = 0; d < 3; ++d) {
    axis[d].resize(kPoints);
    for (int i = 0; i < kPoints; ++i)
      axis[d][i] =
          mode[d] + kSpan * sd[d] * (2.0 * i / (kPoints - 1.0) - 1.0);
  }
  const auto tw = [](int i) { return i == 0 || i == kPoints - 1 ? 0.5 : 1.0; };

  // Pass 1: the grid's log-density peak, and the largest boundary value.
  double peak = -kInf, edge_peak = -kInf;
  for (int i = 0; i < kPoints; ++i)
    for (int jdx = 0; jdx < kPoints; ++jdx)
      for (int l = 0; l < kPoints; ++l) {
        const double lp =
            po3_alpha_logpost(axis[0][i], axis[1][jdx], axis[2][l], counts);
        if (lp > peak) peak = lp;
        const bool boundary = i == 0 || i == kPoints - 1 || jdx == 0 ||
                              jdx == kPoints - 1 || l == 0 || l == kPoints - 1;
        if (boundary && lp > edge_peak) edge_peak = lp;
      }

  // Pass 2: accumulate the three marginals with trapezoid weights.
  std::array<std::vector<double>, 3> marg;
  for (auto& m : marg) m.assign(kPoints, 0.0);
  for (int i = 0; i < kPoints; ++i)
    for (int jdx = 0; jdx < kPoints; ++jdx)
      for (int l = 0; l < kPoints; ++l) {
        const double lp =
            po3_alpha_logpost(axis[0][i], axis[1][jdx], axis[2][l], counts);
        if (lp == -kInf) continue;
        const double w = tw(i) * tw(jdx) * tw(l) * std::exp(lp - peak);
        marg[0][i] += w;
        marg[1][jdx] += w;
        marg[2][l] += w;
      }

  GridOracle oracle;
  oracle.edge_drop = edge_peak - peak;
  for (int d = 0; d < 3; ++d) {
    double total = 0.0;
    for (const double m : marg[d]) total += m;
    double cum = 0.0;
    for (int i = 0; i < kPoints; ++i) {
      const double next = cum + marg[d][i];
      if (next >= 0.5 * total) {
        // Linear interpolation of the discrete-mass CDF inside node i.
        const double need = 0.5 * total - cum;
        const double frac = marg[d][i] > 0.0 ? need / marg[d][i] : 0.5;
        const double lo = i == 0 ? axis[d][0] : 0.5 * (axis[d][i - 1] + axis[d][i]);
        const double hi = i == kPoints - 1
                              ? axis[d][kPoints - 1]
                              : 0.5 * (axis[d][i] + axis[d][i + 1]);
        oracle.median[d] = lo + frac * (hi - lo);
        break;
      }
      cum = next;
    }
  }
  return oracle;
}

// The fixed oracle trial: a 3-category proportional-odds dataset of 200
// subjects with a common log odds ratio of log 1.5.
OrdinalCounts oracle_counts() {
  const Simplex pi0 = discretize_beta(ControlShape::symmetric(), 3);
  RngStream rng(fnv1a64("posterior-grid-oracle"));
  const TruePair tp = gen_true_pair(pi0, PropScenario::s1(std::log(1.5), 0.0),
                                    rng);
  return sample_trial(tp, 200, rng);
}

std::vector<ValidateCheck> oracle_checks() {
  const OrdinalCounts counts = oracle_counts();
  const GridOracle grid = po3_grid_oracle(counts);

  // The same posterior sampled with NUTS, mirroring run_model's chain
  // conventions but keeping the raw parameter draws so the baseline
  // cut-point intercepts can be monitored alongside the effect.
  const ModelSpec spec = ModelSpec::po(3);
  SamplerConfig cfg;
  cfg.chains = 4;
  cfg.warmup = 500;
  cfg.post_warmup_per_chain = 1000;
  cfg.seed = fnv1a64("posterior-grid-oracle-nuts");
  std::vector<double> a2, a3, beta;
  for (unsigned c = 0; c < cfg.chains; ++c) {
    RngStream init_rng(mix_key(mix_key(cfg.seed, fnv1a64("fit-init")), c));
    const ParamVector init = initial_point(spec, counts, init_rng);
    PosteriorTarget target(spec, counts);
    const ChainOutput chain = nuts_chain(target, init, cfg, c);
    for (const auto& draw : chain.draws) {
      const CumulativeLogits eta = cumlogits_for_arm(spec, draw, 0);
      a2.push_back(eta.eta[0]);
      a3.push_back(eta.eta[1]);
      beta.push_back(draw[spec.u_dim()]);
    }
  }

  const std::array<const char*, 3> names = {"alpha2-median", "alpha3-median",
                                            "beta-median"};
  const std::array<double, 3> nuts = {quantile(a2, 0.5), quantile(a3, 0.5),
                                      quantile(beta, 0.5)};
  std::vector<ValidateCheck> out;
  for (int d = 0; d < 3; ++d) {
    const double diff = std::fabs(nuts[d] - grid.median[d]);
    out.push_back(check("oracle", names[d], diff < 0.02,
                        fmt("nuts %.4f vs grid %.4f (|diff| %.4f, tol 0.02)",
                            nuts[d], grid.median[d], diff)));
  }
  // A Gaussian-like posterior puts its 6-sd boundary ~18 log units below
  // the peak; anything above -12 means the grid missed real mass.
  out.push_back(check(
      "oracle", "grid-contained", grid.edge_drop < -12.0,
      fmt("boundary log-density %.1f below the peak", -grid.edge_drop)));
  return out;
}

// --- sampler closed-form targets ---------------------------------------------

class StdNormalTarget : public GradTarget {
 public:
  explicit StdNormalTarget(std::size_t n) : n_(n) {}
  std::size_t dim() const override { return n_; }
  double logp_grad(const double* x, double* grad) override {
    double lp = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      lp -= 0.5 * x[i] * x[i];
      grad[i] = -x[i];
    }
    return lp;
  }

 private:
  std::size_t n_;
};

// Bivariate normal with unit variances and correlation rho.
class CorrNormalTarget : public GradTarget {
 public:
  explicit CorrNormalTarget(double rho) : rho_(rho) {}
  std::size_t dim() const override { return 2; }
  double logp_grad(const double* x, double* grad) override {
    const double s = 1.0 - rho_ * rho_;
    grad[0] = -(x[0] - rho_ * x[1]) / s;
    grad[1] = -(x[1] - rho_ * x[0]) / s;
    return -0.5 * (x[0] * x[0] - 2.0 * rho_ * x[0] * x[1] + x[1] * x[1]) / s;
  }

 private:
  double rho_;
};

struct TargetRun {
  std::vector<ChainDraws> coord;  // [dim][chain][draw]
  int n_divergent = 0;
};

template <typename TargetFactory>
TargetRun run_target(TargetFactory make_target, std::size_t dim,
                     const SamplerConfig& cfg) {
  TargetRun run;
  run.coord.assign(dim, ChainDraws(cfg.chains));
  for (unsigned c = 0; c < cfg.chains; ++c) {
    RngStream init_rng(mix_key(mix_key(cfg.seed, fnv1a64("validate-init")), c));
    std::vector<double> init(dim);
    for (auto& v : init) v = init_rng.normal(0.0, 2.0);
    auto target = make_target();
    const ChainOutput chain = nuts_chain(*target, init, cfg, c);
    run.n_divergent += chain.n_divergent;
    for (std::size_t d = 0; d < dim; ++d) {
      run.coord[d][c].reserve(chain.draws.size());
      for (const auto& draw : chain.draws) run.coord[d][c].push_back(draw[d]);
    }
  }
  return run;
}

void moment_checks(const std::string& label, const TargetRun& run,
                   std::vector<ValidateCheck>& out) {
  double worst_z = 0.0, worst_var_err = 0.0;
  for (const auto& chains : run.coord) {
    std::vector<double> pooled;
    for (const auto& ch : chains) pooled.insert(pooled.end(), ch.begin(), ch.end());
    double mean = 0.0;
    for (const double v : pooled) mean += v;
    mean /= static_cast<double>(pooled.size());
    double var = 0.0;
    for (const double v : pooled) var += (v - mean) * (v - mean);
    var /= static_cast<double>(pooled.size() - 1);
    const double mcse = std::sqrt(var / ess_bulk(chains));
    worst_z = std::max(worst_z, std::fabs(mean) / mcse);
    worst_var_err = std::max(worst_var_err, std::fabs(var - 1.0));
  }
  out.push_back(check("sampler", label + "-mean", worst_z < 3.0,
                      fmt("worst |mean|/MCSE %.2f (tol 3)", worst_z)));
  out.push_back(check("sampler", label + "-variance", worst_var_err < 0.05,
                      fmt("worst |var - 1| %.4f (tol 0.05)", worst_var_err)));
  out.push_back(check("sampler", label + "-divergences",
                      run.n_divergent == 0,
                      fmt("%d divergent transitions", run.n_divergent)));
}

std::vector<ValidateCheck> sampler_checks() {
  SamplerConfig cfg;
  cfg.chains = 4;
  cfg.warmup = 500;
  cfg.post_warmup_per_chain = 1500;
  cfg.seed = fnv1a64("validate-sampler");

  std::vector<ValidateCheck> out;
  const TargetRun normal5 = run_target(
      [] { return std::make_unique<StdNormalTarget>(5); }, 5, cfg);
  moment_checks("normal5", normal5, out);
  const TargetRun corr2 = run_target(
      [] { return std::make_unique<CorrNormalTarget>(0.9); }, 2, cfg);
  moment_checks("corr2", corr2, out);

  // Bit-exact replay: the same (target, init, cfg, chain_id) twice.
  StdNormalTarget t1(3), t2(3);
  const std::vector<double> init = {0.3, -1.2, 0.8};
  const ChainOutput r1 = nuts_chain(t1, init, cfg, 0);
  const ChainOutput r2 = nuts_chain(t2, init, cfg, 0);
  const bool same = r1.draws == r2.draws && r1.step_size == r2.step_size;
  out.push_back(check("sampler", "replay-determinism", same,
                      same ? "identical draws and adapted step size"
                           : "replay diverged"));
  return out;
}

// --- dgm closed forms ---------------------------------------------------------

std::vector<ValidateCheck> dgm_checks() {
  std::vector<ValidateCheck> out;

  double worst_uniform = 0.0;
  for (const std::size_t j : {3u, 7u, 11u}) {
    const Simplex p = discretize_beta({1.0, 1.0, "flat"}, j);
    for (const double v : p.probs)
      worst_uniform =
          std::max(worst_uniform, std::fabs(v - 1.0 / static_cast<double>(j)));
  }
  out.push_back(check("dgm", "beta11-uniform", worst_uniform < 1e-14,
                      fmt("max |p - 1/j| = %.3g over j in {3,7,11}",
                          worst_uniform)));

  double worst_sym = 0.0;
  for (const std::size_t j : {3u, 7u, 11u}) {
    const Simplex p = discretize_beta(ControlShape::symmetric(), j);
    for (std::size_t k = 0; k < j; ++k)
      worst_sym = std::max(worst_sym,
                           std::fabs(p.probs[k] - p.probs[j - 1 - k]));
  }
  out.push_back(check("dgm", "beta-symmetric", worst_sym < 1e-12,
                      fmt("max |p_k - p_mirror| = %.3g", worst_sym)));

  const Simplex pi0 = discretize_beta(ControlShape::symmetric(), 7);
  RngStream rng(fnv1a64("validate-dgm"));

  {
    const TruePair tp =
        gen_true_pair(pi0, PropScenario::s1(std::log(1.5), 0.0), rng);
    bool exact = tp.theta_true.size() == 6;
    for (const double th : tp.theta_true) exact = exact && th == std::log(1.5);
    out.push_back(check("dgm", "scenario1-sigma0-constant", exact,
                        "theta_k == log 1.5 bitwise at sigma = 0"));
  }
  {
    const PropScenario s = PropScenario::s2();
    const TruePair tp = gen_true_pair(pi0, s, rng);
    bool exact = tp.theta_true.size() == 6;
    for (std::size_t i = 0; i < tp.theta_true.size(); ++i)
      exact = exact &&
              tp.theta_true[i] == s.zeta + s.gamma * static_cast<double>(i);
    out.push_back(check("dgm", "scenario2-linear-trend", exact,
                        "theta_k == zeta + gamma*(k-2) bitwise"));
  }
  {
    const TruePair tp =
        gen_true_pair(pi0, PropScenario::s3(std::log(1.5)), rng);
    bool exact = tp.theta_true.size() == 6 &&
                 tp.theta_true.back() == std::log(1.5);
    for (std::size_t i = 0; i + 1 < tp.theta_true.size(); ++i)
      exact = exact && tp.theta_true[i] == 0.0;
    out.push_back(check("dgm", "scenario3-top-divergence", exact,
                        "theta = (0, ..., 0, log 1.5) bitwise"));
  }
  return out;
}

}  // namespace

std::vector<ValidateCheck> validate_gradients() {
  std::vector<ValidateCheck> out;
  for (const auto& label : all_model_labels())
    out.push_back(gradient_check(label));
  return out;
}

std::vector<ValidateCheck> validate_oracle() { return oracle_checks(); }

std::vector<ValidateCheck> validate_sampler() { return sampler_checks(); }

std::vector<ValidateCheck> validate_dgm() { return dgm_checks(); }

std::vector<ValidateCheck> validate_suite(const std::string& name) {
  if (name == "gradients") return validate_gradients();
  if (name == "oracle") return validate_oracle();
  if (name == "sampler") return validate_sampler();
  if (name == "dgm") return validate_dgm();
  if (name == "all") {
    std::vector<ValidateCheck> out;
    for (const char* suite : {"gradients", "oracle", "sampler", "dgm"}) {
      const auto part = validate_suite(suite);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  throw UnknownKind("unknown validation suite \"" + name +
                    "\" (expected gradients, oracle, sampler, dgm, or all)");
}

bool all_passed(const std::vector<ValidateCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidateCheck& c) { return c.pass; });
}

}  // namespace ordsim
