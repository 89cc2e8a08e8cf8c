#include "ordsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ordsim/errors.hpp"
#include "ordsim/special.hpp"

namespace ordsim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.91893853320467274178;

double normal_logpdf(double x, double sd) {
  const double t = x / sd;
  return -kHalfLog2Pi - std::log(sd) - 0.5 * t * t;
}

// Effect-block shift added to the baseline logit at cut-point m (= k-2).
double effect_shift(const ModelSpec& s, const double* e, std::size_t m) {
  switch (s.variant) {
    case ModelSpec::Variant::SepLogistic:
    case ModelSpec::Variant::PO:
      return e[0];
    case ModelSpec::Variant::PPOUnconstrained:
      return e[0] + (m == 0 ? 0.0 : e[m]);
    case ModelSpec::Variant::CPPO:
      return e[0] + s.gamma_fixed[m] * e[1];
  }
  return 0.0;
}

}  // namespace

ModelSpec ModelSpec::sep_logistic(std::size_t cutpoint) {
  if (cutpoint < 2)
    throw BoundsViolation("sep_logistic: cut-point labels start at 2");
  ModelSpec s;
  s.variant = Variant::SepLogistic;
  s.j = 2;
  s.sep_cutpoint = cutpoint;
  s.label_ = "sep-logistic";
  return s;
}

ModelSpec ModelSpec::po(std::size_t j) {
  if (j < 2) throw ShapeMismatch("po: need at least 2 categories");
  ModelSpec s;
  s.variant = Variant::PO;
  s.j = j;
  s.label_ = "po";
  return s;
}

ModelSpec ModelSpec::ppo_unconstrained(std::size_t j) {
  if (j < 2) throw ShapeMismatch("ppo_unconstrained: need at least 2 categories");
  ModelSpec s;
  s.variant = Variant::PPOUnconstrained;
  s.j = j;
  s.label_ = "ppo-u";
  return s;
}

ModelSpec ModelSpec::cppo_linear(std::size_t j) {
  if (j < 2) throw ShapeMismatch("cppo_linear: need at least 2 categories");
  ModelSpec s;
  s.variant = Variant::CPPO;
  s.j = j;
  s.gamma_fixed.resize(j - 1);
  for (std::size_t m = 0; m < j - 1; ++m) s.gamma_fixed[m] = static_cast<double>(m);
  s.label_ = "cppo-linear";
  return s;
}

ModelSpec ModelSpec::cppo_last_diverge(std::size_t j) {
  if (j < 3) {
    throw ShapeMismatch("cppo_last_diverge: needs at least 3 categories so the "
                        "anchored first cut-point and the divergent top differ");
  }
  ModelSpec s;
  s.variant = Variant::CPPO;
  s.j = j;
  s.gamma_fixed.assign(j - 1, 0.0);
  s.gamma_fixed.back() = 1.0;
  s.label_ = "cppo-last";
  return s;
}

const std::vector<std::string>& all_model_labels() {
  static const std::vector<std::string> labels = {
      "sep-logistic", "po", "ppo-u", "cppo-linear", "cppo-last"};
  return labels;
}

ModelSpec model_by_label(const std::string& label, std::size_t j) {
  if (label == "po") return ModelSpec::po(j);
  if (label == "ppo-u") return ModelSpec::ppo_unconstrained(j);
  if (label == "cppo-linear") return ModelSpec::cppo_linear(j);
  if (label == "cppo-last") return ModelSpec::cppo_last_diverge(j);
  if (label == "sep-logistic") {
    if (j < 2)
      throw ShapeMismatch("sep-logistic: need at least 2 categories");
    // The assembled analysis over all cut-points; sep_cutpoint 0 marks it as
    // the parent of the per-cut-point dichotomized fits.
    ModelSpec s;
    s.variant = ModelSpec::Variant::SepLogistic;
    s.j = j;
    s.sep_cutpoint = 0;
    s.label_ = "sep-logistic";
    return s;
  }
  throw UnknownKind("unknown model label: " + label);
}

std::size_t ModelSpec::e_dim() const {
  switch (variant) {
    case Variant::SepLogistic:
    case Variant::PO:
      return 1;
    case Variant::PPOUnconstrained:
      return j - 1;
    case Variant::CPPO:
      return 2;
  }
  return 0;
}

CumulativeLogits cumlogits_for_arm(const ModelSpec& spec, const ParamVector& p,
                                   int arm) {
  if (p.size() != spec.dim()) {
    throw ShapeMismatch("cumlogits_for_arm: parameter length " +
                        std::to_string(p.size()) + " != " +
                        std::to_string(spec.dim()));
  }
  const std::size_t j = spec.j;
  CumulativeLogits out;
  out.eta.resize(j - 1);
  // alpha_m = logit of the survivor tail: log R_{m+1} accumulates exactly in
  // log space, and 1 - R_{m+1} is the running category-probability sum.
  double log_r = 0.0, csum = 0.0;
  for (std::size_t i = 0; i + 1 < j; ++i) {
    const double a = p[i] - std::log(static_cast<double>(j - i - 1));
    csum += std::exp(log_r + log_sigmoid(a));
    log_r += log_sigmoid(-a);
    out.eta[i] = log_r - std::log(csum);
  }
  if (arm == 1) {
    const double* e = p.data() + spec.u_dim();
    for (std::size_t m = 0; m + 1 < j; ++m) out.eta[m] += effect_shift(spec, e, m);
  }
  return out;
}

std::vector<double> cutpoint_log_ors(const ModelSpec& spec, const ParamVector& p) {
  if (p.size() != spec.dim()) {
    throw ShapeMismatch("cutpoint_log_ors: parameter length mismatch");
  }
  const double* e = p.data() + spec.u_dim();
  std::vector<double> theta(spec.j - 1);
  for (std::size_t m = 0; m < theta.size(); ++m) theta[m] = effect_shift(spec, e, m);
  return theta;
}

PosteriorTarget::PosteriorTarget(const ModelSpec& spec, const OrdinalCounts& data)
    : spec_(spec), data_(data) {
  if (data.control.size() != data.treatment.size()) {
    throw ShapeMismatch("posterior: arms have different category counts");
  }
  if (data.j() != spec.j) {
    throw ShapeMismatch("posterior: data has " + std::to_string(data.j()) +
                        " categories, model expects " + std::to_string(spec.j));
  }
  if (spec.variant == ModelSpec::Variant::SepLogistic && spec.j != 2) {
    throw ShapeMismatch(
        "posterior: a sep-logistic analysis is fit per dichotomized "
        "cut-point, not directly to multi-category data");
  }
  const std::size_t j = spec.j, m = j - 1;
  z_.resize(m);
  lsa_.resize(m);
  lsna_.resize(m);
  alpha_.resize(m);
  eta_.resize(m);
  g_.resize(m);
  logx_.resize(j);
  xlin_.resize(j);
  csum_.resize(m);
  logp1_.resize(j);
  suffix0_.assign(j, 0.0);
  double tail = 0.0;
  for (std::size_t t = j; t-- > 0;) {
    tail += static_cast<double>(data_.control[t]);
    suffix0_[t] = tail;
  }
}

double PosteriorTarget::logp_grad(const double* x, double* grad) {
  const std::size_t j = spec_.j, m = j - 1;
  const double* u = x;
  const double* e = x + m;
  std::fill(grad, grad + spec_.dim(), 0.0);

  // Forward pass through the stick-breaking transform: stick fractions,
  // arm-0 log category probabilities, and the transform's log-Jacobian.
  double log_r = 0.0;
  double logjac = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = u[i] - std::log(static_cast<double>(j - i - 1));
    z_[i] = sigmoid(a);
    lsa_[i] = log_sigmoid(a);
    lsna_[i] = log_sigmoid(-a);
    logjac += log_r + lsa_[i] + lsna_[i];
    logx_[i] = log_r + lsa_[i];
    log_r += lsna_[i];
    alpha_[i] = log_r;  // log R_{i+1}; the logit denominator is added below
  }
  logx_[m] = log_r;
  double c = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    xlin_[i] = std::exp(logx_[i]);
    c += xlin_[i];
    csum_[i] = c;  // 1 - R_{i+1}
    alpha_[i] -= std::log(c);
  }

  // Arm-1 logits must stay strictly decreasing, otherwise some implied
  // category probability is <= 0 and the state is rejected outright.
  for (std::size_t i = 0; i < m; ++i) eta_[i] = alpha_[i] + effect_shift(spec_, e, i);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (!(eta_[i] > eta_[i + 1])) return kNegInf;
  }

  logp1_[0] = log_sigmoid(-eta_[0]);
  for (std::size_t t = 1; t < m; ++t) logp1_[t] = log_sigmoid_diff(eta_[t - 1], eta_[t]);
  logp1_[m] = log_sigmoid(eta_[m - 1]);

  double logp = logjac;
  for (std::size_t t = 0; t < j; ++t) {
    if (data_.control[t] > 0) logp += static_cast<double>(data_.control[t]) * logx_[t];
    if (data_.treatment[t] > 0) logp += static_cast<double>(data_.treatment[t]) * logp1_[t];
  }

  // Effect-block priors: the lead coordinate is the main effect, any further
  // coordinates are increments.
  const std::size_t edim = spec_.e_dim();
  for (std::size_t d = 0; d < edim; ++d) {
    const double sd = (d == 0) ? spec_.prior_sd_effect : spec_.prior_sd_increment;
    logp += normal_logpdf(e[d], sd);
    grad[m + d] = -e[d] / (sd * sd);
  }

  if (!std::isfinite(logp)) {
    std::fill(grad, grad + spec_.dim(), 0.0);
    return kNegInf;
  }

  // dLL1/d eta_i, with the count/probability ratios formed in log space so
  // saturated tails cannot overflow prematurely.
  for (std::size_t i = 0; i < m; ++i) {
    const double lsp = log_sigmoid(eta_[i]) + log_sigmoid(-eta_[i]);
    double gi = 0.0;
    if (data_.treatment[i + 1] > 0) {
      gi += static_cast<double>(data_.treatment[i + 1]) * std::exp(lsp - logp1_[i + 1]);
    }
    if (data_.treatment[i] > 0) {
      gi -= static_cast<double>(data_.treatment[i]) * std::exp(lsp - logp1_[i]);
    }
    g_[i] = gi;
  }

  // Effect-block likelihood gradient.
  switch (spec_.variant) {
    case ModelSpec::Variant::SepLogistic:
    case ModelSpec::Variant::PO: {
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) sum += g_[i];
      grad[m] += sum;
      break;
    }
    case ModelSpec::Variant::PPOUnconstrained: {
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) sum += g_[i];
      grad[m] += sum;
      for (std::size_t i = 1; i < m; ++i) grad[m + i] += g_[i];
      break;
    }
    case ModelSpec::Variant::CPPO: {
      double sum = 0.0, wsum = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        sum += g_[i];
        wsum += spec_.gamma_fixed[i] * g_[i];
      }
      grad[m] += sum;
      grad[m + 1] += wsum;
      break;
    }
  }

  // U-block gradient: arm-0 counts, the log-Jacobian, and the arm-1 chain
  // through alpha, whose suffix structure collapses to one running sum.
  double suffix_a = 0.0;
  for (std::size_t i = m; i-- > 0;) {
    suffix_a += g_[i] / csum_[i];
    grad[i] += static_cast<double>(data_.control[i]) - z_[i] * suffix0_[i] +
               1.0 - static_cast<double>(j - i) * z_[i] - z_[i] * suffix_a;
  }

  for (std::size_t d = 0; d < spec_.dim(); ++d) {
    if (!std::isfinite(grad[d])) {
      // A finite logp with a non-finite gradient only happens in regions so
      // saturated the state is unusable; reject it rather than poison HMC.
      std::fill(grad, grad + spec_.dim(), 0.0);
      return kNegInf;
    }
  }
  return logp;
}

LogDensityResult log_posterior(const ModelSpec& spec, const ParamVector& p,
                               const OrdinalCounts& data) {
  if (p.size() != spec.dim()) {
    throw ShapeMismatch("log_posterior: parameter length mismatch");
  }
  PosteriorTarget target(spec, data);
  LogDensityResult out;
  out.grad.assign(spec.dim(), 0.0);
  out.logp = target.logp_grad(p.data(), out.grad.data());
  return out;
}

ParamVector initial_point(const ModelSpec& spec, const OrdinalCounts& data,
                          RngStream& rng, double jitter) {
  const std::size_t j = spec.j;
  Simplex pooled;
  pooled.probs.resize(j);
  double total = 0.0;
  for (std::size_t t = 0; t < j; ++t) {
    pooled.probs[t] = static_cast<double>(data.control[t] + data.treatment[t]) + 0.5;
    total += pooled.probs[t];
  }
  for (double& p : pooled.probs) p /= total;

  ParamVector base(spec.dim(), 0.0);
  const std::vector<double> u = unconstrained_from_simplex(pooled);
  std::copy(u.begin(), u.end(), base.begin());

  PosteriorTarget target(spec, data);
  ParamVector p = base;
  std::vector<double> grad(spec.dim());
  for (int attempt = 0; attempt < 100; ++attempt) {
    p = base;
    if (jitter > 0.0) {
      for (double& x : p) x += rng.uniform(-jitter, jitter);
    }
    if (std::isfinite(target.logp_grad(p.data(), grad.data()))) return p;
    if (jitter == 0.0) break;  // deterministic start; retrying cannot help
  }
  throw InitFailure("initial_point: no finite-density start within 100 tries");
}

}  // namespace ordsim
