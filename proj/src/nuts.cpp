#include "ordsim/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ordsim/errors.hpp"
#include "ordsim/rng.hpp"
#include "ordsim/special.hpp"

namespace ordsim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Warmup layout fractions; the conventional 75/25/50 buffers of a
// 1000-draw warmup, kept proportional at other lengths.
constexpr double kInitBufferFrac = 0.075;
constexpr double kBaseWindowFrac = 0.025;
constexpr double kTermBufferFrac = 0.05;

// Dual-averaging constants.
constexpr double kDaGamma = 0.05;
constexpr double kDaT0 = 10.0;
constexpr double kDaKappa = 0.75;

// Step-size search guards.
constexpr double kEpsMin = 1e-10;
constexpr double kEpsMax = 1e7;
constexpr int kEpsSearchMax = 200;

// Nesterov dual averaging on log step size, driven toward a target mean
// Metropolis acceptance.
struct DualAveraging {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  unsigned m = 0;

  void restart(double eps0) {
    mu = std::log(10.0 * eps0);
    log_eps = std::log(eps0);
    log_eps_bar = 0.0;
    h_bar = 0.0;
    m = 0;
  }

  void update(double accept, double target) {
    ++m;
    const double w = 1.0 / (m + kDaT0);
    h_bar = (1.0 - w) * h_bar + w * (target - accept);
    log_eps = mu - std::sqrt(double(m)) / kDaGamma * h_bar;
    const double eta = std::pow(double(m), -kDaKappa);
    log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
  }

  double current() const { return std::exp(log_eps); }
  double averaged() const {
    return m ? std::exp(log_eps_bar) : std::exp(log_eps);
  }
};

// Streaming per-coordinate variance for the metric windows.
struct Welford {
  std::size_t n = 0;
  std::vector<double> mean, m2;

  explicit Welford(std::size_t dim) : mean(dim, 0.0), m2(dim, 0.0) {}

  void reset() {
    n = 0;
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(m2.begin(), m2.end(), 0.0);
  }

  void add(const std::vector<double>& x) {
    ++n;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double d = x[i] - mean[i];
      mean[i] += d / double(n);
      m2[i] += d * (x[i] - mean[i]);
    }
  }

  // Sample variances shrunk toward a small positive floor, so a short or
  // degenerate window still yields a usable metric.
  void regularized_variance(std::vector<double>& out) const {
    const double shrink = double(n) / (double(n) + 5.0);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double var = n > 1 ? m2[i] / double(n - 1) : 0.0;
      out[i] = shrink * var + 1e-3 * (1.0 - shrink);
    }
  }
};

// Full phase-space integration state.
struct Point {
  std::vector<double> q, p, g;
  double logp = 0.0;
};

// A candidate draw: position plus cached density, gradient, and energy.
struct Proposal {
  std::vector<double> q, g;
  double logp = 0.0;
  double h = 0.0;
};

struct TransitionStats {
  int treedepth = 0;
  double energy = 0.0;
  bool divergent = false;
  double accept_stat = 0.0;
  bool hit_max = false;
};

class NutsWorker {
 public:
  NutsWorker(GradTarget& target, const SamplerConfig& cfg, unsigned chain_id)
      : target_(target),
        cfg_(cfg),
        chain_id_(chain_id),
        dim_(target.dim()),
        rng_(mix_key(mix_key(cfg.seed, fnv1a64("nuts-chain")), chain_id)),
        inv_mass_(dim_, 1.0),
        mom_scale_(dim_, 1.0) {
    auto sized = [this](std::vector<double>& v) { v.assign(dim_, 0.0); };
    for (Point* z : {&z_, &z_plus_, &z_minus_}) {
      sized(z->q);
      sized(z->p);
      sized(z->g);
    }
    for (Proposal* pr : {&cur_, &selected_, &top_prop_}) {
      sized(pr->q);
      sized(pr->g);
    }
    for (std::vector<double>* v :
         {&p0_, &ps_plus_, &ps_minus_, &p_plus_, &p_minus_, &rho_, &rho_sub_,
          &rho_ext_, &ps_sub_beg_, &ps_sub_end_, &p_sub_beg_, &p_sub_end_})
      sized(*v);
    levels_.resize(cfg.max_treedepth + 1);
    for (Level& l : levels_) {
      sized(l.prop2.q);
      sized(l.prop2.g);
      for (std::vector<double>* v : {&l.ps_end1, &l.ps_beg2, &l.p_end1,
                                     &l.p_beg2, &l.rho1, &l.rho2, &l.rho_ext})
        sized(*v);
    }
  }

  ChainOutput run(const std::vector<double>& init) {
    cur_.q = init;
    cur_.logp = eval(cur_.q.data(), cur_.g.data());
    if (!std::isfinite(cur_.logp))
      throw InitFailure("chain " + std::to_string(chain_id_) +
                        ": log density not finite at the initial point");

    const AdaptationSchedule sched = adaptation_schedule(cfg_.warmup);
    Welford welford(dim_);
    DualAveraging da;
    da.restart(find_reasonable_epsilon());

    std::size_t window = 0;
    for (unsigned it = 0; it < cfg_.warmup; ++it) {
      const TransitionStats st = transition(da.current());
      da.update(st.accept_stat, cfg_.target_accept);
      if (it >= sched.init_end && it < sched.metric_end) {
        welford.add(cur_.q);
        if (window < sched.window_ends.size() &&
            it + 1 == sched.window_ends[window]) {
          welford.regularized_variance(inv_mass_);
          for (std::size_t i = 0; i < dim_; ++i)
            mom_scale_[i] = 1.0 / std::sqrt(inv_mass_[i]);
          welford.reset();
          da.restart(find_reasonable_epsilon());
          ++window;
        }
      }
    }

    const double eps = da.averaged();
    ChainOutput out;
    out.step_size = eps;
    out.inv_mass = inv_mass_;
    out.draws.reserve(cfg_.post_warmup_per_chain);
    out.treedepth.reserve(cfg_.post_warmup_per_chain);
    out.energy.reserve(cfg_.post_warmup_per_chain);
    out.divergent.reserve(cfg_.post_warmup_per_chain);
    out.accept_stat.reserve(cfg_.post_warmup_per_chain);
    for (unsigned it = 0; it < cfg_.post_warmup_per_chain; ++it) {
      const TransitionStats st = transition(eps);
      out.draws.push_back(cur_.q);
      out.treedepth.push_back(st.treedepth);
      out.energy.push_back(st.energy);
      out.divergent.push_back(st.divergent ? 1 : 0);
      out.accept_stat.push_back(st.accept_stat);
      out.n_divergent += st.divergent ? 1 : 0;
      out.max_treedepth_hits += st.hit_max ? 1 : 0;
    }
    return out;
  }

 private:
  struct Level {
    Proposal prop2;
    std::vector<double> ps_end1, ps_beg2, p_end1, p_beg2, rho1, rho2, rho_ext;
  };

  // Evaluates the target, mapping NaN to -inf and enforcing the
  // finite-gradient contract at finite-density points.
  double eval(const double* q, double* g) {
    double lp = target_.logp_grad(q, g);
    if (std::isnan(lp)) lp = -kInf;
    if (std::isfinite(lp)) {
      for (std::size_t i = 0; i < dim_; ++i)
        if (!std::isfinite(g[i]))
          throw NonFiniteGradient(
              "chain " + std::to_string(chain_id_) +
              ": non-finite gradient at a finite-density point");
    }
    return lp;
  }

  double kinetic(const std::vector<double>& p) const {
    double k = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) k += inv_mass_[i] * p[i] * p[i];
    return 0.5 * k;
  }

  // One leapfrog step of the frontier state, in place.
  void leapfrog(double eps) {
    for (std::size_t i = 0; i < dim_; ++i) z_.p[i] += 0.5 * eps * z_.g[i];
    for (std::size_t i = 0; i < dim_; ++i)
      z_.q[i] += eps * inv_mass_[i] * z_.p[i];
    z_.logp = eval(z_.q.data(), z_.g.data());
    for (std::size_t i = 0; i < dim_; ++i) z_.p[i] += 0.5 * eps * z_.g[i];
  }

  // Generalized no-U-turn test: the momentum sum across a trajectory segment
  // must keep a positive component along the (metric-weighted) momenta at
  // both of its ends.
  bool criterion(const double* ps_a, const double* ps_b,
                 const double* rho) const {
    double da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      da += ps_a[i] * rho[i];
      db += ps_b[i] * rho[i];
    }
    return da > 0.0 && db > 0.0;
  }

  // Doubles the trajectory once in the direction of eps_signed, integrating
  // 2^depth leapfrog steps from the current frontier.  Fills the subtree's
  // boundary summaries (weighted momenta ps_beg/ps_end, raw momenta
  // p_beg/p_end, momentum sum rho), its multinomial proposal and log weight,
  // and returns whether the subtree is entirely valid: no divergence, no
  // invalid state, no internal U-turn.
  bool build_tree(unsigned depth, double eps_signed, double H0, Proposal& prop,
                  double* ps_beg, double* ps_end, double* rho, double* p_beg,
                  double* p_end, double& lsw, double& sum_metro,
                  int& n_leapfrog) {
    if (depth == 0) {
      leapfrog(eps_signed);
      ++n_leapfrog;
      double h = std::isfinite(z_.logp) ? -z_.logp + kinetic(z_.p) : kInf;
      if (std::isnan(h)) h = kInf;
      const bool diverged =
          std::isfinite(h) && h - H0 > cfg_.divergence_energy_threshold;
      if (diverged) divergent_ = true;
      lsw = H0 - h;
      sum_metro += H0 - h > 0.0 ? 1.0 : std::exp(H0 - h);
      prop.q = z_.q;
      prop.g = z_.g;
      prop.logp = z_.logp;
      prop.h = h;
      for (std::size_t i = 0; i < dim_; ++i) {
        ps_beg[i] = ps_end[i] = inv_mass_[i] * z_.p[i];
        rho[i] = z_.p[i];
        p_beg[i] = p_end[i] = z_.p[i];
      }
      return std::isfinite(h) && !diverged;
    }

    Level& lv = levels_[depth];
    double lsw1 = -kInf, lsw2 = -kInf;
    if (!build_tree(depth - 1, eps_signed, H0, prop, ps_beg,
                    lv.ps_end1.data(), lv.rho1.data(), p_beg,
                    lv.p_end1.data(), lsw1, sum_metro, n_leapfrog))
      return false;
    if (!build_tree(depth - 1, eps_signed, H0, lv.prop2, lv.ps_beg2.data(),
                    ps_end, lv.rho2.data(), lv.p_beg2.data(), p_end, lsw2,
                    sum_metro, n_leapfrog))
      return false;

    lsw = log_sum_exp(lsw1, lsw2);
    if (rng_.uniform() < std::exp(lsw2 - lsw)) prop = lv.prop2;

    for (std::size_t i = 0; i < dim_; ++i) rho[i] = lv.rho1[i] + lv.rho2[i];
    bool ok = criterion(ps_beg, ps_end, rho);
    // The same test across each inner boundary: one half plus the single
    // adjacent state of the other, catching U-turns the full sum can mask.
    for (std::size_t i = 0; i < dim_; ++i)
      lv.rho_ext[i] = lv.rho1[i] + lv.p_beg2[i];
    ok = ok && criterion(ps_beg, lv.ps_beg2.data(), lv.rho_ext.data());
    for (std::size_t i = 0; i < dim_; ++i)
      lv.rho_ext[i] = lv.p_end1[i] + lv.rho2[i];
    ok = ok && criterion(lv.ps_end1.data(), ps_end, lv.rho_ext.data());
    return ok;
  }

  TransitionStats transition(double eps) {
    divergent_ = false;
    for (std::size_t i = 0; i < dim_; ++i)
      p0_[i] = rng_.normal() * mom_scale_[i];
    const double H0 = -cur_.logp + kinetic(p0_);

    z_plus_.q = cur_.q;
    z_plus_.p = p0_;
    z_plus_.g = cur_.g;
    z_plus_.logp = cur_.logp;
    z_minus_ = z_plus_;
    for (std::size_t i = 0; i < dim_; ++i) {
      ps_plus_[i] = ps_minus_[i] = inv_mass_[i] * p0_[i];
      p_plus_[i] = p_minus_[i] = p0_[i];
      rho_[i] = p0_[i];
    }
    selected_.q = cur_.q;
    selected_.g = cur_.g;
    selected_.logp = cur_.logp;
    selected_.h = H0;

    double lsw_total = 0.0;  // the initial state carries weight exp(0)
    double sum_metro = 0.0;
    int n_leapfrog = 0;
    int completed = 0;
    for (unsigned depth = 0; depth <= cfg_.max_treedepth; ++depth) {
      const bool fwd = rng_.uniform() < 0.5;
      z_ = fwd ? z_plus_ : z_minus_;
      double lsw_sub = -kInf;
      const bool valid = build_tree(
          depth, fwd ? eps : -eps, H0, top_prop_, ps_sub_beg_.data(),
          ps_sub_end_.data(), rho_sub_.data(), p_sub_beg_.data(),
          p_sub_end_.data(), lsw_sub, sum_metro, n_leapfrog);
      (fwd ? z_plus_ : z_minus_) = z_;
      if (!valid) break;
      ++completed;

      // Biased progressive sampling: favor the fresh subtree.
      if (lsw_sub > lsw_total) {
        selected_ = top_prop_;
      } else if (rng_.uniform() < std::exp(lsw_sub - lsw_total)) {
        selected_ = top_prop_;
      }
      lsw_total = log_sum_exp(lsw_total, lsw_sub);

      // U-turn tests across the merged trajectory, against the subtree as a
      // whole and against each side of the weld.
      double* ps_old_same = (fwd ? ps_plus_ : ps_minus_).data();
      double* ps_opposite = (fwd ? ps_minus_ : ps_plus_).data();
      double* p_old_same = (fwd ? p_plus_ : p_minus_).data();
      for (std::size_t i = 0; i < dim_; ++i)
        rho_ext_[i] = rho_[i] + rho_sub_[i];
      bool ok = criterion(ps_opposite, ps_sub_end_.data(), rho_ext_.data());
      for (std::size_t i = 0; i < dim_; ++i)
        rho_ext_[i] = rho_[i] + p_sub_beg_[i];
      ok = ok && criterion(ps_opposite, ps_sub_beg_.data(), rho_ext_.data());
      for (std::size_t i = 0; i < dim_; ++i)
        rho_ext_[i] = p_old_same[i] + rho_sub_[i];
      ok = ok && criterion(ps_old_same, ps_sub_end_.data(), rho_ext_.data());

      for (std::size_t i = 0; i < dim_; ++i) {
        rho_[i] += rho_sub_[i];
        ps_old_same[i] = ps_sub_end_[i];
        p_old_same[i] = p_sub_end_[i];
      }
      if (!ok) break;
    }

    cur_.q = selected_.q;
    cur_.g = selected_.g;
    cur_.logp = selected_.logp;

    TransitionStats st;
    st.treedepth = completed;
    st.energy = selected_.h;
    st.divergent = divergent_;
    st.accept_stat = n_leapfrog ? sum_metro / double(n_leapfrog) : 0.0;
    st.hit_max = completed == int(cfg_.max_treedepth) + 1;
    return st;
  }

  // Initial step size: from the current draw, scale by powers of two until
  // one leapfrog step's acceptance crosses 1/2.
  double find_reasonable_epsilon() {
    for (std::size_t i = 0; i < dim_; ++i)
      p0_[i] = rng_.normal() * mom_scale_[i];
    const double H0 = -cur_.logp + kinetic(p0_);
    const double log_half = std::log(0.5);

    auto log_accept = [&](double eps) {
      z_.q = cur_.q;
      z_.p = p0_;
      z_.g = cur_.g;
      z_.logp = cur_.logp;
      leapfrog(eps);
      const double h = std::isfinite(z_.logp) ? -z_.logp + kinetic(z_.p) : kInf;
      double delta = H0 - h;
      if (std::isnan(delta)) delta = -kInf;
      return delta;
    };

    double eps = 1.0;
    double delta = log_accept(eps);
    const int dir = delta > log_half ? 1 : -1;
    for (int it = 0; it < kEpsSearchMax; ++it) {
      if (dir == 1 && !(delta > log_half)) break;
      if (dir == -1 && !(delta < log_half)) break;
      eps = dir == 1 ? eps * 2.0 : eps * 0.5;
      if (eps > kEpsMax || eps < kEpsMin) break;
      delta = log_accept(eps);
    }
    return std::clamp(eps, kEpsMin, kEpsMax);
  }

  GradTarget& target_;
  const SamplerConfig& cfg_;
  unsigned chain_id_;
  std::size_t dim_;
  RngStream rng_;

  std::vector<double> inv_mass_;   // diagonal inverse metric
  std::vector<double> mom_scale_;  // per-coordinate momentum SD

  Point z_, z_plus_, z_minus_;  // integration frontier and trajectory ends
  Proposal cur_, selected_, top_prop_;
  std::vector<double> p0_, ps_plus_, ps_minus_, p_plus_, p_minus_, rho_,
      rho_sub_, rho_ext_, ps_sub_beg_, ps_sub_end_, p_sub_beg_, p_sub_end_;
  std::vector<Level> levels_;
  bool divergent_ = false;
};

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 2) throw ConfigError("sampler: chains must be at least 2");
  if (warmup < 150)
    throw ConfigError("sampler: warmup must be at least 150 draws");
  if (post_warmup_per_chain < 1)
    throw ConfigError("sampler: post_warmup_per_chain must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw ConfigError("sampler: target_accept must lie in (0, 1)");
  if (max_treedepth > 20)
    throw ConfigError("sampler: max_treedepth above 20 is not supported");
  if (!(divergence_energy_threshold > 0.0))
    throw ConfigError("sampler: divergence threshold must be positive");
}

AdaptationSchedule adaptation_schedule(unsigned warmup) {
  auto frac = [warmup](double f) {
    return std::max(1u, unsigned(std::lround(f * double(warmup))));
  };
  AdaptationSchedule s;
  s.init_end = frac(kInitBufferFrac);
  const unsigned term = frac(kTermBufferFrac);
  unsigned width = frac(kBaseWindowFrac);
  if (s.init_end + width + term >= warmup)
    throw ConfigError("sampler: warmup too short to lay out adaptation");
  s.metric_end = warmup - term;

  unsigned pos = s.init_end;
  while (true) {
    const unsigned end = pos + width;
    // The final window absorbs any tail too short to double again.
    if (end >= s.metric_end || end + 2 * width > s.metric_end) {
      s.window_ends.push_back(s.metric_end);
      break;
    }
    s.window_ends.push_back(end);
    pos = end;
    width *= 2;
  }
  return s;
}

ChainOutput nuts_chain(GradTarget& target, const std::vector<double>& init,
                       const SamplerConfig& cfg, unsigned chain_id) {
  cfg.validate();
  if (init.size() != target.dim())
    throw ShapeMismatch("nuts_chain: initial point has length " +
                        std::to_string(init.size()) + ", target dimension is " +
                        std::to_string(target.dim()));
  NutsWorker worker(target, cfg, chain_id);
  return worker.run(init);
}

}  // namespace ordsim
