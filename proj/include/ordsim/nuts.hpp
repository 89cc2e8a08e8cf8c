#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ordsim/target.hpp"

namespace ordsim {

// Knobs for one MCMC run.  Defaults give the full-length fit used for the
// simulation studies; validation suites shrink the draw counts to keep
// wall time down.
struct SamplerConfig {
  unsigned chains = 4;
  unsigned warmup = 3750;            // adaptation draws, discarded
  unsigned post_warmup_per_chain = 3750;       // retained draws per chain
  double target_accept = 0.8;        // dual-averaging target
  unsigned max_treedepth = 10;       // deepest trajectory extension attempted
  double divergence_energy_threshold = 1000.0;
  std::uint64_t seed = 0;

  // Throws ConfigError on out-of-range settings (chains < 2, warmup < 150,
  // post_warmup_per_chain < 1, target_accept outside (0,1), max_treedepth
  // above 20, or a non-positive divergence threshold).
  void validate() const;
};

// Everything one chain produces: retained draws plus per-draw sampler
// statistics and the adapted tuning state.
struct ChainOutput {
  std::vector<std::vector<double>> draws;  // post_warmup_per_chain x dim, unconstrained
  std::vector<int> treedepth;              // completed trajectory extensions
  std::vector<double> energy;              // Hamiltonian of the kept state
  std::vector<std::uint8_t> divergent;     // any divergence in the transition
  std::vector<double> accept_stat;         // mean Metropolis prob, trajectory

  double step_size = 0.0;        // adapted leapfrog step size
  std::vector<double> inv_mass;  // diagonal inverse metric (~posterior vars)

  int n_divergent = 0;         // post-warmup divergent transitions
  int max_treedepth_hits = 0;  // post-warmup transitions stopped by the cap
};

// Warmup phase boundaries: [0, init) adapts step size only; [init,
// windows...) accumulates the diagonal metric over doubling windows, each
// entry one window's end; [metric_end, warmup) re-tunes the step size under
// the final metric.  The buffers scale with warmup length (7.5% / 2.5% /
// 5% for init / first window / terminal, the conventional 75/25/50 split of
// a 1000-draw warmup), and the last window absorbs any remainder too small
// to double again.
struct AdaptationSchedule {
  unsigned init_end = 0;
  std::vector<unsigned> window_ends;  // ascending, last == metric_end
  unsigned metric_end = 0;
};
AdaptationSchedule adaptation_schedule(unsigned warmup);

// Runs one no-U-turn chain: multinomial sampling over doubling trajectories
// with the generalized U-turn criterion (momentum-sum tests against both
// subtree boundaries), diagonal metric and step size adapted during warmup.
// A transition attempts extensions at depths 0..max_treedepth inclusive, so
// max_treedepth = 0 integrates exactly one leapfrog step per transition.
// States where the target returns -inf end trajectory growth but are not
// divergences; a divergence is a finite-density state whose energy error
// exceeds the threshold.  Draw sequences depend only on (target, init, cfg,
// chain_id), so chains are exchangeable under chain_id permutation.
//
// Throws InitFailure if the density at init is not finite and
// NonFiniteGradient if the target ever reports a non-finite gradient at a
// finite-density point.
ChainOutput nuts_chain(GradTarget& target, const std::vector<double>& init,
                       const SamplerConfig& cfg, unsigned chain_id);

}  // namespace ordsim
