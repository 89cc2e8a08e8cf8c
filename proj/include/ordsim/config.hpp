#pragma once

#include <string>

#include "ordsim/dgm.hpp"
#include "ordsim/simstudy.hpp"

namespace ordsim {

// Everything a simulation run needs, as read from one config file: the grid
// plan (axes, replicate count, sampler settings, model list), aggregation
// options, and where results land.
struct RunConfig {
  GridPlan plan;
  AggregateOptions agg;
  std::string out_dir = "runs/out";
  // Worker threads per scenario.  0 = unset, resolved to the logical core
  // count at run time; an explicit config value must be at least 1.
  unsigned jobs = 0;
};

// Parses a config in either of two encodings, chosen by the first
// non-whitespace character: '{' means JSON, anything else the TOML subset
// below.  `origin` names the source in error messages (usually the path).
//
//   # threads and destination
//   out_dir = "runs/pilot"
//   jobs = 4
//   seed = 20260819
//   models = ["po", "ppo-u"]
//
//   [grid]
//   n_obs = [1500, 4000]      # scalars are accepted where arrays fit
//   j = 7
//   shapes = ["symmetric", "skewed"]
//   props = ["s1-or1.50-sd0.00", "s2", "s3-or1.10"]   # or "all" / "s1-only"
//   n_sim = 200
//
//   [sampler]
//   chains = 4
//   warmup = 500
//   post_warmup = 500
//   target_accept = 0.8
//   max_treedepth = 10
//
//   [aggregate]
//   relbias = "mean-ratio"    # or "ratio-of-means"
//   exclude_divergent = false
//   bootstrap_b = 1000
//
// The TOML subset: comments with '#', [table] headers, key = value lines,
// double-quoted strings (\\ \" \n \t escapes), integers, floats, booleans,
// and single-line arrays of those scalars.  Every key is whitelisted;
// anything unrecognized, duplicated, or out of range throws ConfigError
// naming the key, and malformed text throws ParseError with origin:line.
// Omitted keys keep the defaults above (grid axes default to the full
// factorial plan).  Proportionality keys follow the scenario naming scheme:
// "s1-or<OR>-sd<SD>", "s2", "s3-or<OR>" with odds ratios on the natural
// scale; numbers are accepted in any float spelling and canonicalized.
RunConfig parse_run_config(const std::string& text, const std::string& origin);

// parse_run_config over the contents of `path` (ParseError if unreadable).
RunConfig load_run_config(const std::string& path);

// A single proportionality-scenario key ("s1-or1.50-sd0.00", "s2",
// "s3-or1.10") parsed into its generator settings; ConfigError on any other
// shape.  Round-trips with PropScenario::key() up to float canonicalization.
PropScenario prop_from_key(const std::string& key);

// "symmetric" or "skewed"; ConfigError otherwise.
ControlShape shape_from_name(const std::string& name);

}  // namespace ordsim
