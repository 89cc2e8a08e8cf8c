#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ordsim/dgm.hpp"
#include "ordsim/nuts.hpp"

namespace ordsim {

// Axis subsets for the scenario grid.  The defaults span the full study:
// three sample sizes, three category counts, two control shapes, and twelve
// effect configurations (nine scenario-1 mean/sigma combinations, the
// scenario-2 linear trend, and two scenario-3 top-only effects), giving
// 3 x 3 x 2 x 12 = 216 scenarios.  Restricted plans enumerate any subset;
// s1_only_props() gives the 162-scenario grid of scenario-1 cells alone.
struct GridPlan {
  std::vector<std::uint64_t> n_obs{1500, 4000, 10000};
  std::vector<std::size_t> j{3, 7, 11};
  std::vector<ControlShape> shapes{ControlShape::symmetric(),
                                   ControlShape::skewed()};
  std::vector<PropScenario> props = default_props();
  std::uint64_t n_sim = 1000;
  SamplerConfig sampler{};
  std::vector<std::string> models = default_models();

  static std::vector<PropScenario> default_props();
  static std::vector<PropScenario> s1_only_props();
  static std::vector<std::string> default_models();
};

// One fully specified simulation cell.  scenario_id is a stable hash of
// every field, so two configs agree on it exactly when they would produce
// identical runs; key() is the short human-readable form used in logs and
// manifests (not guaranteed unique across different sampler settings).
struct ScenarioConfig {
  std::string scenario_id;
  std::uint64_t n_obs = 0;
  std::size_t j = 0;
  ControlShape shape;
  PropScenario prop;
  std::uint64_t n_sim = 1000;
  SamplerConfig sampler{};
  std::vector<std::string> models;

  std::string key() const;
};

// Assembles a scenario and stamps its id.  Throws ConfigError on an empty
// model list or n_sim == 0, and UnknownKind on an unrecognized model label.
ScenarioConfig make_scenario(std::uint64_t n_obs, std::size_t j,
                             const ControlShape& shape,
                             const PropScenario& prop, std::uint64_t n_sim,
                             const SamplerConfig& sampler,
                             const std::vector<std::string>& models);

// Full cross product of the plan's axes, in axis declaration order (n_obs
// outermost, prop innermost).  Throws EmptyPlan if any axis is empty.
std::vector<ScenarioConfig> build_grid(const GridPlan& plan);

// Convergence summary carried on each record: the cut-point's own R-hat and
// ESS plus the fit-level counters shared by all of the fit's cut-points.
struct RecordDiagnostics {
  double rhat = 0.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
  int n_divergent = 0;
  int max_treedepth_hits = 0;
  bool converged = false;
};

// One (replicate, model, cut-point) result.  Failed replicates keep their
// slot with failed = true, an error description, and NaN estimates, so a
// record file always holds models x (j-1) lines per replicate.
struct MetricRecord {
  std::string scenario_id;
  std::uint64_t replicate = 0;
  std::string model;
  std::size_t cutpoint = 0;  // k on the data scale, 2..j
  double theta_true = 0.0;
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  RecordDiagnostics diagnostics;
  bool refit_escalated = false;
  std::string rng_fingerprint;  // hex key of the replicate's stream root
  bool failed = false;
  std::string error;  // empty when the fit succeeded
};

// Expected records per replicate: every model contributes one record per
// cut-point (the proportional-odds fit repeats its single estimate).
std::size_t records_per_replicate(const ScenarioConfig& sc);

// Runs one replicate: seeds the data stream from (sampler.seed,
// scenario_id, rep), generates one dataset, fits every model on it, and
// emits records in model-then-cut-point order.  Data-generation failures
// (rejection cap) yield all-failed records; a model whose fit fails to
// start yields failed records for that model only.  Throws BoundsViolation
// if rep >= n_sim; configuration errors (unknown label) propagate.
std::vector<MetricRecord> run_replicate(const ScenarioConfig& sc,
                                        std::uint64_t rep);

// One newline-free JSON object with pinned field names: scenario_id,
// replicate, model, cutpoint, theta_true, median, ci_low, ci_high,
// diagnostics{rhat, ess_bulk, ess_tail, n_divergent, max_treedepth_hits,
// converged}, refit_escalated, rng_fingerprint, failed, error.  NaN
// estimates serialize as null.
std::string to_ndjson_line(const MetricRecord& rec);

// Inverse of to_ndjson_line; throws ParseError with context on malformed
// input or missing fields.
MetricRecord record_from_line(const std::string& line);

// Loads a whole newline-delimited record file; ParseError names the line.
std::vector<MetricRecord> load_records(const std::string& path);

// How the OR-scale relative bias collapses across replicates: the mean of
// per-replicate OR ratios minus one (primary), or the ratio of the mean
// estimated OR to the mean true OR (alternative); aggregate() reports the
// chosen one and logs both to the audit sink when given.
enum class RelBias { MeanRatio, RatioOfMeans };

struct AggregateOptions {
  RelBias relbias = RelBias::MeanRatio;
  // Also drop records whose fit retained post-warmup divergences after the
  // escalated retry (sensitivity exclusion).
  bool exclude_divergent = false;
  unsigned bootstrap_b = 1000;
  std::ostream* audit = nullptr;  // one line per cell, both relbias forms
};

// Per-(scenario, model, cut-point) performance metrics with bootstrap Monte
// Carlo standard errors and their jackknife-after-bootstrap uncertainties.
// Cells with fewer than 10 effective replicates carry NaN MCSEs.
struct AggregateRow {
  std::string scenario_id;
  std::string model;
  std::size_t cutpoint = 0;
  double bias = 0.0, bias_mcse = 0.0, bias_mcse_se = 0.0;
  double relbias_pct = 0.0, relbias_mcse = 0.0, relbias_mcse_se = 0.0;
  double coverage = 0.0, coverage_mcse = 0.0, coverage_mcse_se = 0.0;
  double mse = 0.0, mse_mcse = 0.0, mse_mcse_se = 0.0;
  std::uint64_t n_effective_reps = 0;
};

// Folds records into one row per cell, rows sorted by (scenario_id, model,
// cutpoint) so the result is independent of record order.  Failed (and
// optionally divergent) records are excluded, decrementing
// n_effective_reps.  Throws InsufficientReplicates if any cell keeps fewer
// than 2 records, and SelfCheckFailure if a cell's bootstrap coverage MCSE
// disagrees with the closed form sqrt(p(1-p)/n) by more than 15%.
std::vector<AggregateRow> aggregate(const std::vector<MetricRecord>& records,
                                    const AggregateOptions& opts = {});

enum class Metric { Bias, RelBiasPct, Coverage, Mse };

// Bootstrap MCSE of one metric over one cell's records plus the
// jackknife-after-bootstrap standard error of that MCSE; upper_bound =
// mcse + 2 * mcse_se is the precision certificate used to size the study.
// Requires >= 10 successful records from a single cell.
struct McseResult {
  double estimate = 0.0;
  double mcse = 0.0;
  double mcse_se = 0.0;
  double upper_bound = 0.0;
};
McseResult metric_mcse(const std::vector<MetricRecord>& cell_records,
                       Metric metric, unsigned bootstrap_b = 1000);

// True when every metric's MCSE upper bound in every row is below the
// threshold (NaN MCSEs from tiny cells never pass).
bool all_upper_bounds_below(const std::vector<AggregateRow>& rows,
                            double threshold);

// Grows the replicate count in batches until every metric's MCSE upper
// bound clears the threshold or the scenario's n_sim cap is reached;
// returns the final count.
struct AdaptOptions {
  double threshold = 0.05;
  std::uint64_t batch = 250;
  unsigned bootstrap_b = 1000;
};
std::uint64_t adapt_nsim(const ScenarioConfig& sc,
                         const AdaptOptions& opts = {});

// Re-derives theta_true (and the stream fingerprint) from the seeded data
// generator for every stride-th replicate present in `records`; returns
// the number of records checked.  Throws SelfCheckFailure on any mismatch.
std::uint64_t audit_theta_truth(const ScenarioConfig& sc,
                                const std::vector<MetricRecord>& records,
                                std::uint64_t stride = 100);

// Execution of a scenario against an on-disk record file.
struct RunOptions {
  std::string out_dir;
  unsigned jobs = 1;
  bool resume = true;  // keep a valid ordered prefix of an existing file
};

struct ScenarioRunResult {
  std::string record_path;
  std::uint64_t resumed_replicates = 0;   // complete on disk before the run
  std::uint64_t executed_replicates = 0;  // computed by this call
};

// Record file path for a scenario under an output directory.
std::string record_file_path(const std::string& out_dir,
                             const ScenarioConfig& sc);

// Runs all replicates of one scenario, appending newline-delimited records
// in strict replicate order regardless of worker count, so the finished
// file is byte-identical for any `jobs`.  With resume, an existing file is
// first scanned: the longest prefix of complete, well-formed, correctly
// seeded replicate blocks is kept and the file is truncated just past it;
// the run continues from the first missing replicate.
ScenarioRunResult run_scenario(const ScenarioConfig& sc,
                               const RunOptions& opts);

// Atomic (temp + rename) CSV with the fixed header scenario_id,model,
// cutpoint,bias,bias_mcse,relbias_pct,relbias_mcse,coverage,coverage_mcse,
// mse,mse_mcse,n_effective_reps and %.6g numeric formatting.
void write_aggregate_csv(const std::vector<AggregateRow>& rows,
                         const std::string& path);

// Atomic JSON manifest: plan axes, sampler settings, seed, library
// version, scenario ids/keys, and wall-clock timestamps.
void write_manifest(const GridPlan& plan,
                    const std::vector<ScenarioConfig>& scenarios,
                    const std::string& started_at_iso,
                    const std::string& finished_at_iso,
                    const std::string& path);

// Current UTC time formatted as ISO-8601 (manifest timestamps).
std::string utc_timestamp();

// Whole-grid driver: builds the grid, runs every scenario (resumable),
// aggregates all records, and writes aggregate.csv plus manifest.json under
// out_dir.  Returns the per-scenario run results.
struct GridRunResult {
  std::vector<ScenarioRunResult> scenarios;
  std::string aggregate_path;
  std::string manifest_path;
};
GridRunResult run_grid(const GridPlan& plan, const RunOptions& opts,
                       const AggregateOptions& agg = {});

}  // namespace ordsim
