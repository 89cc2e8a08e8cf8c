#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ordsim/diagnostics.hpp"
#include "ordsim/fit.hpp"
#include "ordsim/model.hpp"
#include "ordsim/nuts.hpp"
#include "ordsim/ordinal.hpp"

namespace ordsim {

// Ordered category scale one trial endpoint is measured on.  labels[i] names
// category i + 1; the category count j is the number of labels.
struct TrialSchema {
  std::string name;
  std::vector<std::string> labels;

  std::size_t j() const { return labels.size(); }
};

// Reads a schema document: a JSON object {"name": ..., "labels": [...]} with
// at least two labels.  Throws ParseError, with the path in the message, for
// an unreadable file, malformed JSON, or the wrong shape.
TrialSchema load_schema(const std::string& path);

// Writes the JSON shape load_schema reads (atomic: temp + rename).
void write_schema_json(const TrialSchema& schema, const std::string& path);

// One subject row.  outcome holds a category in 1..j, or nothing when the
// outcome is missing.
struct TrialRow {
  std::string subject_id;
  int arm = 0;  // 0 control, 1 treatment
  std::optional<int> outcome;
};

struct TrialDataset {
  TrialSchema schema;
  std::vector<TrialRow> rows;

  std::size_t j() const { return schema.j(); }
};

// Maps two raw arm codes of a multi-arm file onto the pairwise {control,
// treatment} comparison; rows carrying any other arm code are dropped.
struct ArmFilter {
  int control = 0;
  int treatment = 1;
};

// Reads a delimited text file with header subject_id,arm,outcome.  The
// delimiter is a comma, or a tab when the header line contains one.  An
// empty outcome field marks a missing outcome (the row is kept); blank lines
// are skipped; a UTF-8 byte-order mark before the header is tolerated.
// Fields cannot contain the delimiter (no quoting).
//
// Errors: ParseError for IO failures, a bad header, a wrong field count, an
// empty subject_id or arm, or unparseable numbers, all with row/column
// context; DomainError when arm is not a declared code or outcome falls
// outside 1..j, naming the row; DuplicateSubject on a repeated subject_id;
// ConfigError for a filter mapping both arms to the same code.
TrialDataset load_trial(const std::string& path, const TrialSchema& schema,
                        const std::optional<ArmFilter>& filter = std::nullopt);

// Inverse of load_trial: comma-delimited, missing outcomes as empty fields
// (atomic: temp + rename).
void write_trial_csv(const TrialDataset& d, const std::string& path);

// Drops rows whose outcome is missing and reports how many went.  Throws
// EmptyAfterFilter when no complete row remains.
std::pair<TrialDataset, std::size_t> complete_cases(const TrialDataset& d);

// Arm-by-category counts over the rows with an observed outcome.
OrdinalCounts tabulate(const TrialDataset& d);

// Categories (1-based) observed fewer than threshold times in either arm.
std::vector<std::size_t> sparse_categories(const OrdinalCounts& counts,
                                           std::size_t threshold);

// Cut-points k = 2..j whose dichotomized 2x2 table has an empty cell, i.e.
// where one arm has every subject on the same side of the dichotomy.
std::vector<std::size_t> prior_dominated_cutpoints(const OrdinalCounts& counts);

// One model's contribution to a case analysis: per-cut-point posterior
// summaries plus the convergence record, or the error that stopped the fit.
// diagnostics.params aligns with cutpoints; a failed fit keeps the cut-point
// layout with NaN summaries so downstream tables stay rectangular.
struct CaseModelFit {
  std::string model;
  std::vector<std::size_t> cutpoints;       // data-scale labels 2..j
  std::vector<PosteriorSummary> summaries;  // one per cut-point
  DiagnosticsBundle diagnostics;
  bool escalated = false;
  bool failed = false;
  std::string error;
};

// Everything a per-cut-point forest plot needs for one endpoint: the counts
// actually analysed, data-sparsity flags, and one fit per requested model.
struct CaseAnalysisResult {
  std::string endpoint;  // schema name
  OrdinalCounts counts;  // complete cases, arm by category
  std::size_t n_complete = 0;
  std::size_t n_dropped = 0;
  // Categories (1-based) observed fewer than threshold times in either arm.
  // Flagged, never merged: sparsity must stay visible downstream.
  std::vector<std::size_t> sparse_categories;
  // Cut-points whose dichotomized 2x2 table has an empty cell.  There the
  // log-OR likelihood cannot identify the effect, so the Normal(0, 100)
  // prior carries the posterior; the fits are still reported, flagged.
  std::vector<std::size_t> prior_dominated;
  std::vector<CaseModelFit> fits;  // requested-model order

  // The fit for one label, or nullptr when it was not requested.
  const CaseModelFit* fit(const std::string& label) const;
};

struct CaseOptions {
  std::vector<std::string> models = all_model_labels();
  std::size_t sparse_threshold = 5;
  // Fits may run in parallel; results are identical for any jobs value.
  unsigned jobs = 1;
};

// Complete-case analysis of one endpoint: filters to complete cases,
// tabulates, flags sparse categories and prior-dominated cut-points, and
// fits every requested model to the same counts with the same sampler
// configuration.  Model failures are isolated: a fit that throws a library
// error becomes a failed entry and the remaining models still run.
//
// Requires at least three categories (j >= 3) and at least one subject per
// arm after filtering.  Only the counts enter the likelihood, so the result
// is invariant to row order and subject relabeling, and each model's
// summaries equal a direct run_model on tabulate()'d counts with the same
// configuration.
CaseAnalysisResult analyze_case(const TrialDataset& d, const SamplerConfig& cfg,
                                const CaseOptions& opts = {});

// Writes one endpoint's analysis as newline-delimited JSON with a pinned
// field order: one "case" line holding counts and flags, then one "cell"
// line per model and cut-point (full %.17g precision, NaN as null).
// Atomic: temp + rename.
void write_case_records(const CaseAnalysisResult& r, const std::string& path);

// Reads a file write_case_records produced, rebuilding the analysis result
// (posterior draws are never persisted, only their summaries).  Throws
// ParseError on anything malformed.
CaseAnalysisResult load_case_records(const std::string& path);

// Six-significant-digit CSV summary, one row per model and cut-point, with
// header endpoint,model,cutpoint,median,ci_low,ci_high,rhat,ess_bulk,
// ess_tail,n_divergent,converged,escalated,prior_dominated,failed.
// Atomic: temp + rename.
void write_case_csv(const CaseAnalysisResult& r, const std::string& path);

// Recipe for one deterministic synthetic endpoint: per-arm category weights
// (unnormalized; zeros allowed and produce structurally empty categories),
// a total subject count split roughly half per arm, and a missingness rate.
struct SyntheticEndpoint {
  std::string name;
  std::vector<std::string> labels;
  std::vector<double> control_weights;
  std::vector<double> treatment_weights;
  std::uint64_t n_subjects = 0;
  double missing_rate = 0.0;
};

// Generates the dataset the recipe describes, reproducibly for a given seed.
// Throws ConfigError for mismatched weight lengths, negative weights, a
// zero weight sum, fewer than two subjects, or missing_rate outside [0, 1).
TrialDataset synthetic_trial(const SyntheticEndpoint& e, std::uint64_t seed);

// The four demo endpoints shipped under data/demo_trial/: an 8-point skewed
// status scale, a 5-point symptom grade, and two 29-point free-days scales
// whose weight vectors contain zeros, so some categories are always empty.
std::vector<SyntheticEndpoint> demo_endpoints();

// The seed the demo bundle is generated under: one stream per endpoint name,
// so regenerating any single endpoint reproduces the committed file.
std::uint64_t demo_trial_seed(const std::string& endpoint_name);

}  // namespace ordsim
