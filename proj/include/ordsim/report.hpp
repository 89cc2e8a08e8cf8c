#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ordsim/simstudy.hpp"
#include "ordsim/trialio.hpp"

namespace ordsim {

// What a report renders: one of the four aggregate metrics as
// metric-vs-cut-point panels, or a case analysis as a forest chart.
enum class ReportKind { Bias, RelBias, Coverage, Mse, Forest };

// "bias", "relbias", "coverage", "mse", "forest"; UnknownKind otherwise.
ReportKind report_kind_from(const std::string& name);
const std::string& report_kind_name(ReportKind kind);

// Reads an aggregate CSV back into rows, matching columns by header name so
// column order and extra columns are tolerated.  The twelve written columns
// are required; a MissingColumns error lists every absent one.  The
// *_mcse_se fields are not stored in the CSV and come back as NaN.
std::vector<AggregateRow> read_aggregate_csv(const std::string& path);

// One metric cell in long form, the shape plotting tools ingest directly.
struct TidyCell {
  std::string scenario_id;
  std::string model;
  std::size_t cutpoint = 0;
  std::string metric;
  double value = 0.0;
  double mcse = 0.0;
};

// Long-format CSV (scenario_id,model,cutpoint,metric,value,mcse) of one
// metric across aggregate rows, %.6g numbers.  Forest is not an aggregate
// metric and throws UnknownKind; case tables come from write_case_csv.
std::string tidy_csv(const std::vector<AggregateRow>& rows, ReportKind kind);

// Inverse of tidy_csv up to float formatting: tidy_csv emits exactly the
// text that re-emitting parsed cells would produce.  Columns are matched by
// name (MissingColumns when absent); malformed rows raise ParseError.
std::vector<TidyCell> parse_tidy_csv(const std::string& text);
std::string emit_tidy_csv(const std::vector<TidyCell>& cells);

// Static SVG panels for one aggregate metric: one document per scenario id
// (in first-appearance order), each faceted by model with cut-point on the
// horizontal axis, points with vertical +/- MCSE whiskers, and a dashed
// reference line (0.95 for coverage, 0 for bias and relative bias).  Output
// depends only on the rows — no timestamps — so bytes are reproducible.
std::vector<std::pair<std::string, std::string>> metric_svgs(
    const std::vector<AggregateRow>& rows, ReportKind kind);

// Forest chart of one case analysis: a band per cut-point, five offset
// model tracks with horizontal 95% credible-interval whiskers and median
// points, a dashed zero line, markers plus a footnote on prior-dominated
// sep-logistic cut-points, and footnotes for sparse categories and failed
// model fits.  Deterministic bytes, like metric_svgs.
std::string forest_svg(const CaseAnalysisResult& result);

}  // namespace ordsim
