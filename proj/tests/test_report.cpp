#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "ordsim/errors.hpp"
#include "ordsim/report.hpp"
#include "ordsim/simstudy.hpp"
#include "ordsim/trialio.hpp"

using namespace ordsim;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t count_substr(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = hay.find(needle); at != std::string::npos;
       at = hay.find(needle, at + needle.size()))
    ++n;
  return n;
}

// A row whose metric values survive %.6g round-tripping exactly (all are
// short binary fractions), so read-back can be compared with ==.
AggregateRow make_row(const std::string& scen, const std::string& model,
                      std::size_t k, double base) {
  AggregateRow r;
  r.scenario_id = scen;
  r.model = model;
  r.cutpoint = k;
  r.bias = base;
  r.bias_mcse = 0.0125;
  r.relbias_pct = base * 100.0;
  r.relbias_mcse = 1.25;
  r.coverage = 0.9375;
  r.coverage_mcse = 0.015625;
  r.mse = 0.0625;
  r.mse_mcse = 0.03125;
  r.bias_mcse_se = r.relbias_mcse_se = r.coverage_mcse_se = r.mse_mcse_se =
      0.001;
  r.n_effective_reps = 40;
  return r;
}

std::vector<AggregateRow> sample_rows() {
  std::vector<AggregateRow> rows;
  for (const char* model : {"po", "ppo-u"})
    for (std::size_t k = 2; k <= 4; ++k)
      rows.push_back(make_row("n1500-j4-symmetric-s2", model, k,
                              k == 3 ? -0.25 : 0.125));
  for (std::size_t k = 2; k <= 3; ++k)
    rows.push_back(make_row("n4000-j3-skewed-s2", "po", k, 0.5));
  return rows;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("ordsim-report-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const fs::path& dir, const std::string& name,
                       const std::string& content) {
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  REQUIRE(bool(out));
  out << content;
  return path.string();
}

// A hand-built case analysis: one clean fit, one failed, both flags set.
CaseAnalysisResult sample_case() {
  CaseAnalysisResult res;
  res.endpoint = "triage & flow";  // exercises XML escaping
  res.counts.control = {30, 20, 10, 5};
  res.counts.treatment = {25, 25, 12, 0};
  res.n_complete = 127;
  res.n_dropped = 3;
  res.sparse_categories = {4};
  res.prior_dominated = {4};

  CaseModelFit sep;
  sep.model = "sep-logistic";
  sep.cutpoints = {2, 3, 4};
  sep.summaries = {{0.25, -0.125, 0.5}, {0.1, -0.3, 0.45}, {-1.5, -4.0, 1.25}};
  CaseModelFit po;
  po.model = "po";
  po.failed = true;
  po.error = "sampler: chains disagreed\nsecond line";
  res.fits = {sep, po};
  return res;
}

}  // namespace

TEST_CASE("report kind names round-trip") {
  for (const char* name : {"bias", "relbias", "coverage", "mse", "forest"}) {
    const ReportKind kind = report_kind_from(name);
    CHECK(report_kind_name(kind) == name);
  }
  CHECK_THROWS_WITH_AS(report_kind_from("histogram"),
                       doctest::Contains("unknown report kind \"histogram\""),
                       UnknownKind);
}

TEST_CASE("aggregate csv round-trips through the reader") {
  const fs::path dir = fresh_dir("agg");
  const std::vector<AggregateRow> rows = sample_rows();
  const std::string path = (dir / "aggregate.csv").string();
  write_aggregate_csv(rows, path);

  const std::vector<AggregateRow> back = read_aggregate_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].scenario_id == rows[i].scenario_id);
    CHECK(back[i].model == rows[i].model);
    CHECK(back[i].cutpoint == rows[i].cutpoint);
    CHECK(back[i].bias == rows[i].bias);
    CHECK(back[i].bias_mcse == rows[i].bias_mcse);
    CHECK(back[i].relbias_pct == rows[i].relbias_pct);
    CHECK(back[i].relbias_mcse == rows[i].relbias_mcse);
    CHECK(back[i].coverage == rows[i].coverage);
    CHECK(back[i].coverage_mcse == rows[i].coverage_mcse);
    CHECK(back[i].mse == rows[i].mse);
    CHECK(back[i].mse_mcse == rows[i].mse_mcse);
    CHECK(back[i].n_effective_reps == rows[i].n_effective_reps);
    // The CSV does not carry jackknife SEs; they come back unset.
    CHECK(std::isnan(back[i].coverage_mcse_se));
    CHECK(std::isnan(back[i].mse_mcse_se));
  }
  fs::remove_all(dir);
}

TEST_CASE("aggregate csv reader matches columns by name") {
  const fs::path dir = fresh_dir("agg-cols");

  // Permuted column order plus an extra column must read identically.
  const std::string permuted = write_file(
      dir, "permuted.csv",
      "note,coverage,coverage_mcse,model,scenario_id,cutpoint,bias,bias_mcse,"
      "relbias_pct,relbias_mcse,mse,mse_mcse,n_effective_reps\n"
      "x,0.9375,0.015625,po,s,2,0.125,0.0125,12.5,1.25,0.0625,0.03125,40\n");
  const std::vector<AggregateRow> rows = read_aggregate_csv(permuted);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].model == "po");
  CHECK(rows[0].scenario_id == "s");
  CHECK(rows[0].cutpoint == 2);
  CHECK(rows[0].coverage == 0.9375);
  CHECK(rows[0].n_effective_reps == 40);

  const std::string missing = write_file(
      dir, "missing.csv",
      "scenario_id,model,cutpoint,bias,bias_mcse,relbias_pct,relbias_mcse,"
      "mse,mse_mcse,n_effective_reps\ns,po,2,0,0,0,0,0,0,1\n");
  CHECK_THROWS_WITH_AS(read_aggregate_csv(missing),
                       doctest::Contains("missing columns: coverage, "
                                         "coverage_mcse"),
                       MissingColumns);

  const std::string garbled = write_file(
      dir, "garbled.csv",
      "scenario_id,model,cutpoint,bias,bias_mcse,relbias_pct,relbias_mcse,"
      "coverage,coverage_mcse,mse,mse_mcse,n_effective_reps\n"
      "s,po,2,zero,0,0,0,0,0,0,0,1\n");
  CHECK_THROWS_WITH_AS(read_aggregate_csv(garbled),
                       doctest::Contains("column bias"), ParseError);

  const std::string ragged = write_file(
      dir, "ragged.csv",
      "scenario_id,model,cutpoint,bias,bias_mcse,relbias_pct,relbias_mcse,"
      "coverage,coverage_mcse,mse,mse_mcse,n_effective_reps\ns,po,2,0\n");
  CHECK_THROWS_WITH_AS(read_aggregate_csv(ragged),
                       doctest::Contains("expected 12 fields"), ParseError);

  CHECK_THROWS_WITH_AS(read_aggregate_csv((dir / "absent.csv").string()),
                       doctest::Contains("absent.csv"), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("tidy csv emits one metric and round-trips exactly") {
  const std::vector<AggregateRow> rows = sample_rows();

  for (const char* name : {"bias", "relbias", "coverage", "mse"}) {
    const ReportKind kind = report_kind_from(name);
    const std::string text = tidy_csv(rows, kind);
    const std::vector<TidyCell> cells = parse_tidy_csv(text);
    REQUIRE(cells.size() == rows.size());
    CHECK(emit_tidy_csv(cells) == text);  // parse is a right inverse of emit
    for (const auto& c : cells) CHECK(c.metric == name);
  }

  const std::string text = tidy_csv(rows, ReportKind::Coverage);
  CHECK(text.rfind("scenario_id,model,cutpoint,metric,value,mcse\n", 0) == 0);
  const std::vector<TidyCell> cells = parse_tidy_csv(text);
  CHECK(cells[0].scenario_id == "n1500-j4-symmetric-s2");
  CHECK(cells[0].model == "po");
  CHECK(cells[0].cutpoint == 2);
  CHECK(cells[0].value == 0.9375);
  CHECK(cells[0].mcse == 0.015625);

  CHECK_THROWS_AS(tidy_csv(rows, ReportKind::Forest), UnknownKind);
  CHECK_THROWS_WITH_AS(parse_tidy_csv("model,cutpoint\npo,2\n"),
                       doctest::Contains("missing columns"), MissingColumns);
  CHECK_THROWS_WITH_AS(
      parse_tidy_csv(
          "scenario_id,model,cutpoint,metric,value,mcse\ns,po,2,bias,x,0\n"),
      doctest::Contains("column value"), ParseError);
}

TEST_CASE("metric svgs facet by model and keep reproducible bytes") {
  std::vector<AggregateRow> rows = sample_rows();
  rows[1].bias = kNaN;  // one unplottable cell in the first scenario

  const auto svgs = metric_svgs(rows, ReportKind::Bias);
  REQUIRE(svgs.size() == 2);
  CHECK(svgs[0].first == "n1500-j4-symmetric-s2");
  CHECK(svgs[1].first == "n4000-j3-skewed-s2");

  const std::string& fig = svgs[0].second;
  CHECK(count_substr(fig, "class=\"panel\"") == 2);       // po and ppo-u
  CHECK(count_substr(fig, "class=\"panel-title\"") == 2);
  CHECK(count_substr(fig, "data-model=\"po\"") == 1);
  // 6 cells, one NaN: points drop it, whiskers too.
  CHECK(count_substr(fig, "class=\"point\"") == 5);
  CHECK(count_substr(fig, "class=\"whisker\"") == 5);
  CHECK(count_substr(fig, "class=\"refline\"") == 2);  // dashed zero per panel
  CHECK(fig.find("stroke-dasharray") != std::string::npos);
  CHECK(fig.find("font-family=\"sans-serif\"") != std::string::npos);
  CHECK(fig.find("bias by cut-point") != std::string::npos);

  // Coverage references 0.95; MSE plots with no reference line at all.
  const auto cov = metric_svgs(rows, ReportKind::Coverage);
  CHECK(count_substr(cov[0].second, "class=\"refline\"") == 2);
  const auto mse = metric_svgs(rows, ReportKind::Mse);
  CHECK(count_substr(mse[0].second, "class=\"refline\"") == 0);

  // Byte determinism: a second render is identical.
  const auto again = metric_svgs(rows, ReportKind::Bias);
  CHECK(again[0].second == svgs[0].second);
  CHECK(again[1].second == svgs[1].second);

  CHECK_THROWS_AS(metric_svgs(rows, ReportKind::Forest), UnknownKind);
}

TEST_CASE("forest svg draws tracks, flags, and footnotes") {
  const CaseAnalysisResult res = sample_case();
  const std::string svg = forest_svg(res);

  // Three cut-point bands; only the healthy fit draws intervals.
  CHECK(count_substr(svg, "class=\"row-label\"") == 3);
  CHECK(count_substr(svg, "class=\"ci\"") == 3);
  CHECK(count_substr(svg, "class=\"median\"") == 3);
  CHECK(count_substr(svg, "class=\"zero\"") == 1);
  CHECK(count_substr(svg, "class=\"legend-swatch\"") == 2);
  CHECK(svg.find("po (failed)") != std::string::npos);

  // The sep-logistic k=4 track carries the prior-dominated marker, and all
  // three footnote kinds appear (with the failure's first line only).
  CHECK(count_substr(svg, "class=\"prior-dominated-marker\"") == 1);
  CHECK(svg.find("prior-dominated cut-point") != std::string::npos);
  CHECK(svg.find("k = 4") != std::string::npos);
  CHECK(svg.find("sparse categories") != std::string::npos);
  CHECK(svg.find("po failed: sampler: chains disagreed") != std::string::npos);
  CHECK(svg.find("second line") == std::string::npos);

  // Title text is escaped, counts are reported, bytes are reproducible.
  CHECK(svg.find("triage &amp; flow") != std::string::npos);
  CHECK(svg.find("127 complete cases, 3 dropped") != std::string::npos);
  CHECK(forest_svg(res) == svg);
}
