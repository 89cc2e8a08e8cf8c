#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "ordsim/errors.hpp"
#include "ordsim/rng.hpp"
#include "ordsim/simstudy.hpp"

using namespace ordsim;
namespace fs = std::filesystem;

namespace {

SamplerConfig tiny_sampler(std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 200;
  cfg.post_warmup_per_chain = 250;
  cfg.seed = seed;
  return cfg;
}

ScenarioConfig tiny_scenario(std::uint64_t seed,
                             const std::vector<std::string>& models,
                             std::uint64_t n_sim, double mean_log_or) {
  return make_scenario(400, 3, ControlShape::symmetric(),
                       PropScenario::s1(mean_log_or, 0.0), n_sim,
                       tiny_sampler(seed), models);
}

MetricRecord synthetic_record(const std::string& scen, std::uint64_t rep,
                              const std::string& model, std::size_t k,
                              double theta, double median, double lo,
                              double hi) {
  MetricRecord rec;
  rec.scenario_id = scen;
  rec.replicate = rep;
  rec.model = model;
  rec.cutpoint = k;
  rec.theta_true = theta;
  rec.median = median;
  rec.ci_low = lo;
  rec.ci_high = hi;
  rec.diagnostics = {1.0, 500.0, 500.0, 0, 0, true};
  rec.rng_fingerprint = "feedfacefeedface";
  return rec;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("ordsim-test-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("grid plans expand to the full cross product") {
  GridPlan plan;
  const std::vector<ScenarioConfig> grid = build_grid(plan);
  CHECK(grid.size() == 216);
  std::set<std::string> ids;
  for (const ScenarioConfig& sc : grid) ids.insert(sc.scenario_id);
  CHECK(ids.size() == 216);

  GridPlan s1_plan;
  s1_plan.props = GridPlan::s1_only_props();
  CHECK(build_grid(s1_plan).size() == 162);

  GridPlan single;
  single.n_obs = {4000};
  single.j = {7};
  single.shapes = {ControlShape::skewed()};
  single.props = {PropScenario::s2()};
  const std::vector<ScenarioConfig> one = build_grid(single);
  REQUIRE(one.size() == 1);
  CHECK(one[0].key() == "n4000-j7-skewed-s2");

  GridPlan empty = single;
  empty.props.clear();
  CHECK_THROWS_AS(build_grid(empty), EmptyPlan);
}

TEST_CASE("scenario ids are stable hashes of every field") {
  const ScenarioConfig a = tiny_scenario(7, {"po"}, 20, std::log(1.5));
  const ScenarioConfig b = tiny_scenario(7, {"po"}, 20, std::log(1.5));
  CHECK(a.scenario_id == b.scenario_id);
  CHECK(a.scenario_id.size() == 16);

  ScenarioConfig c = tiny_scenario(8, {"po"}, 20, std::log(1.5));
  CHECK(c.scenario_id != a.scenario_id);  // sampler seed is a field
  CHECK(c.key() == a.key());              // but not part of the human key

  const ScenarioConfig d = tiny_scenario(7, {"po"}, 21, std::log(1.5));
  CHECK(d.scenario_id != a.scenario_id);

  CHECK(a.key() == "n400-j3-symmetric-s1-or1.50-sd0.00");

  CHECK_THROWS_AS(
      make_scenario(400, 3, ControlShape::symmetric(),
                    PropScenario::s1(0, 0), 10, tiny_sampler(1), {"logit"}),
      UnknownKind);
  CHECK_THROWS_AS(
      make_scenario(400, 3, ControlShape::symmetric(),
                    PropScenario::s1(0, 0), 0, tiny_sampler(1), {"po"}),
      ConfigError);
  CHECK_THROWS_AS(make_scenario(400, 3, ControlShape::symmetric(),
                                PropScenario::s1(0, 0), 10, tiny_sampler(1),
                                std::vector<std::string>{}),
                  ConfigError);
}

TEST_CASE("run_replicate emits one record per model and cut-point") {
  const ScenarioConfig sc =
      tiny_scenario(11, GridPlan::default_models(), 4, std::log(1.5));
  const std::vector<MetricRecord> records = run_replicate(sc, 1);
  REQUIRE(records.size() == records_per_replicate(sc));
  REQUIRE(records.size() == 10);

  std::size_t idx = 0;
  for (const std::string& label : sc.models) {
    for (std::size_t k = 2; k <= 3; ++k) {
      const MetricRecord& rec = records[idx++];
      CHECK(rec.scenario_id == sc.scenario_id);
      CHECK(rec.replicate == 1);
      CHECK(rec.model == label);
      CHECK(rec.cutpoint == k);
      CHECK(rec.theta_true == std::log(1.5));  // sigma = 0: exact truth
      CHECK_FALSE(rec.failed);
      CHECK(rec.error.empty());
      CHECK(rec.ci_low < rec.median);
      CHECK(rec.median < rec.ci_high);
      CHECK(rec.diagnostics.ess_bulk > 0.0);
      CHECK(rec.rng_fingerprint.size() == 16);
      CHECK(rec.rng_fingerprint == records[0].rng_fingerprint);
    }
  }

  // The proportional-odds fit repeats its single estimate at every cut-point.
  const MetricRecord& po2 = records[2];
  const MetricRecord& po3 = records[3];
  REQUIRE(po2.model == "po");
  CHECK(po2.median == po3.median);
  CHECK(po2.ci_low == po3.ci_low);
  CHECK(po2.ci_high == po3.ci_high);

  // Replays are bit-identical.
  const std::vector<MetricRecord> again = run_replicate(sc, 1);
  REQUIRE(again.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    CHECK(to_ndjson_line(again[i]) == to_ndjson_line(records[i]));

  // A different replicate draws different data.
  const std::vector<MetricRecord> other = run_replicate(sc, 2);
  CHECK(other[2].median != po2.median);

  CHECK_THROWS_AS(run_replicate(sc, 4), BoundsViolation);
}

TEST_CASE("null scenario records carry exact zero truth") {
  const ScenarioConfig sc = tiny_scenario(5, {"po", "cppo-last"}, 2, 0.0);
  for (const MetricRecord& rec : run_replicate(sc, 0)) {
    CHECK(rec.theta_true == 0.0);
    CHECK_FALSE(rec.failed);
  }
}

TEST_CASE("generator failures become failed records, not lost replicates") {
  // A linear-trend effect that climbs 10 log-odds per cut-point cannot keep
  // the treatment cumulative logits decreasing, so generation must fail.
  PropScenario bad = PropScenario::s2();
  bad.zeta = 0.0;
  bad.gamma = 10.0;
  const ScenarioConfig sc =
      make_scenario(400, 3, ControlShape::symmetric(), bad, 4,
                    tiny_sampler(3), {"po", "ppo-u"});
  const std::vector<MetricRecord> records = run_replicate(sc, 0);
  REQUIRE(records.size() == 4);
  for (const MetricRecord& rec : records) {
    CHECK(rec.failed);
    CHECK_FALSE(rec.error.empty());
    CHECK(std::isnan(rec.theta_true));
    CHECK(std::isnan(rec.median));
  }
  CHECK_THROWS_AS(aggregate(records), InsufficientReplicates);
}

TEST_CASE("records round-trip through the newline-delimited format") {
  MetricRecord rec = synthetic_record("abc123", 17, "ppo-u", 3, 0.25, 0.27,
                                      0.10, 0.44);
  rec.diagnostics = {1.002, 812.5, 640.25, 1, 2, false};
  rec.refit_escalated = true;

  const std::string line = to_ndjson_line(rec);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(line.rfind("{\"scenario_id\":", 0) == 0);  // pinned leading field
  for (const char* field :
       {"\"replicate\":", "\"model\":", "\"cutpoint\":", "\"theta_true\":",
        "\"median\":", "\"ci_low\":", "\"ci_high\":", "\"diagnostics\":",
        "\"rhat\":", "\"ess_bulk\":", "\"ess_tail\":", "\"n_divergent\":",
        "\"max_treedepth_hits\":", "\"converged\":", "\"refit_escalated\":",
        "\"rng_fingerprint\":", "\"failed\":", "\"error\":"})
    CHECK(line.find(field) != std::string::npos);

  const MetricRecord back = record_from_line(line);
  CHECK(back.scenario_id == rec.scenario_id);
  CHECK(back.replicate == rec.replicate);
  CHECK(back.model == rec.model);
  CHECK(back.cutpoint == rec.cutpoint);
  CHECK(back.theta_true == rec.theta_true);
  CHECK(back.median == rec.median);
  CHECK(back.ci_low == rec.ci_low);
  CHECK(back.ci_high == rec.ci_high);
  CHECK(back.diagnostics.rhat == rec.diagnostics.rhat);
  CHECK(back.diagnostics.ess_bulk == rec.diagnostics.ess_bulk);
  CHECK(back.diagnostics.ess_tail == rec.diagnostics.ess_tail);
  CHECK(back.diagnostics.n_divergent == rec.diagnostics.n_divergent);
  CHECK(back.diagnostics.max_treedepth_hits ==
        rec.diagnostics.max_treedepth_hits);
  CHECK(back.diagnostics.converged == rec.diagnostics.converged);
  CHECK(back.refit_escalated == rec.refit_escalated);
  CHECK(back.rng_fingerprint == rec.rng_fingerprint);
  CHECK_FALSE(back.failed);

  // Failed records keep their slot; NaN estimates travel as nulls.
  MetricRecord failed = synthetic_record("abc123", 18, "po", 2,
                                         std::nan(""), std::nan(""),
                                         std::nan(""), std::nan(""));
  failed.failed = true;
  failed.error = "rejection cap";
  const MetricRecord failed_back = record_from_line(to_ndjson_line(failed));
  CHECK(failed_back.failed);
  CHECK(failed_back.error == "rejection cap");
  CHECK(std::isnan(failed_back.theta_true));
  CHECK(std::isnan(failed_back.median));

  CHECK_THROWS_AS(record_from_line("not json at all"), ParseError);
  CHECK_THROWS_AS(record_from_line("{\"scenario_id\":\"x\"}"), ParseError);
}

TEST_CASE("aggregate matches a hand-computed table") {
  const double truth = 0.4;
  const double deltas[10] = {0.1,  -0.1,  0.2,  -0.2, 0.0,
                             0.05, -0.05, 0.15, -0.15, 0.0};
  // CrIs are wide (+-0.3) except replicates 2, 3, and 7, which get slivers
  // that miss the truth: coverage 7/10.
  std::vector<MetricRecord> records;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const double med = truth + deltas[r];
    const double half = (r == 2 || r == 3 || r == 7) ? 0.01 : 0.3;
    records.push_back(synthetic_record("cellA", r, "po", 2, truth, med,
                                       med - half, med + half));
  }

  const std::vector<AggregateRow> rows = aggregate(records);
  REQUIRE(rows.size() == 1);
  const AggregateRow& row = rows[0];
  CHECK(row.scenario_id == "cellA");
  CHECK(row.model == "po");
  CHECK(row.cutpoint == 2);
  CHECK(row.n_effective_reps == 10);
  // The deltas cancel in pairs, up to the rounding of (truth + d) - truth.
  CHECK(std::fabs(row.bias) < 1e-15);
  CHECK(row.coverage == 0.7);
  double mse = 0.0, rb = 0.0;
  for (double d : deltas) {
    mse += d * d;
    rb += std::exp(d);
  }
  CHECK(row.mse == doctest::Approx(mse / 10.0).epsilon(1e-12));
  CHECK(row.relbias_pct ==
        doctest::Approx(100.0 * (rb / 10.0 - 1.0)).epsilon(1e-12));

  // MCSEs present (n >= 10) and coherent: the closed-form coverage MCSE
  // cross-check ran without throwing, and bias MCSE should approximate
  // sd(deltas)/sqrt(10).
  double sd = 0.0;
  for (double d : deltas) sd += d * d;  // mean is zero
  sd = std::sqrt(sd / 9.0);
  CHECK(row.bias_mcse == doctest::Approx(sd / std::sqrt(10.0)).epsilon(0.25));
  CHECK(row.bias_mcse_se > 0.0);

  // Permutation invariance: reversed input gives bit-identical rows.
  std::vector<MetricRecord> reversed(records.rbegin(), records.rend());
  const std::vector<AggregateRow> rows2 = aggregate(reversed);
  REQUIRE(rows2.size() == 1);
  CHECK(rows2[0].bias == row.bias);
  CHECK(rows2[0].bias_mcse == row.bias_mcse);
  CHECK(rows2[0].relbias_mcse == row.relbias_mcse);
  CHECK(rows2[0].coverage_mcse == row.coverage_mcse);
  CHECK(rows2[0].mse_mcse == row.mse_mcse);

  // Duplicate (replicate, model, cutpoint) is corrupted input.
  std::vector<MetricRecord> dup = records;
  dup.push_back(records[4]);
  CHECK_THROWS_AS(aggregate(dup), SelfCheckFailure);
}

TEST_CASE("two-replicate cells aggregate exactly and skip MCSEs") {
  std::vector<MetricRecord> records;
  records.push_back(
      synthetic_record("cellB", 0, "po", 2, 0.0, 0.25, -0.1, 0.6));
  records.push_back(
      synthetic_record("cellB", 1, "po", 2, 0.0, -0.25, -0.6, 0.1));
  const std::vector<AggregateRow> rows = aggregate(records);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].bias == 0.0);
  CHECK(rows[0].mse == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(rows[0].coverage == 1.0);
  CHECK(rows[0].n_effective_reps == 2);
  CHECK(std::isnan(rows[0].bias_mcse));
  CHECK(std::isnan(rows[0].mse_mcse));

  records.pop_back();
  CHECK_THROWS_AS(aggregate(records), InsufficientReplicates);
}

TEST_CASE("relative bias definitions and exclusions behave as labeled") {
  // Truth varies across replicates so the two definitions disagree.
  std::vector<MetricRecord> records;
  const double theta[4] = {0.0, 0.2, 0.4, 0.6};
  const double med[4] = {0.1, 0.1, 0.5, 0.5};
  for (std::uint64_t r = 0; r < 4; ++r)
    records.push_back(synthetic_record("cellC", r, "po", 2, theta[r], med[r],
                                       med[r] - 1.0, med[r] + 1.0));

  double mean_ratio = 0.0, mean_or_hat = 0.0, mean_or_true = 0.0;
  for (int r = 0; r < 4; ++r) {
    mean_ratio += std::exp(med[r] - theta[r]);
    mean_or_hat += std::exp(med[r]);
    mean_or_true += std::exp(theta[r]);
  }
  const double expect_mean_ratio = 100.0 * (mean_ratio / 4.0 - 1.0);
  const double expect_ratio_of_means =
      100.0 * (mean_or_hat / mean_or_true - 1.0);
  REQUIRE(std::fabs(expect_mean_ratio - expect_ratio_of_means) > 0.1);

  std::ostringstream audit;
  AggregateOptions opts;
  opts.audit = &audit;
  const std::vector<AggregateRow> primary = aggregate(records, opts);
  CHECK(primary[0].relbias_pct ==
        doctest::Approx(expect_mean_ratio).epsilon(1e-12));

  AggregateOptions alt;
  alt.relbias = RelBias::RatioOfMeans;
  const std::vector<AggregateRow> secondary = aggregate(records, alt);
  CHECK(secondary[0].relbias_pct ==
        doctest::Approx(expect_ratio_of_means).epsilon(1e-12));

  const std::string log = audit.str();
  CHECK(log.find("relbias_mean_ratio=") != std::string::npos);
  CHECK(log.find("relbias_ratio_of_means=") != std::string::npos);

  // Divergent-record exclusion decrements the effective count.
  records[1].diagnostics.n_divergent = 3;
  records[3].failed = true;
  records[3].error = "init";
  AggregateOptions excl;
  excl.exclude_divergent = true;
  const std::vector<AggregateRow> rows = aggregate(records, excl);
  CHECK(rows[0].n_effective_reps == 2);
  const std::vector<AggregateRow> keep = aggregate(records);
  CHECK(keep[0].n_effective_reps == 3);  // only the failed one drops
}

TEST_CASE("bootstrap MCSE matches closed forms") {
  // Coverage at p = 0.95 over n = 1000 replicates.
  std::vector<MetricRecord> cover_records;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const double half = r < 950 ? 0.5 : 0.001;
    cover_records.push_back(
        synthetic_record("mc", r, "po", 2, 0.3, 0.3 + 0.1, 0.4 - half,
                         0.4 + half));
  }
  const McseResult cov = metric_mcse(cover_records, Metric::Coverage);
  CHECK(cov.estimate == doctest::Approx(0.95));
  const double closed = std::sqrt(0.95 * 0.05 / 1000.0);
  CHECK(cov.mcse == doctest::Approx(closed).epsilon(0.15));
  CHECK(cov.upper_bound == doctest::Approx(cov.mcse + 2.0 * cov.mcse_se));
  // The jackknife-after-bootstrap SE reuses the B resamples, so at
  // n = B = 1000 its own resampling noise is of the same order as the
  // MCSE itself.  It must be a usable (finite, positive) inflation term,
  // and the resulting guard band must still sit far below the 0.05
  // precision target the study plans around.
  CHECK(std::isfinite(cov.mcse_se));
  CHECK(cov.mcse_se > 0.0);
  CHECK(cov.upper_bound < 0.05);

  // Bias over i.i.d. normal medians: MCSE ~ s / sqrt(n).
  RngStream rng(0xB1A5);
  const double s = 0.2;
  std::vector<MetricRecord> bias_records;
  for (std::uint64_t r = 0; r < 400; ++r)
    bias_records.push_back(synthetic_record(
        "mc", r, "po", 2, 0.0, rng.normal(0.0, s), -1.0, 1.0));
  const McseResult bias = metric_mcse(bias_records, Metric::Bias);
  CHECK(bias.mcse == doctest::Approx(s / std::sqrt(400.0)).epsilon(0.15));

  // Constant metric: exactly zero MCSE and zero upper bound.
  std::vector<MetricRecord> flat;
  for (std::uint64_t r = 0; r < 20; ++r)
    flat.push_back(synthetic_record("mc", r, "po", 2, 0.2, 0.45, 0.0, 0.9));
  const McseResult flat_bias = metric_mcse(flat, Metric::Bias);
  CHECK(flat_bias.mcse == 0.0);
  CHECK(flat_bias.mcse_se == 0.0);
  CHECK(flat_bias.upper_bound == 0.0);
  const McseResult flat_mse = metric_mcse(flat, Metric::Mse);
  CHECK(flat_mse.mcse == 0.0);

  CHECK_THROWS_AS(
      metric_mcse(std::vector<MetricRecord>(flat.begin(), flat.begin() + 9),
                  Metric::Bias),
      InsufficientReplicates);
  std::vector<MetricRecord> mixed = flat;
  mixed[5].cutpoint = 3;
  CHECK_THROWS_AS(metric_mcse(mixed, Metric::Bias), ShapeMismatch);
}

TEST_CASE("precision gate logic drives the replicate count") {
  AggregateRow quiet;
  quiet.bias_mcse = quiet.relbias_mcse = quiet.coverage_mcse =
      quiet.mse_mcse = 0.0;
  quiet.bias_mcse_se = quiet.relbias_mcse_se = quiet.coverage_mcse_se =
      quiet.mse_mcse_se = 0.0;
  CHECK(all_upper_bounds_below({quiet}, 1e-6));

  AggregateRow loud = quiet;
  loud.mse_mcse = 0.04;
  loud.mse_mcse_se = 0.01;  // bound 0.06
  CHECK(all_upper_bounds_below({loud}, 0.07));
  CHECK_FALSE(all_upper_bounds_below({loud}, 0.05));
  CHECK(all_upper_bounds_below({loud},
                               std::numeric_limits<double>::infinity()));

  AggregateRow tiny = quiet;
  tiny.bias_mcse = std::nan("");
  CHECK_FALSE(all_upper_bounds_below(
      {tiny}, std::numeric_limits<double>::infinity()));

  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 150;
  cfg.post_warmup_per_chain = 150;
  cfg.seed = 4;
  const ScenarioConfig sc =
      make_scenario(150, 3, ControlShape::symmetric(),
                    PropScenario::s1(0.0, 0.0), 24, cfg, {"po"});
  AdaptOptions inf_opts;
  inf_opts.batch = 12;
  inf_opts.threshold = std::numeric_limits<double>::infinity();
  CHECK(adapt_nsim(sc, inf_opts) == 12);

  AdaptOptions strict;
  strict.batch = 12;
  strict.threshold = 1e-9;
  CHECK(adapt_nsim(sc, strict) == 24);  // cap reached

  AdaptOptions bad;
  bad.batch = 0;
  CHECK_THROWS_AS(adapt_nsim(sc, bad), ConfigError);
}

TEST_CASE("record files are ordered, parallel-safe, and resumable") {
  const ScenarioConfig sc = [] {
    SamplerConfig cfg;
    cfg.chains = 2;
    cfg.warmup = 150;
    cfg.post_warmup_per_chain = 200;
    cfg.seed = 99;
    return make_scenario(300, 3, ControlShape::symmetric(),
                         PropScenario::s1(std::log(1.2), 0.0), 6, cfg,
                         {"po", "ppo-u"});
  }();

  const fs::path dir1 = fresh_dir("seq");
  RunOptions seq;
  seq.out_dir = dir1.string();
  seq.jobs = 1;
  const ScenarioRunResult r1 = run_scenario(sc, seq);
  CHECK(r1.resumed_replicates == 0);
  CHECK(r1.executed_replicates == 6);
  CHECK(r1.record_path.find(sc.scenario_id) != std::string::npos);
  const std::string bytes1 = slurp(r1.record_path);

  const std::vector<MetricRecord> records = load_records(r1.record_path);
  REQUIRE(records.size() == 6 * 4);
  for (std::size_t i = 0; i < records.size(); ++i)
    CHECK(records[i].replicate == i / 4);

  // Three workers must produce byte-identical output.
  const fs::path dir2 = fresh_dir("par");
  RunOptions par;
  par.out_dir = dir2.string();
  par.jobs = 3;
  const ScenarioRunResult r2 = run_scenario(sc, par);
  CHECK(r2.executed_replicates == 6);
  CHECK(slurp(r2.record_path) == bytes1);

  // Chopping the file inside a replicate block (plus a torn final line)
  // resumes from the last complete replicate and reproduces the bytes.
  std::vector<std::size_t> line_ends;
  for (std::size_t pos = bytes1.find('\n'); pos != std::string::npos;
       pos = bytes1.find('\n', pos + 1))
    line_ends.push_back(pos + 1);
  REQUIRE(line_ends.size() == 24);
  const std::string torn =
      bytes1.substr(0, line_ends[13]) +
      bytes1.substr(line_ends[13], 25);  // rep 3: 2 lines + a fragment
  {
    std::ofstream out(r1.record_path, std::ios::binary | std::ios::trunc);
    out << torn;
  }
  const ScenarioRunResult r3 = run_scenario(sc, seq);
  CHECK(r3.resumed_replicates == 3);
  CHECK(r3.executed_replicates == 3);
  CHECK(slurp(r1.record_path) == bytes1);

  // A finished file resumes to a no-op, and trailing garbage is dropped.
  {
    std::ofstream out(r1.record_path,
                      std::ios::binary | std::ios::app);
    out << "{\"junk\": true}\n";
  }
  const ScenarioRunResult r4 = run_scenario(sc, seq);
  CHECK(r4.resumed_replicates == 6);
  CHECK(r4.executed_replicates == 0);
  CHECK(slurp(r1.record_path) == bytes1);

  // resume = false redoes everything, identically.
  RunOptions fresh = seq;
  fresh.resume = false;
  const ScenarioRunResult r5 = run_scenario(sc, fresh);
  CHECK(r5.resumed_replicates == 0);
  CHECK(r5.executed_replicates == 6);
  CHECK(slurp(r1.record_path) == bytes1);

  // The audit re-derives truth and stream fingerprints from the seeds.
  CHECK(audit_theta_truth(sc, records, 1) == records.size());
  CHECK(audit_theta_truth(sc, records, 3) == 8);
  std::vector<MetricRecord> tampered = records;
  tampered[5].theta_true += 1e-9;
  CHECK_THROWS_AS(audit_theta_truth(sc, tampered, 1), SelfCheckFailure);
  std::vector<MetricRecord> wrong_stream = records;
  wrong_stream[0].rng_fingerprint = "0000000000000000";
  CHECK_THROWS_AS(audit_theta_truth(sc, wrong_stream, 1), SelfCheckFailure);

  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("aggregate CSV carries the pinned header and formatting") {
  std::vector<MetricRecord> records;
  for (std::uint64_t r = 0; r < 2; ++r)
    records.push_back(synthetic_record("feed1234beef5678", r, "po", 2, 0.0,
                                       r == 0 ? 0.25 : -0.25, -1.0, 1.0));
  const std::vector<AggregateRow> rows = aggregate(records);
  const fs::path dir = fresh_dir("csv");
  const std::string path = (dir / "aggregate.csv").string();
  write_aggregate_csv(rows, path);
  const std::string text = slurp(path);
  CHECK(text.rfind("scenario_id,model,cutpoint,bias,bias_mcse,relbias_pct,"
                   "relbias_mcse,coverage,coverage_mcse,mse,mse_mcse,"
                   "n_effective_reps\n",
                   0) == 0);
  CHECK(text.find("feed1234beef5678,po,2,0,nan,") != std::string::npos);
  CHECK(text.find(",1,nan,0.0625,nan,2\n") != std::string::npos);
  CHECK_FALSE(fs::exists(path + ".tmp"));
  fs::remove_all(dir);
}

TEST_CASE("grid driver writes records, aggregate, and manifest") {
  GridPlan plan;
  plan.n_obs = {200};
  plan.j = {3};
  plan.shapes = {ControlShape::symmetric()};
  plan.props = {PropScenario::s1(std::log(1.2), 0.0)};
  plan.n_sim = 10;
  plan.models = {"po"};
  plan.sampler = SamplerConfig{};
  plan.sampler.chains = 2;
  plan.sampler.warmup = 150;
  plan.sampler.post_warmup_per_chain = 150;
  plan.sampler.seed = 12;

  const fs::path dir = fresh_dir("grid");
  RunOptions opts;
  opts.out_dir = dir.string();
  opts.jobs = 2;
  const GridRunResult run = run_grid(plan, opts);
  REQUIRE(run.scenarios.size() == 1);
  CHECK(run.scenarios[0].executed_replicates == 10);

  const std::string csv = slurp(run.aggregate_path);
  // One scenario, one model, two cut-points.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  const nlohmann::json manifest =
      nlohmann::json::parse(slurp(run.manifest_path));
  CHECK(manifest.at("kind") == "simulation-manifest");
  CHECK(manifest.at("n_sim") == 10);
  CHECK(manifest.at("scenarios").size() == 1);
  CHECK(manifest.at("sampler").at("chains") == 2);
  CHECK(manifest.at("version").is_string());
  CHECK(manifest.at("started_at").is_string());

  // Rerunning resumes every replicate and leaves identical outputs.
  const std::string records_before = slurp(run.scenarios[0].record_path);
  const std::string csv_before = slurp(run.aggregate_path);
  const GridRunResult again = run_grid(plan, opts);
  CHECK(again.scenarios[0].resumed_replicates == 10);
  CHECK(again.scenarios[0].executed_replicates == 0);
  CHECK(slurp(again.scenarios[0].record_path) == records_before);
  CHECK(slurp(again.aggregate_path) == csv_before);

  fs::remove_all(dir);
}
