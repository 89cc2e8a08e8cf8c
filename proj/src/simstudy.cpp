#include "ordsim/simstudy.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>
#include <utility>

#include "json.hpp"
#include "ordsim/diagnostics.hpp"
#include "ordsim/errors.hpp"
#include "ordsim/fit.hpp"
#include "ordsim/model.hpp"
#include "ordsim/rng.hpp"
#include "ordsim/version.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace ordsim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt6(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string hex16(std::uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(x));
  return buf;
}

std::string prop_canonical(const PropScenario& p) {
  switch (p.kind) {
    case PropScenario::Kind::S1:
      return "s1:" + fmt17(p.mean_log_or) + ":" + fmt17(p.sigma);
    case PropScenario::Kind::S2:
      return "s2:" + fmt17(p.zeta) + ":" + fmt17(p.gamma);
    case PropScenario::Kind::S3:
      return "s3:" + fmt17(p.top_log_or);
  }
  return "";
}

// Canonical text form of every scenario field; the id is its hash, so any
// change to any knob yields a fresh id (and a fresh record file).
std::string scenario_canonical(const ScenarioConfig& sc) {
  std::string s = "scenario-v1";
  s += "|n_obs=" + std::to_string(sc.n_obs);
  s += "|j=" + std::to_string(sc.j);
  s += "|shape=" + sc.shape.name + ":" + fmt17(sc.shape.a) + ":" +
       fmt17(sc.shape.b);
  s += "|prop=" + prop_canonical(sc.prop);
  s += "|n_sim=" + std::to_string(sc.n_sim);
  s += "|sampler=" + std::to_string(sc.sampler.chains) + ":" +
       std::to_string(sc.sampler.warmup) + ":" +
       std::to_string(sc.sampler.post_warmup_per_chain) + ":" +
       fmt17(sc.sampler.target_accept) + ":" +
       std::to_string(sc.sampler.max_treedepth) + ":" +
       fmt17(sc.sampler.divergence_energy_threshold) + ":" +
       std::to_string(sc.sampler.seed);
  s += "|models=";
  for (std::size_t i = 0; i < sc.models.size(); ++i) {
    if (i) s += ",";
    s += sc.models[i];
  }
  return s;
}

// Root key of one replicate's random streams; everything the replicate
// draws (data and chains) descends from it.
std::uint64_t replicate_key(const ScenarioConfig& sc, std::uint64_t rep) {
  return mix_key(mix_key(sc.sampler.seed, fnv1a64(sc.scenario_id)), rep);
}

MetricRecord base_record(const ScenarioConfig& sc, std::uint64_t rep,
                         const std::string& model, std::size_t k,
                         std::uint64_t rep_key) {
  MetricRecord rec;
  rec.scenario_id = sc.scenario_id;
  rec.replicate = rep;
  rec.model = model;
  rec.cutpoint = k;
  rec.rng_fingerprint = hex16(rep_key);
  return rec;
}

MetricRecord failed_record(const ScenarioConfig& sc, std::uint64_t rep,
                           const std::string& model, std::size_t k,
                           std::uint64_t rep_key, double theta_true,
                           const std::string& why) {
  MetricRecord rec = base_record(sc, rep, model, k, rep_key);
  rec.theta_true = theta_true;
  rec.median = kNaN;
  rec.ci_low = kNaN;
  rec.ci_high = kNaN;
  rec.failed = true;
  rec.error = why;
  return rec;
}

double json_num_or_nan(const njson& v) {
  if (v.is_null()) return kNaN;
  return v.get<double>();
}

// ---------------------------------------------------------------------------
// Bootstrap MCSE machinery shared by aggregate() and metric_mcse().

// Per-replicate ingredients of one cell, sorted by replicate id so the
// bootstrap stream consumption never depends on record order.
struct CellData {
  std::vector<std::uint64_t> reps;
  std::vector<double> d;      // median - theta_true
  std::vector<double> cover;  // CrI contains truth, 0/1
  std::vector<double> ohat;   // exp(median)
  std::vector<double> otrue;  // exp(theta_true)
};

struct McseParts {
  double mcse = 0.0;
  double se = 0.0;  // jackknife-after-bootstrap SE of the MCSE
};

// Index order matches the Metric enum, with both relative-bias flavours.
struct CellBoot {
  McseParts bias, rb_mean_ratio, rb_ratio_of_means, coverage, mse;
};

double sd_with_bessel(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

CellBoot bootstrap_cell(const CellData& cell, unsigned B, RngStream& rng) {
  const std::size_t n = cell.d.size();
  std::vector<double> ed(n), d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    ed[i] = std::exp(cell.d[i]);
    d2[i] = cell.d[i] * cell.d[i];
  }

  constexpr int kMetrics = 5;
  std::vector<std::array<double, kMetrics>> stats(B);
  std::vector<std::uint8_t> contains(std::size_t(B) * n);
  std::vector<std::uint32_t> counts(n);

  for (unsigned b = 0; b < B; ++b) {
    std::fill(counts.begin(), counts.end(), 0u);
    for (std::size_t t = 0; t < n; ++t)
      ++counts[static_cast<std::size_t>(rng.uniform() *
                                        static_cast<double>(n))];
    double sd = 0, sed = 0, sc = 0, sq = 0, soh = 0, sot = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = counts[i];
      contains[std::size_t(b) * n + i] = counts[i] > 0;
      if (counts[i] == 0) continue;
      sd += c * cell.d[i];
      sed += c * ed[i];
      sc += c * cell.cover[i];
      sq += c * d2[i];
      soh += c * cell.ohat[i];
      sot += c * cell.otrue[i];
    }
    const double dn = static_cast<double>(n);
    stats[b] = {sd / dn, 100.0 * (sed / dn - 1.0), 100.0 * (soh / sot - 1.0),
                sc / dn, sq / dn};
  }

  std::array<double, kMetrics> mcse{};
  {
    std::vector<double> col(B);
    for (int m = 0; m < kMetrics; ++m) {
      for (unsigned b = 0; b < B; ++b) col[b] = stats[b][m];
      mcse[m] = sd_with_bessel(col);
    }
  }

  // Jackknife-after-bootstrap: the resamples that happen to exclude
  // replicate i form a bootstrap of the leave-i-out sample, so the spread of
  // those per-i MCSEs estimates the MCSE's own sampling error.
  std::array<std::vector<double>, kMetrics> leave_out;
  std::vector<unsigned> subset;
  subset.reserve(B);
  for (std::size_t i = 0; i < n; ++i) {
    subset.clear();
    for (unsigned b = 0; b < B; ++b)
      if (!contains[std::size_t(b) * n + i]) subset.push_back(b);
    if (subset.size() < 2) continue;
    for (int m = 0; m < kMetrics; ++m) {
      double mean = 0.0;
      for (unsigned b : subset) mean += stats[b][m];
      mean /= static_cast<double>(subset.size());
      double ss = 0.0;
      for (unsigned b : subset) {
        const double dv = stats[b][m] - mean;
        ss += dv * dv;
      }
      leave_out[m].push_back(
          std::sqrt(ss / static_cast<double>(subset.size() - 1)));
    }
  }

  std::array<double, kMetrics> se{};
  for (int m = 0; m < kMetrics; ++m) {
    const std::size_t cnt = leave_out[m].size();
    if (cnt < 2) {
      se[m] = 0.0;
      continue;
    }
    double mean = 0.0;
    for (double v : leave_out[m]) mean += v;
    mean /= static_cast<double>(cnt);
    double ss = 0.0;
    for (double v : leave_out[m]) ss += (v - mean) * (v - mean);
    se[m] = std::sqrt(ss * static_cast<double>(cnt - 1) /
                      static_cast<double>(cnt));
  }

  CellBoot out;
  out.bias = {mcse[0], se[0]};
  out.rb_mean_ratio = {mcse[1], se[1]};
  out.rb_ratio_of_means = {mcse[2], se[2]};
  out.coverage = {mcse[3], se[3]};
  out.mse = {mcse[4], se[4]};
  return out;
}

RngStream bootstrap_stream(const std::string& scenario_id,
                           const std::string& model, std::size_t cutpoint) {
  return RngStream(mix_key(
      mix_key(mix_key(fnv1a64("bootstrap-mcse"), fnv1a64(scenario_id)),
              fnv1a64(model)),
      cutpoint));
}

struct CellKey {
  std::string scenario, model;
  std::size_t cutpoint;
  bool operator<(const CellKey& o) const {
    return std::tie(scenario, model, cutpoint) <
           std::tie(o.scenario, o.model, o.cutpoint);
  }
};

struct CellAccum {
  std::vector<std::tuple<std::uint64_t, double, double, double, double>> rows;
  std::uint64_t n_total = 0;  // including failed/excluded records
};

CellData finalize_cell(const CellKey& key, CellAccum& acc) {
  std::sort(acc.rows.begin(), acc.rows.end());
  CellData cell;
  for (const auto& r : acc.rows) {
    if (!cell.reps.empty() && cell.reps.back() == std::get<0>(r))
      throw SelfCheckFailure("aggregate: duplicate record for scenario " +
                             key.scenario + " model " + key.model +
                             " cutpoint " + std::to_string(key.cutpoint) +
                             " replicate " + std::to_string(std::get<0>(r)));
    cell.reps.push_back(std::get<0>(r));
    cell.d.push_back(std::get<1>(r));
    cell.cover.push_back(std::get<2>(r));
    cell.ohat.push_back(std::get<3>(r));
    cell.otrue.push_back(std::get<4>(r));
  }
  return cell;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void check_coverage_mcse(const CellKey& key, const CellData& cell,
                         double boot_mcse) {
  const double p = mean_of(cell.cover);
  const double n = static_cast<double>(cell.d.size());
  const double closed = std::sqrt(p * (1.0 - p) / n);
  const bool ok = closed == 0.0 ? boot_mcse <= 1e-12
                                : std::fabs(boot_mcse - closed) <= 0.15 * closed;
  if (!ok)
    throw SelfCheckFailure(
        "aggregate: bootstrap coverage MCSE " + fmt6(boot_mcse) +
        " disagrees with closed form " + fmt6(closed) + " for scenario " +
        key.scenario + " model " + key.model + " cutpoint " +
        std::to_string(key.cutpoint));
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid construction.

std::vector<PropScenario> GridPlan::s1_only_props() {
  std::vector<PropScenario> props;
  for (double mean : {std::log(1.0), std::log(1.10), std::log(1.50)})
    for (double sigma : {0.0, 0.05, 0.10})
      props.push_back(PropScenario::s1(mean, sigma));
  return props;
}

std::vector<PropScenario> GridPlan::default_props() {
  std::vector<PropScenario> props = s1_only_props();
  props.push_back(PropScenario::s2());
  props.push_back(PropScenario::s3(std::log(1.10)));
  props.push_back(PropScenario::s3(std::log(1.50)));
  return props;
}

std::vector<std::string> GridPlan::default_models() { return all_model_labels(); }

std::string ScenarioConfig::key() const {
  return "n" + std::to_string(n_obs) + "-j" + std::to_string(j) + "-" +
         shape.name + "-" + prop.key();
}

ScenarioConfig make_scenario(std::uint64_t n_obs, std::size_t j,
                             const ControlShape& shape,
                             const PropScenario& prop, std::uint64_t n_sim,
                             const SamplerConfig& sampler,
                             const std::vector<std::string>& models) {
  if (n_sim == 0) throw ConfigError("make_scenario: n_sim must be >= 1");
  if (models.empty()) throw ConfigError("make_scenario: empty model list");
  sampler.validate();
  for (const std::string& label : models) model_by_label(label, j);

  ScenarioConfig sc;
  sc.n_obs = n_obs;
  sc.j = j;
  sc.shape = shape;
  sc.prop = prop;
  sc.n_sim = n_sim;
  sc.sampler = sampler;
  sc.models = models;
  sc.scenario_id = hex16(fnv1a64(scenario_canonical(sc)));
  return sc;
}

std::vector<ScenarioConfig> build_grid(const GridPlan& plan) {
  if (plan.n_obs.empty() || plan.j.empty() || plan.shapes.empty() ||
      plan.props.empty() || plan.models.empty())
    throw EmptyPlan("build_grid: every axis needs at least one value");
  std::vector<ScenarioConfig> grid;
  for (std::uint64_t n : plan.n_obs)
    for (std::size_t j : plan.j)
      for (const ControlShape& shape : plan.shapes)
        for (const PropScenario& prop : plan.props)
          grid.push_back(make_scenario(n, j, shape, prop, plan.n_sim,
                                       plan.sampler, plan.models));
  return grid;
}

// ---------------------------------------------------------------------------
// Replicate execution.

std::size_t records_per_replicate(const ScenarioConfig& sc) {
  return sc.models.size() * (sc.j - 1);
}

std::vector<MetricRecord> run_replicate(const ScenarioConfig& sc,
                                        std::uint64_t rep) {
  if (rep >= sc.n_sim)
    throw BoundsViolation("run_replicate: replicate " + std::to_string(rep) +
                          " outside n_sim " + std::to_string(sc.n_sim));
  // Resolve specs first so configuration mistakes throw instead of being
  // recorded as replicate failures.
  std::vector<ModelSpec> specs;
  specs.reserve(sc.models.size());
  for (const std::string& label : sc.models)
    specs.push_back(model_by_label(label, sc.j));

  const std::uint64_t rep_key = replicate_key(sc, rep);
  std::vector<MetricRecord> records;
  records.reserve(records_per_replicate(sc));

  TruePair tp;
  OrdinalCounts data;
  try {
    RngStream dgm_rng(mix_key(rep_key, fnv1a64("dgm")));
    const Simplex pi0 = discretize_beta(sc.shape, sc.j);
    tp = gen_true_pair(pi0, sc.prop, dgm_rng);
    data = sample_trial(tp, sc.n_obs, dgm_rng);
  } catch (const RejectionExhausted& e) {
    for (const std::string& label : sc.models)
      for (std::size_t k = 2; k <= sc.j; ++k)
        records.push_back(failed_record(sc, rep, label, k, rep_key, kNaN,
                                        e.what()));
    return records;
  } catch (const InvalidScenario& e) {
    for (const std::string& label : sc.models)
      for (std::size_t k = 2; k <= sc.j; ++k)
        records.push_back(failed_record(sc, rep, label, k, rep_key, kNaN,
                                        e.what()));
    return records;
  }

  for (std::size_t mi = 0; mi < sc.models.size(); ++mi) {
    const std::string& label = sc.models[mi];
    SamplerConfig cfg = sc.sampler;
    cfg.seed = mix_key(mix_key(rep_key, fnv1a64("fit")), fnv1a64(label));
    try {
      const ModelFit fit = run_model(specs[mi], data, cfg);
      for (std::size_t m = 0; m < fit.draws.n_cutpoints(); ++m) {
        MetricRecord rec = base_record(sc, rep, label,
                                       fit.draws.cutpoints[m], rep_key);
        rec.theta_true = tp.theta_true[m];
        const PosteriorSummary s = summarize(fit.draws.pooled(m));
        rec.median = s.median;
        rec.ci_low = s.ci_low;
        rec.ci_high = s.ci_high;
        const ParamDiagnostics& pd = fit.diagnostics.params[m];
        rec.diagnostics = {pd.rhat,
                           pd.ess_bulk,
                           pd.ess_tail,
                           fit.diagnostics.n_divergent,
                           fit.diagnostics.max_treedepth_hits,
                           fit.diagnostics.converged};
        rec.refit_escalated = fit.escalated;
        records.push_back(std::move(rec));
      }
    } catch (const InitFailure& e) {
      for (std::size_t k = 2; k <= sc.j; ++k)
        records.push_back(failed_record(sc, rep, label, k, rep_key,
                                        tp.theta_true[k - 2], e.what()));
    } catch (const NonFiniteGradient& e) {
      for (std::size_t k = 2; k <= sc.j; ++k)
        records.push_back(failed_record(sc, rep, label, k, rep_key,
                                        tp.theta_true[k - 2], e.what()));
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Record serialization.

std::string to_ndjson_line(const MetricRecord& rec) {
  ojson o;
  o["scenario_id"] = rec.scenario_id;
  o["replicate"] = rec.replicate;
  o["model"] = rec.model;
  o["cutpoint"] = rec.cutpoint;
  o["theta_true"] = rec.theta_true;
  o["median"] = rec.median;
  o["ci_low"] = rec.ci_low;
  o["ci_high"] = rec.ci_high;
  ojson d;
  d["rhat"] = rec.diagnostics.rhat;
  d["ess_bulk"] = rec.diagnostics.ess_bulk;
  d["ess_tail"] = rec.diagnostics.ess_tail;
  d["n_divergent"] = rec.diagnostics.n_divergent;
  d["max_treedepth_hits"] = rec.diagnostics.max_treedepth_hits;
  d["converged"] = rec.diagnostics.converged;
  o["diagnostics"] = std::move(d);
  o["refit_escalated"] = rec.refit_escalated;
  o["rng_fingerprint"] = rec.rng_fingerprint;
  o["failed"] = rec.failed;
  o["error"] = rec.error;
  return o.dump();
}

MetricRecord record_from_line(const std::string& line) {
  njson o;
  try {
    o = njson::parse(line);
  } catch (const njson::exception& e) {
    throw ParseError(std::string("record line is not valid JSON: ") +
                     e.what());
  }
  try {
    MetricRecord rec;
    rec.scenario_id = o.at("scenario_id").get<std::string>();
    rec.replicate = o.at("replicate").get<std::uint64_t>();
    rec.model = o.at("model").get<std::string>();
    rec.cutpoint = o.at("cutpoint").get<std::size_t>();
    rec.theta_true = json_num_or_nan(o.at("theta_true"));
    rec.median = json_num_or_nan(o.at("median"));
    rec.ci_low = json_num_or_nan(o.at("ci_low"));
    rec.ci_high = json_num_or_nan(o.at("ci_high"));
    const njson& d = o.at("diagnostics");
    rec.diagnostics.rhat = json_num_or_nan(d.at("rhat"));
    rec.diagnostics.ess_bulk = json_num_or_nan(d.at("ess_bulk"));
    rec.diagnostics.ess_tail = json_num_or_nan(d.at("ess_tail"));
    rec.diagnostics.n_divergent = d.at("n_divergent").get<int>();
    rec.diagnostics.max_treedepth_hits =
        d.at("max_treedepth_hits").get<int>();
    rec.diagnostics.converged = d.at("converged").get<bool>();
    rec.refit_escalated = o.at("refit_escalated").get<bool>();
    rec.rng_fingerprint = o.at("rng_fingerprint").get<std::string>();
    rec.failed = o.at("failed").get<bool>();
    rec.error = o.at("error").get<std::string>();
    return rec;
  } catch (const njson::exception& e) {
    throw ParseError(std::string("record line missing or mistyped field: ") +
                     e.what());
  }
}

std::vector<MetricRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open record file: " + path);
  std::vector<MetricRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_line(line));
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation.

std::vector<AggregateRow> aggregate(const std::vector<MetricRecord>& records,
                                    const AggregateOptions& opts) {
  std::map<CellKey, CellAccum> cells;
  for (const MetricRecord& rec : records) {
    CellAccum& acc = cells[{rec.scenario_id, rec.model, rec.cutpoint}];
    ++acc.n_total;
    if (rec.failed) continue;
    if (opts.exclude_divergent && rec.diagnostics.n_divergent > 0) continue;
    const double d = rec.median - rec.theta_true;
    const double cover =
        (rec.ci_low <= rec.theta_true && rec.theta_true <= rec.ci_high) ? 1.0
                                                                        : 0.0;
    acc.rows.emplace_back(rec.replicate, d, cover, std::exp(rec.median),
                          std::exp(rec.theta_true));
  }

  std::vector<AggregateRow> out;
  out.reserve(cells.size());
  for (auto& [key, acc] : cells) {
    const CellData cell = finalize_cell(key, acc);
    const std::size_t n = cell.d.size();
    if (n < 2)
      throw InsufficientReplicates(
          "aggregate: scenario " + key.scenario + " model " + key.model +
          " cutpoint " + std::to_string(key.cutpoint) + " has only " +
          std::to_string(n) + " usable replicates");

    AggregateRow row;
    row.scenario_id = key.scenario;
    row.model = key.model;
    row.cutpoint = key.cutpoint;
    row.n_effective_reps = n;
    row.bias = mean_of(cell.d);
    double ed_mean = 0.0, sq_mean = 0.0, oh_mean = 0.0, ot_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ed_mean += std::exp(cell.d[i]);
      sq_mean += cell.d[i] * cell.d[i];
      oh_mean += cell.ohat[i];
      ot_mean += cell.otrue[i];
    }
    ed_mean /= static_cast<double>(n);
    sq_mean /= static_cast<double>(n);
    const double rb_mean_ratio = 100.0 * (ed_mean - 1.0);
    const double rb_ratio_of_means = 100.0 * (oh_mean / ot_mean - 1.0);
    row.relbias_pct =
        opts.relbias == RelBias::MeanRatio ? rb_mean_ratio : rb_ratio_of_means;
    row.coverage = mean_of(cell.cover);
    row.mse = sq_mean;

    if (n >= 10) {
      RngStream rng = bootstrap_stream(key.scenario, key.model, key.cutpoint);
      const CellBoot boot = bootstrap_cell(cell, opts.bootstrap_b, rng);
      row.bias_mcse = boot.bias.mcse;
      row.bias_mcse_se = boot.bias.se;
      const McseParts& rb = opts.relbias == RelBias::MeanRatio
                                ? boot.rb_mean_ratio
                                : boot.rb_ratio_of_means;
      row.relbias_mcse = rb.mcse;
      row.relbias_mcse_se = rb.se;
      row.coverage_mcse = boot.coverage.mcse;
      row.coverage_mcse_se = boot.coverage.se;
      row.mse_mcse = boot.mse.mcse;
      row.mse_mcse_se = boot.mse.se;
      check_coverage_mcse(key, cell, boot.coverage.mcse);
    } else {
      row.bias_mcse = row.bias_mcse_se = kNaN;
      row.relbias_mcse = row.relbias_mcse_se = kNaN;
      row.coverage_mcse = row.coverage_mcse_se = kNaN;
      row.mse_mcse = row.mse_mcse_se = kNaN;
    }

    if (opts.audit) {
      (*opts.audit) << "cell scenario=" << key.scenario
                    << " model=" << key.model
                    << " cutpoint=" << key.cutpoint
                    << " n=" << n
                    << " relbias_mean_ratio=" << fmt6(rb_mean_ratio)
                    << " relbias_ratio_of_means=" << fmt6(rb_ratio_of_means)
                    << "\n";
    }
    out.push_back(std::move(row));
  }
  return out;
}

McseResult metric_mcse(const std::vector<MetricRecord>& cell_records,
                       Metric metric, unsigned bootstrap_b) {
  if (cell_records.empty())
    throw InsufficientReplicates("metric_mcse: no records");
  const CellKey key{cell_records.front().scenario_id,
                    cell_records.front().model,
                    cell_records.front().cutpoint};
  CellAccum acc;
  for (const MetricRecord& rec : cell_records) {
    if (rec.scenario_id != key.scenario || rec.model != key.model ||
        rec.cutpoint != key.cutpoint)
      throw ShapeMismatch("metric_mcse: records span more than one cell");
    ++acc.n_total;
    if (rec.failed) continue;
    const double d = rec.median - rec.theta_true;
    const double cover =
        (rec.ci_low <= rec.theta_true && rec.theta_true <= rec.ci_high) ? 1.0
                                                                        : 0.0;
    acc.rows.emplace_back(rec.replicate, d, cover, std::exp(rec.median),
                          std::exp(rec.theta_true));
  }
  const CellData cell = finalize_cell(key, acc);
  const std::size_t n = cell.d.size();
  if (n < 10)
    throw InsufficientReplicates(
        "metric_mcse: needs >= 10 successful replicates, got " +
        std::to_string(n));

  RngStream rng = bootstrap_stream(key.scenario, key.model, key.cutpoint);
  const CellBoot boot = bootstrap_cell(cell, bootstrap_b, rng);

  McseResult res;
  switch (metric) {
    case Metric::Bias:
      res.estimate = mean_of(cell.d);
      res.mcse = boot.bias.mcse;
      res.mcse_se = boot.bias.se;
      break;
    case Metric::RelBiasPct: {
      double ed = 0.0;
      for (double v : cell.d) ed += std::exp(v);
      res.estimate = 100.0 * (ed / static_cast<double>(n) - 1.0);
      res.mcse = boot.rb_mean_ratio.mcse;
      res.mcse_se = boot.rb_mean_ratio.se;
      break;
    }
    case Metric::Coverage:
      res.estimate = mean_of(cell.cover);
      res.mcse = boot.coverage.mcse;
      res.mcse_se = boot.coverage.se;
      break;
    case Metric::Mse: {
      double sq = 0.0;
      for (double v : cell.d) sq += v * v;
      res.estimate = sq / static_cast<double>(n);
      res.mcse = boot.mse.mcse;
      res.mcse_se = boot.mse.se;
      break;
    }
  }
  res.upper_bound = res.mcse + 2.0 * res.mcse_se;
  return res;
}

bool all_upper_bounds_below(const std::vector<AggregateRow>& rows,
                            double threshold) {
  for (const AggregateRow& r : rows) {
    const double bounds[4] = {r.bias_mcse + 2.0 * r.bias_mcse_se,
                              r.relbias_mcse + 2.0 * r.relbias_mcse_se,
                              r.coverage_mcse + 2.0 * r.coverage_mcse_se,
                              r.mse_mcse + 2.0 * r.mse_mcse_se};
    for (double b : bounds)
      if (!(b < threshold)) return false;
  }
  return true;
}

std::uint64_t adapt_nsim(const ScenarioConfig& sc, const AdaptOptions& opts) {
  if (opts.batch == 0) throw ConfigError("adapt_nsim: batch must be >= 1");
  std::vector<MetricRecord> records;
  std::uint64_t done = 0;
  while (true) {
    const std::uint64_t target = std::min(done + opts.batch, sc.n_sim);
    for (std::uint64_t rep = done; rep < target; ++rep) {
      std::vector<MetricRecord> recs = run_replicate(sc, rep);
      records.insert(records.end(), std::make_move_iterator(recs.begin()),
                     std::make_move_iterator(recs.end()));
    }
    done = target;
    AggregateOptions agg;
    agg.bootstrap_b = opts.bootstrap_b;
    const std::vector<AggregateRow> rows = aggregate(records, agg);
    if (all_upper_bounds_below(rows, opts.threshold) || done >= sc.n_sim)
      return done;
  }
}

std::uint64_t audit_theta_truth(const ScenarioConfig& sc,
                                const std::vector<MetricRecord>& records,
                                std::uint64_t stride) {
  if (stride == 0) throw BoundsViolation("audit_theta_truth: stride >= 1");
  std::map<std::uint64_t, TruePair> truth_cache;
  std::uint64_t checked = 0;
  for (const MetricRecord& rec : records) {
    if (rec.scenario_id != sc.scenario_id)
      throw ShapeMismatch("audit_theta_truth: record from scenario " +
                          rec.scenario_id + " audited against " +
                          sc.scenario_id);
    if (rec.replicate % stride != 0) continue;
    const std::uint64_t rep_key = replicate_key(sc, rec.replicate);
    if (rec.rng_fingerprint != hex16(rep_key))
      throw SelfCheckFailure(
          "audit_theta_truth: stream fingerprint mismatch at replicate " +
          std::to_string(rec.replicate));
    if (rec.failed) continue;
    auto it = truth_cache.find(rec.replicate);
    if (it == truth_cache.end()) {
      RngStream dgm_rng(mix_key(rep_key, fnv1a64("dgm")));
      const Simplex pi0 = discretize_beta(sc.shape, sc.j);
      it = truth_cache
               .emplace(rec.replicate, gen_true_pair(pi0, sc.prop, dgm_rng))
               .first;
    }
    const double expected = it->second.theta_true.at(rec.cutpoint - 2);
    if (rec.theta_true != expected)
      throw SelfCheckFailure(
          "audit_theta_truth: theta_true " + fmt17(rec.theta_true) +
          " != re-derived " + fmt17(expected) + " at replicate " +
          std::to_string(rec.replicate) + " cutpoint " +
          std::to_string(rec.cutpoint));
    ++checked;
  }
  return checked;
}

// ---------------------------------------------------------------------------
// Persistence.

namespace {

std::string replicate_block(const ScenarioConfig& sc, std::uint64_t rep) {
  std::string block;
  for (const MetricRecord& rec : run_replicate(sc, rep)) {
    block += to_ndjson_line(rec);
    block += '\n';
  }
  return block;
}

// Appends blocks strictly in replicate order, buffering out-of-order
// completions, so the file bytes never depend on worker scheduling.
class OrderedBlockWriter {
 public:
  OrderedBlockWriter(const std::string& path, std::uint64_t first)
      : out_(path, std::ios::binary | std::ios::app), next_(first) {
    if (!out_)
      throw Error("cannot open record file for append: " + path);
  }

  void submit(std::uint64_t rep, std::string block) {
    std::lock_guard<std::mutex> lock(mu_);
    pending_.emplace(rep, std::move(block));
    while (!pending_.empty() && pending_.begin()->first == next_) {
      out_ << pending_.begin()->second;
      pending_.erase(pending_.begin());
      ++next_;
    }
    out_.flush();
    if (!out_) throw Error("record file write failed");
  }

 private:
  std::ofstream out_;
  std::mutex mu_;
  std::uint64_t next_;
  std::map<std::uint64_t, std::string> pending_;
};

// The (model, cutpoint) sequence every complete replicate block must carry.
std::vector<std::pair<std::string, std::size_t>> block_layout(
    const ScenarioConfig& sc) {
  std::vector<std::pair<std::string, std::size_t>> seq;
  for (const std::string& label : sc.models)
    for (std::size_t k = 2; k <= sc.j; ++k) seq.emplace_back(label, k);
  return seq;
}

// Longest prefix of complete, well-formed replicate blocks: returns the
// count of complete replicates and the byte offset just past them.
std::pair<std::uint64_t, std::uintmax_t> scan_record_prefix(
    const std::string& path, const ScenarioConfig& sc) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open record file for resume: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();

  const auto layout = block_layout(sc);
  std::uint64_t rep = 0;
  std::size_t pos_in_block = 0;
  std::uintmax_t good = 0;
  std::size_t cursor = 0;
  while (rep < sc.n_sim) {
    const std::size_t nl = buf.find('\n', cursor);
    if (nl == std::string::npos) break;  // missing/partial trailing line
    MetricRecord rec;
    try {
      rec = record_from_line(buf.substr(cursor, nl - cursor));
    } catch (const ParseError&) {
      break;
    }
    if (rec.scenario_id != sc.scenario_id || rec.replicate != rep ||
        rec.model != layout[pos_in_block].first ||
        rec.cutpoint != layout[pos_in_block].second ||
        rec.rng_fingerprint != hex16(replicate_key(sc, rep)))
      break;
    cursor = nl + 1;
    if (++pos_in_block == layout.size()) {
      good = cursor;
      pos_in_block = 0;
      ++rep;
    }
  }
  return {rep, good};
}

}  // namespace

std::string record_file_path(const std::string& out_dir,
                             const ScenarioConfig& sc) {
  return (fs::path(out_dir) / ("records-" + sc.scenario_id + ".ndjson"))
      .string();
}

ScenarioRunResult run_scenario(const ScenarioConfig& sc,
                               const RunOptions& opts) {
  if (opts.out_dir.empty())
    throw ConfigError("run_scenario: out_dir must be set");
  fs::create_directories(opts.out_dir);
  const std::string path = record_file_path(opts.out_dir, sc);

  ScenarioRunResult result;
  result.record_path = path;

  std::uint64_t start_rep = 0;
  if (fs::exists(path)) {
    if (opts.resume) {
      const auto [reps, bytes] = scan_record_prefix(path, sc);
      start_rep = reps;
      if (bytes != fs::file_size(path)) fs::resize_file(path, bytes);
    } else {
      fs::resize_file(path, 0);
    }
  }
  result.resumed_replicates = start_rep;
  if (start_rep >= sc.n_sim) return result;

  OrderedBlockWriter writer(path, start_rep);
  const std::uint64_t remaining = sc.n_sim - start_rep;
  const unsigned jobs = static_cast<unsigned>(
      std::min<std::uint64_t>(std::max(1u, opts.jobs), remaining));

  if (jobs <= 1) {
    for (std::uint64_t rep = start_rep; rep < sc.n_sim; ++rep)
      writer.submit(rep, replicate_block(sc, rep));
  } else {
    std::atomic<std::uint64_t> next{start_rep};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;
    std::mutex err_mu;
    auto work = [&]() {
      while (!stop.load(std::memory_order_relaxed)) {
        const std::uint64_t rep = next.fetch_add(1);
        if (rep >= sc.n_sim) break;
        try {
          writer.submit(rep, replicate_block(sc, rep));
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
          stop.store(true);
          break;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  result.executed_replicates = remaining;
  return result;
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows,
                         const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open aggregate file for write: " + tmp);
    out << "scenario_id,model,cutpoint,bias,bias_mcse,relbias_pct,"
           "relbias_mcse,coverage,coverage_mcse,mse,mse_mcse,"
           "n_effective_reps\n";
    for (const AggregateRow& r : rows) {
      out << r.scenario_id << ',' << r.model << ',' << r.cutpoint << ','
          << fmt6(r.bias) << ',' << fmt6(r.bias_mcse) << ','
          << fmt6(r.relbias_pct) << ',' << fmt6(r.relbias_mcse) << ','
          << fmt6(r.coverage) << ',' << fmt6(r.coverage_mcse) << ','
          << fmt6(r.mse) << ',' << fmt6(r.mse_mcse) << ','
          << r.n_effective_reps << '\n';
    }
    if (!out) throw Error("aggregate file write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const GridPlan& plan,
                    const std::vector<ScenarioConfig>& scenarios,
                    const std::string& started_at_iso,
                    const std::string& finished_at_iso,
                    const std::string& path) {
  ojson m;
  m["kind"] = "simulation-manifest";
  m["version"] = kLibraryVersion;
  m["started_at"] = started_at_iso;
  m["finished_at"] = finished_at_iso;
  m["master_seed"] = plan.sampler.seed;
  m["n_sim"] = plan.n_sim;
  ojson sampler;
  sampler["chains"] = plan.sampler.chains;
  sampler["warmup"] = plan.sampler.warmup;
  sampler["post_warmup_per_chain"] = plan.sampler.post_warmup_per_chain;
  sampler["target_accept"] = plan.sampler.target_accept;
  sampler["max_treedepth"] = plan.sampler.max_treedepth;
  sampler["divergence_energy_threshold"] =
      plan.sampler.divergence_energy_threshold;
  sampler["seed"] = plan.sampler.seed;
  m["sampler"] = std::move(sampler);
  m["models"] = plan.models;
  ojson axes;
  axes["n_obs"] = plan.n_obs;
  axes["j"] = plan.j;
  axes["shapes"] = ojson::array();
  for (const ControlShape& s : plan.shapes)
    axes["shapes"].push_back({{"name", s.name}, {"a", s.a}, {"b", s.b}});
  axes["props"] = ojson::array();
  for (const PropScenario& p : plan.props)
    axes["props"].push_back(p.key());
  m["axes"] = std::move(axes);
  m["scenarios"] = ojson::array();
  for (const ScenarioConfig& sc : scenarios)
    m["scenarios"].push_back(
        {{"scenario_id", sc.scenario_id}, {"key", sc.key()}});

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open manifest for write: " + tmp);
    out << m.dump(2) << '\n';
    if (!out) throw Error("manifest write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

GridRunResult run_grid(const GridPlan& plan, const RunOptions& opts,
                       const AggregateOptions& agg) {
  const std::string started = utc_timestamp();
  const std::vector<ScenarioConfig> scenarios = build_grid(plan);

  GridRunResult result;
  std::vector<MetricRecord> all_records;
  for (const ScenarioConfig& sc : scenarios) {
    result.scenarios.push_back(run_scenario(sc, opts));
    std::vector<MetricRecord> recs =
        load_records(result.scenarios.back().record_path);
    all_records.insert(all_records.end(),
                       std::make_move_iterator(recs.begin()),
                       std::make_move_iterator(recs.end()));
  }

  const std::vector<AggregateRow> rows = aggregate(all_records, agg);
  result.aggregate_path =
      (fs::path(opts.out_dir) / "aggregate.csv").string();
  write_aggregate_csv(rows, result.aggregate_path);

  result.manifest_path = (fs::path(opts.out_dir) / "manifest.json").string();
  write_manifest(plan, scenarios, started, utc_timestamp(),
                 result.manifest_path);
  return result;
}

}  // namespace ordsim
