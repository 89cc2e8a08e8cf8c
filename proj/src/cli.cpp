#include "ordsim/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "ordsim/config.hpp"
#include "ordsim/errors.hpp"
#include "ordsim/model.hpp"
#include "ordsim/report.hpp"
#include "ordsim/simstudy.hpp"
#include "ordsim/trialio.hpp"
#include "ordsim/validate.hpp"
#include "ordsim/version.hpp"

namespace ordsim {
namespace {

namespace fs = std::filesystem;

std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string now_iso() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Temp-then-rename so readers never observe a half-written report.
void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("cannot open for writing: " + tmp);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw ParseError("write failed: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw ParseError("cannot rename " + tmp + " to " + path + ": " +
                           ec.message());
}

// ORDSIM_SEED beats the config file and every flag, so a wrapper script can
// re-seed a pinned invocation without editing it.  Empty counts as unset.
std::optional<std::uint64_t> env_seed_override() {
  const char* v = std::getenv("ORDSIM_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  std::uint64_t seed = 0;
  const char* end = v + std::string_view(v).size();
  auto [ptr, ec] = std::from_chars(v, end, seed);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError(std::string("ORDSIM_SEED must be a base-10 unsigned "
                                  "integer, got \"") +
                      v + "\"");
  return seed;
}

unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

std::string first_line(const std::string& s) {
  const std::size_t nl = s.find('\n');
  return nl == std::string::npos ? s : s.substr(0, nl);
}

std::string list_or_none(const std::vector<std::size_t>& xs) {
  if (xs.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(xs[i]);
  }
  return out;
}

// --- simulate ---------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  bool resume = false;
  std::string scenario_filter;       // comma-separated key substrings
  std::uint64_t nsim_override = 0;   // 0 = keep the configured n_sim
  bool exclude_divergent = false;
  unsigned jobs = 0;                 // 0 = config value, then core count
};

std::vector<ScenarioConfig> filter_scenarios(
    const std::vector<ScenarioConfig>& all, const std::string& filter) {
  if (filter.empty()) return all;
  std::vector<std::string> needles;
  std::string cur;
  for (char c : filter + ",") {
    if (c == ',') {
      if (!cur.empty()) needles.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (needles.empty())
    throw ConfigError("--scenarios requires at least one key substring");
  std::vector<ScenarioConfig> kept;
  for (const ScenarioConfig& sc : all) {
    const std::string key = sc.key();
    const bool hit = std::any_of(
        needles.begin(), needles.end(),
        [&](const std::string& n) { return key.find(n) != std::string::npos; });
    if (hit) kept.push_back(sc);
  }
  if (kept.empty())
    throw ConfigError("--scenarios \"" + filter +
                      "\" matched none of the " + std::to_string(all.size()) +
                      " scenario keys");
  return kept;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig rc = load_run_config(a.config_path);
  if (a.nsim_override > 0) rc.plan.n_sim = a.nsim_override;
  if (a.exclude_divergent) rc.agg.exclude_divergent = true;
  if (a.jobs > 0) rc.jobs = a.jobs;
  if (const auto seed = env_seed_override()) rc.plan.sampler.seed = *seed;

  const std::vector<ScenarioConfig> scenarios =
      filter_scenarios(build_grid(rc.plan), a.scenario_filter);

  const std::string started = now_iso();
  RunOptions ro;
  ro.out_dir = rc.out_dir;
  ro.jobs = resolve_jobs(rc.jobs);
  ro.resume = a.resume;

  std::vector<ScenarioConfig> completed;
  std::size_t scenario_failures = 0;
  for (const ScenarioConfig& sc : scenarios) {
    try {
      const ScenarioRunResult r = run_scenario(sc, ro);
      out << "scenario " << sc.key() << ": resumed " << r.resumed_replicates
          << ", executed " << r.executed_replicates << " of " << sc.n_sim
          << " replicates\n";
      completed.push_back(sc);
    } catch (const Error& e) {
      err << "scenario " << sc.key() << " failed: " << e.what() << "\n";
      ++scenario_failures;
    }
  }
  if (completed.empty()) {
    err << "error: no scenario completed\n";
    return 1;
  }

  std::vector<MetricRecord> records;
  std::uint64_t failed_records = 0;
  for (const ScenarioConfig& sc : completed) {
    std::vector<MetricRecord> recs =
        load_records(record_file_path(rc.out_dir, sc));
    for (const MetricRecord& r : recs)
      if (r.failed) ++failed_records;
    records.insert(records.end(), std::make_move_iterator(recs.begin()),
                   std::make_move_iterator(recs.end()));
  }

  const std::string aggregate_path =
      (fs::path(rc.out_dir) / "aggregate.csv").string();
  try {
    write_aggregate_csv(aggregate(records, rc.agg), aggregate_path);
  } catch (const Error& e) {
    err << "aggregation failed: " << e.what() << "\n";
    return 2;
  }
  const std::string manifest_path =
      (fs::path(rc.out_dir) / "manifest.json").string();
  write_manifest(rc.plan, completed, started, now_iso(), manifest_path);

  out << "aggregate: " << aggregate_path << "\n";
  out << "manifest: " << manifest_path << "\n";
  if (scenario_failures > 0 || failed_records > 0) {
    err << "completed with " << scenario_failures << " failed scenario(s) and "
        << failed_records << " failed fit record(s)\n";
    return 2;
  }
  return 0;
}

// --- fit --------------------------------------------------------------

struct FitArgs {
  std::string data_path;
  std::string schema_path;
  std::string model = "all";
  std::string arms;  // "control:treatment" raw codes, empty = natural 0/1
  SamplerConfig sampler{};
  std::size_t sparse_threshold = 5;
  unsigned jobs = 0;
  std::string out_stem;  // empty = data path, extension -> "-analysis"
};

ArmFilter parse_arms(const std::string& s) {
  const auto fail = [&]() -> ArmFilter {
    throw ConfigError(
        "--arms expects two integer arm codes as control:treatment, got \"" +
        s + "\"");
  };
  const std::size_t colon = s.find(':');
  if (colon == std::string::npos) return fail();
  ArmFilter f;
  const char* b1 = s.data();
  const char* e1 = s.data() + colon;
  const char* b2 = s.data() + colon + 1;
  const char* e2 = s.data() + s.size();
  auto r1 = std::from_chars(b1, e1, f.control);
  auto r2 = std::from_chars(b2, e2, f.treatment);
  if (r1.ec != std::errc{} || r1.ptr != e1 || r2.ec != std::errc{} ||
      r2.ptr != e2)
    return fail();
  return f;
}

void print_fit_tables(const CaseAnalysisResult& r, std::size_t threshold,
                      std::ostream& out) {
  out << "endpoint: " << r.endpoint << "\n";
  out << "categories: " << r.counts.j() << "\n";
  out << "complete cases: " << r.n_complete << " (dropped " << r.n_dropped
      << ")\n";
  out << "sparse categories (arm count below " << threshold
      << "): " << list_or_none(r.sparse_categories) << "\n";
  out << "prior-dominated cut-points (empty dichotomized cell): "
      << list_or_none(r.prior_dominated) << "\n";
  for (const CaseModelFit& f : r.fits) {
    out << "\n== " << f.model << " ==\n";
    if (f.failed) {
      out << "FAILED: " << first_line(f.error) << "\n";
      continue;
    }
    char line[160];
    std::snprintf(line, sizeof line, "%9s %12s %12s %12s %10s %10s %10s\n",
                  "cutpoint", "median", "ci_low", "ci_high", "rhat",
                  "ess_bulk", "ess_tail");
    out << line;
    for (std::size_t i = 0; i < f.cutpoints.size(); ++i) {
      const ParamDiagnostics& pd = f.diagnostics.params[i];
      std::snprintf(line, sizeof line, "%9zu %12s %12s %12s %10s %10s %10s\n",
                    f.cutpoints[i], fmt6(f.summaries[i].median).c_str(),
                    fmt6(f.summaries[i].ci_low).c_str(),
                    fmt6(f.summaries[i].ci_high).c_str(),
                    fmt6(pd.rhat).c_str(), fmt6(pd.ess_bulk).c_str(),
                    fmt6(pd.ess_tail).c_str());
      out << line;
    }
    out << "divergent transitions: " << f.diagnostics.n_divergent
        << " | converged: " << (f.diagnostics.converged ? "yes" : "no")
        << " | escalated: " << (f.escalated ? "yes" : "no") << "\n";
  }
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  const TrialSchema schema = load_schema(a.schema_path);
  std::optional<ArmFilter> filter;
  if (!a.arms.empty()) filter = parse_arms(a.arms);
  const TrialDataset dataset = load_trial(a.data_path, schema, filter);

  SamplerConfig cfg = a.sampler;
  if (const auto seed = env_seed_override()) cfg.seed = *seed;

  CaseOptions copts;
  if (a.model != "all") {
    const std::vector<std::string>& known = all_model_labels();
    if (std::find(known.begin(), known.end(), a.model) == known.end()) {
      std::string names;
      for (const std::string& k : known) names += " " + k;
      throw UnknownKind("unknown model label \"" + a.model +
                        "\"; expected \"all\" or one of:" + names);
    }
    copts.models = {a.model};
  }
  copts.sparse_threshold = a.sparse_threshold;
  copts.jobs = resolve_jobs(a.jobs);

  const CaseAnalysisResult result = analyze_case(dataset, cfg, copts);

  std::string stem = a.out_stem;
  if (stem.empty()) {
    fs::path p(a.data_path);
    p.replace_extension();
    stem = p.string() + "-analysis";
  }
  const std::string csv_path = stem + ".csv";
  const std::string ndjson_path = stem + ".ndjson";
  write_case_csv(result, csv_path);
  write_case_records(result, ndjson_path);

  print_fit_tables(result, copts.sparse_threshold, out);
  out << "\nwrote " << csv_path << "\n";
  out << "wrote " << ndjson_path << "\n";

  std::size_t failed = 0;
  for (const CaseModelFit& f : result.fits)
    if (f.failed) ++failed;
  if (failed > 0) {
    err << failed << " model fit(s) failed; see the FAILED blocks above\n";
    return 2;
  }
  return 0;
}

// --- report -----------------------------------------------------------

struct ReportArgs {
  std::string records_path;
  std::string kind;
  std::string format = "csv";
  std::string out_path;  // empty = records path + ".<kind>.<format>"
};

std::string strip_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() >= suffix.size() &&
      s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
    return s.substr(0, s.size() - suffix.size());
  return s;
}

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream&) {
  const ReportKind kind = report_kind_from(a.kind);
  const std::string kind_name = report_kind_name(kind);
  const std::string default_path =
      a.records_path + "." + kind_name + "." + a.format;
  const std::string out_path = a.out_path.empty() ? default_path : a.out_path;

  if (kind == ReportKind::Forest) {
    const CaseAnalysisResult r = load_case_records(a.records_path);
    if (a.format == "csv")
      write_case_csv(r, out_path);
    else
      write_atomic(out_path, forest_svg(r));
    out << "wrote " << out_path << "\n";
    return 0;
  }

  const std::vector<AggregateRow> rows = read_aggregate_csv(a.records_path);
  if (a.format == "csv") {
    write_atomic(out_path, tidy_csv(rows, kind));
    out << "wrote " << out_path << "\n";
    return 0;
  }
  const auto figures = metric_svgs(rows, kind);
  if (figures.size() == 1) {
    write_atomic(out_path, figures.front().second);
    out << "wrote " << out_path << "\n";
    return 0;
  }
  // One figure per scenario; suffix the scenario id into each file name.
  const std::string base = strip_suffix(out_path, ".svg");
  for (const auto& [scenario_id, svg] : figures) {
    const std::string path = base + "-" + scenario_id + ".svg";
    write_atomic(path, svg);
    out << "wrote " << path << "\n";
  }
  return 0;
}

// --- validate ---------------------------------------------------------

int cmd_validate(const std::string& suite, std::ostream& out, std::ostream&) {
  const std::vector<ValidateCheck> checks = validate_suite(suite);
  for (const ValidateCheck& c : checks)
    out << "[" << c.suite << "] " << c.name << ": "
        << (c.pass ? "PASS" : "FAIL") << " - " << c.detail << "\n";
  return all_passed(checks) ? 0 : 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"ordinal outcome simulation and analysis"};
  app.name("ordsim");
  app.set_version_flag("--version", std::string("ordsim ") + kLibraryVersion);
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "run a simulation grid and aggregate the results");
  c_sim->add_option("config", sim.config_path,
                    "run configuration file (key/value document or JSON)")
      ->required();
  c_sim->add_flag("--resume", sim.resume,
                  "keep valid completed replicates found on disk");
  c_sim->add_option("--scenarios", sim.scenario_filter,
                    "comma-separated substrings; keep matching scenario keys");
  c_sim->add_option("--nsim-override", sim.nsim_override,
                    "replace the configured replicates per scenario")
      ->check(CLI::PositiveNumber);
  c_sim->add_flag("--exclude-divergent", sim.exclude_divergent,
                  "drop records whose fit retained divergences");
  c_sim->add_option("--jobs", sim.jobs,
                    "worker threads (default: config, then core count)")
      ->check(CLI::PositiveNumber);

  FitArgs fit;
  CLI::App* c_fit = app.add_subcommand(
      "fit", "analyse one recorded trial endpoint (complete cases)");
  c_fit->add_option("data", fit.data_path, "subject-level delimited file")
      ->required();
  c_fit->add_option("--schema", fit.schema_path,
                    "endpoint schema JSON (name + ordered category labels)")
      ->required();
  c_fit->add_option("--model", fit.model,
                    "model label or \"all\"")
      ->capture_default_str();
  c_fit->add_option("--arms", fit.arms,
                    "map raw arm codes as control:treatment; others dropped");
  c_fit->add_option("--chains", fit.sampler.chains)->capture_default_str();
  c_fit->add_option("--warmup", fit.sampler.warmup)->capture_default_str();
  c_fit->add_option("--post-warmup", fit.sampler.post_warmup_per_chain)
      ->capture_default_str();
  c_fit->add_option("--target-accept", fit.sampler.target_accept)
      ->capture_default_str();
  c_fit->add_option("--max-treedepth", fit.sampler.max_treedepth)
      ->capture_default_str();
  c_fit->add_option("--seed", fit.sampler.seed)->capture_default_str();
  c_fit->add_option("--sparse-threshold", fit.sparse_threshold,
                    "arm count below which a category is flagged sparse")
      ->capture_default_str();
  c_fit->add_option("--jobs", fit.jobs,
                    "parallel model fits (default: core count)")
      ->check(CLI::PositiveNumber);
  c_fit->add_option("--out", fit.out_stem,
                    "output stem for .csv/.ndjson (default: data path with "
                    "the extension replaced by \"-analysis\")");

  ReportArgs rep;
  CLI::App* c_rep = app.add_subcommand(
      "report", "render recorded results as tidy CSV or SVG figures");
  c_rep->add_option("records", rep.records_path,
                    "aggregate CSV (metric kinds) or fit .ndjson (forest)")
      ->required();
  c_rep->add_option("--kind", rep.kind,
                    "bias | relbias | coverage | mse | forest")
      ->required();
  c_rep->add_option("--format", rep.format, "csv | svg")
      ->check(CLI::IsMember({"csv", "svg"}))
      ->capture_default_str();
  c_rep->add_option("--out", rep.out_path,
                    "output path (default: records path + .<kind>.<format>; "
                    "multi-scenario SVG adds -<scenario-id> per file)");

  std::string suite = "all";
  CLI::App* c_val = app.add_subcommand(
      "validate", "run library self-checks and print PASS/FAIL per check");
  c_val->add_option("--suite", suite,
                    "gradients | oracle | sampler | dgm | all")
      ->capture_default_str();

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("ordsim");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  argv.reserve(argv_store.size());
  for (std::string& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    // --help / --version exit 0 through here; real usage errors become 1.
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(sim, out, err);
    if (c_fit->parsed()) return cmd_fit(fit, out, err);
    if (c_rep->parsed()) return cmd_report(rep, out, err);
    return cmd_validate(suite, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ordsim
