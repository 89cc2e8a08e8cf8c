#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ordsim/cli.hpp"

using namespace ordsim;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("ordsim-cli-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  REQUIRE(bool(f));
  f << content;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_substr(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t at = hay.find(needle); at != std::string::npos;
       at = hay.find(needle, at + needle.size()))
    ++n;
  return n;
}

std::size_t line_count(const std::string& text) {
  return count_substr(text, "\n");
}

// One-scenario plan small enough for a test, but past the sampler's floor.
std::string desk_config(const std::string& out_dir,
                        const std::string& n_obs = "200",
                        std::uint64_t n_sim = 4) {
  std::string cfg;
  cfg += "out_dir = \"" + out_dir + "\"\n";
  cfg += "jobs = 1\nseed = 11\nmodels = [\"po\"]\n";
  cfg += "[grid]\nn_obs = " + n_obs + "\nj = 3\n";
  cfg += "shapes = \"symmetric\"\nprops = \"s1-or1.50-sd0.00\"\n";
  cfg += "n_sim = " + std::to_string(n_sim) + "\n";
  cfg += "[sampler]\nchains = 2\nwarmup = 150\npost_warmup = 150\n";
  cfg += "[aggregate]\nbootstrap_b = 200\n";
  return cfg;
}

std::vector<fs::path> record_files(const fs::path& out_dir) {
  std::vector<fs::path> found;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("records-", 0) == 0) found.push_back(entry.path());
  }
  std::sort(found.begin(), found.end());
  return found;
}

const char* kDemoData = ORDSIM_DATA_DIR "/demo_trial/symptom5.csv";
const char* kDemoSchema = ORDSIM_DATA_DIR "/demo_trial/symptom5.schema.json";

}  // namespace

TEST_CASE("usage, help, and version map onto the documented exit codes") {
  CHECK(run({}).code == 1);

  const CliResult help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("simulate") != std::string::npos);
  CHECK(help.out.find("validate") != std::string::npos);

  const CliResult version = run({"--version"});
  CHECK(version.code == 0);
  CHECK(version.out.find("ordsim") != std::string::npos);

  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"simulate"}).code == 1);             // missing config positional
  CHECK(run({"fit", "x.csv"}).code == 1);         // missing --schema
  CHECK(run({"report", "x.csv"}).code == 1);      // missing --kind

  const CliResult badfmt =
      run({"report", "x.csv", "--kind", "bias", "--format", "pdf"});
  CHECK(badfmt.code == 1);
  CHECK(badfmt.err.find("--format") != std::string::npos);
}

TEST_CASE("validate prints one labelled line per check" *
          doctest::timeout(120)) {
  const CliResult ok = run({"validate", "--suite", "dgm"});
  CHECK(ok.code == 0);
  CHECK(line_count(ok.out) == 5);
  CHECK(count_substr(ok.out, "[dgm]") == 5);
  CHECK(count_substr(ok.out, "PASS") == 5);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  const CliResult bogus = run({"validate", "--suite", "everything"});
  CHECK(bogus.code == 1);
  CHECK(bogus.err.find("unknown validation suite") != std::string::npos);
}

TEST_CASE("simulate runs a desk grid and resume rebuilds the aggregate" *
          doctest::timeout(300)) {
  const fs::path dir = fresh_dir("simulate");
  const fs::path out = dir / "out";
  write_file(dir / "desk.toml", desk_config(out.string()));

  const CliResult first = run({"simulate", (dir / "desk.toml").string()});
  CHECK(first.code == 0);
  CHECK(first.err.empty());
  CHECK(first.out.find("executed 4 of 4") != std::string::npos);

  // The run leaves exactly one record file plus the aggregate and manifest.
  const std::vector<fs::path> records = record_files(out);
  REQUIRE(records.size() == 1);
  REQUIRE(fs::exists(out / "aggregate.csv"));
  REQUIRE(fs::exists(out / "manifest.json"));
  const std::string aggregate_bytes = slurp(out / "aggregate.csv");
  const std::string record_bytes = slurp(records[0]);
  CHECK(aggregate_bytes.rfind("scenario_id,model,cutpoint,bias,", 0) == 0);
  CHECK(slurp(out / "manifest.json").find("scenario") != std::string::npos);

  // Deleting the aggregate and rerunning with --resume recomputes nothing
  // and rebuilds identical bytes from the records on disk.
  fs::remove(out / "aggregate.csv");
  const CliResult resumed =
      run({"simulate", (dir / "desk.toml").string(), "--resume"});
  CHECK(resumed.code == 0);
  CHECK(resumed.out.find("resumed 4, executed 0") != std::string::npos);
  CHECK(slurp(out / "aggregate.csv") == aggregate_bytes);
  CHECK(slurp(records[0]) == record_bytes);

  // A fresh rerun (no --resume) recomputes everything to the same bytes.
  const CliResult again = run({"simulate", (dir / "desk.toml").string()});
  CHECK(again.code == 0);
  CHECK(again.out.find("executed 4 of 4") != std::string::npos);
  CHECK(slurp(out / "aggregate.csv") == aggregate_bytes);
  CHECK(slurp(records[0]) == record_bytes);

  // --nsim-override trims the plan; one replicate is too few to aggregate,
  // which is partial completion (records on disk, no aggregate), not usage.
  const fs::path out2 = dir / "out2";
  write_file(dir / "desk2.toml", desk_config(out2.string()));
  const CliResult two = run({"simulate", (dir / "desk2.toml").string(),
                             "--nsim-override", "2"});
  CHECK(two.code == 0);
  CHECK(two.out.find("executed 2 of 2") != std::string::npos);

  const fs::path out3 = dir / "out3";
  write_file(dir / "desk3.toml", desk_config(out3.string()));
  const CliResult one = run({"simulate", (dir / "desk3.toml").string(),
                             "--nsim-override", "1"});
  CHECK(one.code == 2);
  CHECK(one.err.find("aggregation failed") != std::string::npos);
  CHECK(record_files(out3).size() == 1);
  CHECK(!fs::exists(out3 / "aggregate.csv"));
}

TEST_CASE("simulate rejects bad configs before touching the output dir") {
  const fs::path dir = fresh_dir("simulate-bad");
  const fs::path out = dir / "never";

  std::string cfg = desk_config(out.string());
  cfg += "typo_key = 1\n";  // bound to the aggregate table -> unknown
  write_file(dir / "bad.toml", cfg);
  const CliResult bad = run({"simulate", (dir / "bad.toml").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("unrecognized key") != std::string::npos);
  CHECK(!fs::exists(out));

  const CliResult absent = run({"simulate", (dir / "nope.toml").string()});
  CHECK(absent.code == 1);
  CHECK(absent.err.find("nope.toml") != std::string::npos);
  CHECK(!fs::exists(out));

  write_file(dir / "desk.toml", desk_config(out.string()));
  const CliResult miss = run({"simulate", (dir / "desk.toml").string(),
                              "--scenarios", "j11"});
  CHECK(miss.code == 1);
  CHECK(miss.err.find("matched none") != std::string::npos);
  CHECK(!fs::exists(out));
}

TEST_CASE("simulate --scenarios narrows the grid and figures split per "
          "scenario" *
          doctest::timeout(300)) {
  const fs::path dir = fresh_dir("simulate-filter");
  const fs::path out = dir / "out";
  write_file(dir / "two.toml", desk_config(out.string(), "[150, 200]", 2));

  const CliResult narrowed = run({"simulate", (dir / "two.toml").string(),
                                  "--scenarios", "n150"});
  CHECK(narrowed.code == 0);
  CHECK(narrowed.out.find("n150-") != std::string::npos);
  CHECK(narrowed.out.find("n200-") == std::string::npos);
  CHECK(record_files(out).size() == 1);

  // Without the filter the second scenario runs; the first resumes intact.
  const CliResult full =
      run({"simulate", (dir / "two.toml").string(), "--resume"});
  CHECK(full.code == 0);
  CHECK(full.out.find("resumed 2, executed 0") != std::string::npos);
  CHECK(full.out.find("executed 2 of 2") != std::string::npos);
  CHECK(record_files(out).size() == 2);

  // Two scenarios in one aggregate: the SVG report fans out per scenario.
  const std::string agg = (out / "aggregate.csv").string();
  const CliResult svg = run({"report", agg, "--kind", "bias",
                             "--format", "svg"});
  CHECK(svg.code == 0);
  CHECK(count_substr(svg.out, "wrote ") == 2);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (name.find("aggregate.csv.bias-") == 0 &&
        name.rfind(".svg") == name.size() - 4)
      ++files;
  }
  CHECK(files == 2);
}

TEST_CASE("fit analyses a five-point endpoint with every model" *
          doctest::timeout(600)) {
  const fs::path dir = fresh_dir("fit-all");
  const std::string stem = (dir / "symptom5").string();
  const CliResult r = run({"fit", kDemoData, "--schema", kDemoSchema,
                           "--model", "all", "--chains", "2", "--warmup",
                           "150", "--post-warmup", "150", "--seed", "3",
                           "--jobs", "1", "--out", stem});
  CHECK(r.code == 0);
  CHECK(r.err.empty());

  // One block per model, in the canonical order.
  CHECK(count_substr(r.out, "\n== ") == 5);
  for (const char* label :
       {"sep-logistic", "po", "ppo-u", "cppo-linear", "cppo-last"})
    CHECK(r.out.find("== " + std::string(label) + " ==") !=
          std::string::npos);
  CHECK(r.out.find("endpoint: symptom5") != std::string::npos);
  CHECK(r.out.find("FAILED") == std::string::npos);

  REQUIRE(fs::exists(stem + ".csv"));
  REQUIRE(fs::exists(stem + ".ndjson"));
  const std::string csv = slurp(stem + ".csv");
  CHECK(csv.rfind("endpoint,model,cutpoint,median,", 0) == 0);
  CHECK(slurp(stem + ".ndjson").rfind("{\"kind\":\"case\"", 0) == 0);

  // The stdout table and the CSV print the same numbers: every median
  // token in the CSV body appears verbatim in the table.
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  std::size_t checked = 0;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string field;
    for (int i = 0; i < 4; ++i) std::getline(fields, field, ',');
    CHECK(r.out.find(field) != std::string::npos);
    ++checked;
  }
  CHECK(checked == 4 + 4 * 4);  // po + 4 models with one row per cut-point
}

TEST_CASE("fit lets ORDSIM_SEED override the seed flag" *
          doctest::timeout(300)) {
  const fs::path dir = fresh_dir("fit-seed");
  const auto fit_with = [&](const std::string& stem, const char* seed_flag,
                            const char* env) {
    if (env)
      setenv("ORDSIM_SEED", env, 1);
    else
      unsetenv("ORDSIM_SEED");
    const CliResult r = run({"fit", kDemoData, "--schema", kDemoSchema,
                             "--model", "po", "--chains", "2", "--warmup",
                             "150", "--post-warmup", "150", "--seed",
                             seed_flag, "--out", (dir / stem).string()});
    unsetenv("ORDSIM_SEED");
    return r;
  };

  CHECK(fit_with("a", "3", nullptr).code == 0);
  CHECK(fit_with("b", "99", "3").code == 0);   // env beats the flag
  CHECK(fit_with("c", "3", "99").code == 0);   // env changes pinned flags
  const std::string a = slurp(dir / "a.csv");
  CHECK(a == slurp(dir / "b.csv"));
  CHECK(a != slurp(dir / "c.csv"));

  setenv("ORDSIM_SEED", "not-a-number", 1);
  const CliResult bad = run({"fit", kDemoData, "--schema", kDemoSchema,
                             "--model", "po", "--out", (dir / "d").string()});
  unsetenv("ORDSIM_SEED");
  CHECK(bad.code == 1);
  CHECK(bad.err.find("ORDSIM_SEED") != std::string::npos);
}

TEST_CASE("fit rejects bad inputs with exit 1 and a pointed message") {
  const fs::path dir = fresh_dir("fit-bad");

  const CliResult schema_missing =
      run({"fit", kDemoData, "--schema", (dir / "nope.json").string()});
  CHECK(schema_missing.code == 1);
  CHECK(schema_missing.err.find("nope.json") != std::string::npos);

  // Two categories make a single dichotomy; the cumulative models need
  // a scale, so the CLI points the user at sep-logistic on the counts.
  write_file(dir / "binary.schema.json",
             "{\"name\": \"binary\", \"labels\": [\"no\", \"yes\"]}");
  write_file(dir / "binary.csv",
             "subject_id,arm,outcome\ns1,0,1\ns2,0,2\ns3,1,1\ns4,1,2\n");
  const CliResult two_cat = run({"fit", (dir / "binary.csv").string(),
                                 "--schema",
                                 (dir / "binary.schema.json").string(),
                                 "--model", "po"});
  CHECK(two_cat.code == 1);
  CHECK(two_cat.err.find("at least 3 outcome categories") !=
        std::string::npos);
  CHECK(two_cat.err.find("sep-logistic") != std::string::npos);

  const CliResult unknown = run({"fit", kDemoData, "--schema", kDemoSchema,
                                 "--model", "logit"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("unknown model label") != std::string::npos);

  const CliResult arms = run({"fit", kDemoData, "--schema", kDemoSchema,
                              "--arms", "control-vs-treatment"});
  CHECK(arms.code == 1);
  CHECK(arms.err.find("--arms") != std::string::npos);
}

TEST_CASE("report renders tidy tables and forest charts" *
          doctest::timeout(300)) {
  const fs::path dir = fresh_dir("report");
  const fs::path out = dir / "out";
  write_file(dir / "desk.toml", desk_config(out.string()));
  REQUIRE(run({"simulate", (dir / "desk.toml").string()}).code == 0);
  const std::string agg = (out / "aggregate.csv").string();

  // Tidy CSV: long format, one row per aggregate cell (po on j=3 -> 2).
  const CliResult tidy = run({"report", agg, "--kind", "coverage"});
  CHECK(tidy.code == 0);
  CHECK(tidy.out.find("wrote " + agg + ".coverage.csv") != std::string::npos);
  const std::string tidy_text = slurp(agg + ".coverage.csv");
  CHECK(tidy_text.rfind("scenario_id,model,cutpoint,metric,value,mcse\n", 0)
        == 0);
  CHECK(line_count(tidy_text) == 3);
  CHECK(count_substr(tidy_text, ",coverage,") == 2);

  // Metric SVG: one scenario, one figure, explicit output path.
  const std::string fig = (dir / "bias.svg").string();
  const CliResult svg = run({"report", agg, "--kind", "bias", "--format",
                             "svg", "--out", fig});
  CHECK(svg.code == 0);
  const std::string svg_text = slurp(fig);
  CHECK(svg_text.find("<svg") != std::string::npos);
  CHECK(svg_text.find("refline") != std::string::npos);

  // Forest wants fit records, not an aggregate.
  CHECK(run({"report", agg, "--kind", "forest"}).code == 1);
  const CliResult bogus = run({"report", agg, "--kind", "volume"});
  CHECK(bogus.code == 1);
  CHECK(bogus.err.find("unknown report kind") != std::string::npos);

  const std::string stem = (dir / "sym5").string();
  REQUIRE(run({"fit", kDemoData, "--schema", kDemoSchema, "--model", "po",
               "--chains", "2", "--warmup", "150", "--post-warmup", "150",
               "--out", stem}).code == 0);
  const CliResult forest = run({"report", stem + ".ndjson", "--kind",
                                "forest", "--format", "svg"});
  CHECK(forest.code == 0);
  const std::string forest_text = slurp(stem + ".ndjson.forest.svg");
  CHECK(forest_text.find("cut-point log odds ratio") != std::string::npos);
  const CliResult forest_csv = run({"report", stem + ".ndjson", "--kind",
                                    "forest"});
  CHECK(forest_csv.code == 0);
  CHECK(slurp(stem + ".ndjson.forest.csv") == slurp(stem + ".csv"));
}
