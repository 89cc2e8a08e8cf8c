#include "ordsim/trialio.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "ordsim/errors.hpp"
#include "ordsim/rng.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace ordsim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt6(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content,
                  const char* what) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(std::string("cannot open ") + what +
                          " for write: " + tmp);
    out << content;
    if (!out) throw Error(std::string(what) + " write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

std::string slurp(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(std::string("cannot open ") + what + ": " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Strips spaces, tabs, and a stray carriage return from both ends.
std::string trim(std::string s) {
  const char* ws = " \t\r";
  const std::size_t b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_int(const std::string& s, int& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  const auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e && !s.empty();
}

double json_num_or_nan(const njson& v, const std::string& field) {
  if (v.is_null()) return kNaN;
  if (!v.is_number()) throw ParseError("field " + field + " is not a number");
  return v.get<double>();
}

}  // namespace

TrialSchema load_schema(const std::string& path) {
  const std::string text = slurp(path, "schema file");
  njson doc;
  try {
    doc = njson::parse(text);
  } catch (const njson::exception& e) {
    throw ParseError("schema file " + path + ": " + e.what());
  }
  if (!doc.is_object())
    throw ParseError("schema file " + path + ": expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (key != "name" && key != "labels")
      throw ParseError("schema file " + path + ": unknown key \"" + key +
                       "\"");
  }
  if (!doc.contains("name") || !doc["name"].is_string())
    throw ParseError("schema file " + path + ": missing string field \"name\"");
  if (!doc.contains("labels") || !doc["labels"].is_array())
    throw ParseError("schema file " + path +
                     ": missing array field \"labels\"");
  TrialSchema schema;
  schema.name = doc["name"].get<std::string>();
  for (const auto& label : doc["labels"]) {
    if (!label.is_string())
      throw ParseError("schema file " + path + ": labels must be strings");
    schema.labels.push_back(label.get<std::string>());
  }
  if (schema.labels.size() < 2)
    throw ParseError("schema file " + path +
                     ": an ordinal scale needs at least 2 labels");
  return schema;
}

void write_schema_json(const TrialSchema& schema, const std::string& path) {
  ojson doc;
  doc["name"] = schema.name;
  doc["labels"] = schema.labels;
  write_atomic(path, doc.dump(2) + "\n", "schema file");
}

TrialDataset load_trial(const std::string& path, const TrialSchema& schema,
                        const std::optional<ArmFilter>& filter) {
  if (filter && filter->control == filter->treatment)
    throw ConfigError("arm filter maps control and treatment to the same code " +
                      std::to_string(filter->control));
  const std::string text = slurp(path, "trial file");
  const int j = int(schema.j());

  // Split into physical lines so error messages can carry real line numbers.
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find('\n', start);
    if (pos == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  if (!lines.empty() && lines[0].rfind("\xEF\xBB\xBF", 0) == 0)
    lines[0] = lines[0].substr(3);

  // Header: the first non-blank line fixes the delimiter and column layout.
  std::size_t row = 0;
  while (row < lines.size() && trim(lines[row]).empty()) ++row;
  if (row == lines.size())
    throw ParseError(path + ": no header line (expected subject_id,arm,outcome)");
  const char delim = lines[row].find('\t') != std::string::npos ? '\t' : ',';
  {
    const std::vector<std::string> head = split_fields(lines[row], delim);
    const bool ok = head.size() == 3 && trim(head[0]) == "subject_id" &&
                    trim(head[1]) == "arm" && trim(head[2]) == "outcome";
    if (!ok)
      throw ParseError(path + ":" + std::to_string(row + 1) +
                       ": header must be subject_id,arm,outcome");
  }

  TrialDataset d;
  d.schema = schema;
  std::set<std::string> seen;
  for (++row; row < lines.size(); ++row) {
    if (trim(lines[row]).empty()) continue;
    const std::string where = path + ":" + std::to_string(row + 1);
    const std::vector<std::string> fields = split_fields(lines[row], delim);
    if (fields.size() != 3)
      throw ParseError(where + ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    TrialRow r;
    r.subject_id = trim(fields[0]);
    if (r.subject_id.empty()) throw ParseError(where + ": empty subject_id");
    if (!seen.insert(r.subject_id).second)
      throw DuplicateSubject(where + ": duplicate subject_id \"" +
                             r.subject_id + "\"");

    const std::string arm_text = trim(fields[1]);
    if (arm_text.empty()) throw ParseError(where + ": empty arm");
    int arm_code = 0;
    if (!parse_int(arm_text, arm_code))
      throw ParseError(where + ": arm is not an integer: \"" + arm_text +
                       "\"");
    if (filter) {
      if (arm_code == filter->control)
        r.arm = 0;
      else if (arm_code == filter->treatment)
        r.arm = 1;
      else
        continue;  // outside the pairwise comparison
    } else {
      if (arm_code != 0 && arm_code != 1)
        throw DomainError(where + ": arm must be 0 or 1, got " +
                          std::to_string(arm_code));
      r.arm = arm_code;
    }

    const std::string outcome_text = trim(fields[2]);
    if (!outcome_text.empty()) {
      int outcome = 0;
      if (!parse_int(outcome_text, outcome))
        throw ParseError(where + ": outcome is not an integer: \"" +
                         outcome_text + "\"");
      if (outcome < 1 || outcome > j)
        throw DomainError(where + ": outcome " + std::to_string(outcome) +
                          " outside 1.." + std::to_string(j) +
                          " for schema \"" + schema.name + "\"");
      r.outcome = outcome;
    }
    d.rows.push_back(std::move(r));
  }
  return d;
}

void write_trial_csv(const TrialDataset& d, const std::string& path) {
  std::string out = "subject_id,arm,outcome\n";
  for (const TrialRow& r : d.rows) {
    out += r.subject_id;
    out += ',';
    out += std::to_string(r.arm);
    out += ',';
    if (r.outcome) out += std::to_string(*r.outcome);
    out += '\n';
  }
  write_atomic(path, out, "trial file");
}

std::pair<TrialDataset, std::size_t> complete_cases(const TrialDataset& d) {
  TrialDataset kept;
  kept.schema = d.schema;
  for (const TrialRow& r : d.rows)
    if (r.outcome) kept.rows.push_back(r);
  if (kept.rows.empty())
    throw EmptyAfterFilter("no complete cases: all " +
                           std::to_string(d.rows.size()) +
                           " rows have missing outcomes");
  return {std::move(kept), d.rows.size() - kept.rows.size()};
}

OrdinalCounts tabulate(const TrialDataset& d) {
  OrdinalCounts counts;
  counts.control.assign(d.j(), 0);
  counts.treatment.assign(d.j(), 0);
  for (const TrialRow& r : d.rows)
    if (r.outcome) ++counts.arm(r.arm)[std::size_t(*r.outcome) - 1];
  return counts;
}

std::vector<std::size_t> sparse_categories(const OrdinalCounts& counts,
                                           std::size_t threshold) {
  std::vector<std::size_t> sparse;
  for (std::size_t c = 0; c < counts.j(); ++c)
    if (counts.control[c] < threshold || counts.treatment[c] < threshold)
      sparse.push_back(c + 1);
  return sparse;
}

std::vector<std::size_t> prior_dominated_cutpoints(const OrdinalCounts& counts) {
  std::vector<std::size_t> flagged;
  for (std::size_t k = 2; k <= counts.j(); ++k) {
    const OrdinalCounts d2 = dichotomize(counts, k);
    const bool empty_cell = d2.control[0] == 0 || d2.control[1] == 0 ||
                            d2.treatment[0] == 0 || d2.treatment[1] == 0;
    if (empty_cell) flagged.push_back(k);
  }
  return flagged;
}

const CaseModelFit* CaseAnalysisResult::fit(const std::string& label) const {
  for (const CaseModelFit& f : fits)
    if (f.model == label) return &f;
  return nullptr;
}

namespace {

CaseModelFit case_fit_from(const std::string& label, const ModelFit& mf) {
  CaseModelFit out;
  out.model = label;
  out.cutpoints = mf.draws.cutpoints;
  out.summaries.reserve(out.cutpoints.size());
  for (std::size_t i = 0; i < out.cutpoints.size(); ++i)
    out.summaries.push_back(summarize(mf.draws.pooled(i)));
  out.diagnostics = mf.diagnostics;
  out.escalated = mf.escalated;
  return out;
}

CaseModelFit failed_fit(const std::string& label, std::size_t j,
                        const std::string& what) {
  CaseModelFit out;
  out.model = label;
  for (std::size_t k = 2; k <= j; ++k) out.cutpoints.push_back(k);
  out.summaries.assign(out.cutpoints.size(), {kNaN, kNaN, kNaN});
  out.diagnostics.params.assign(out.cutpoints.size(), {kNaN, kNaN, kNaN});
  out.diagnostics.converged = false;
  out.failed = true;
  out.error = what;
  return out;
}

}  // namespace

CaseAnalysisResult analyze_case(const TrialDataset& d, const SamplerConfig& cfg,
                                const CaseOptions& opts) {
  if (d.j() < 3)
    throw ShapeMismatch(
        "case analysis requires at least 3 outcome categories; a 2-category "
        "outcome is a single dichotomy (use sep-logistic on those counts "
        "directly)");
  cfg.validate();
  if (opts.models.empty()) throw ConfigError("no models requested");
  {
    std::set<std::string> unique(opts.models.begin(), opts.models.end());
    if (unique.size() != opts.models.size())
      throw ConfigError("duplicate model label in the request");
  }
  // Resolve every label before any sampling so an unknown one aborts the
  // whole analysis instead of surfacing as a partial result.
  std::vector<ModelSpec> specs;
  specs.reserve(opts.models.size());
  for (const std::string& label : opts.models)
    specs.push_back(model_by_label(label, d.j()));

  CaseAnalysisResult result;
  result.endpoint = d.schema.name;
  const auto [complete, n_dropped] = complete_cases(d);
  result.n_complete = complete.rows.size();
  result.n_dropped = n_dropped;
  result.counts = tabulate(complete);
  validate_counts(result.counts);  // at least one subject per arm
  result.sparse_categories =
      sparse_categories(result.counts, opts.sparse_threshold);
  result.prior_dominated = prior_dominated_cutpoints(result.counts);

  result.fits.resize(opts.models.size());
  auto run_one = [&](std::size_t i) {
    try {
      result.fits[i] =
          case_fit_from(opts.models[i], run_model(specs[i], result.counts, cfg));
    } catch (const Error& e) {
      result.fits[i] = failed_fit(opts.models[i], d.j(), e.what());
    }
  };

  const unsigned jobs =
      std::max(1u, std::min<unsigned>(opts.jobs, unsigned(specs.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) run_one(i);
  } else {
    // Each worker owns distinct result slots, so merging is the layout
    // itself; a non-library exception stops everyone and is rethrown.
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= specs.size()) return;
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (std::thread& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return result;
}

namespace {

// Field order of the persisted case records is pinned; tests compare bytes.
ojson case_header_json(const CaseAnalysisResult& r) {
  ojson o;
  o["kind"] = "case";
  o["endpoint"] = r.endpoint;
  o["j"] = r.counts.j();
  o["n_complete"] = r.n_complete;
  o["n_dropped"] = r.n_dropped;
  o["control_counts"] = r.counts.control;
  o["treatment_counts"] = r.counts.treatment;
  o["sparse_categories"] = r.sparse_categories;
  o["prior_dominated"] = r.prior_dominated;
  ojson models = ojson::array();
  for (const CaseModelFit& f : r.fits) models.push_back(f.model);
  o["models"] = models;
  return o;
}

ojson case_cell_json(const CaseAnalysisResult& r, const CaseModelFit& f,
                     std::size_t i) {
  const bool dominated =
      std::find(r.prior_dominated.begin(), r.prior_dominated.end(),
                f.cutpoints[i]) != r.prior_dominated.end();
  const ParamDiagnostics& pd = f.diagnostics.params[i];
  ojson o;
  o["kind"] = "cell";
  o["endpoint"] = r.endpoint;
  o["model"] = f.model;
  o["cutpoint"] = f.cutpoints[i];
  o["median"] = f.summaries[i].median;
  o["ci_low"] = f.summaries[i].ci_low;
  o["ci_high"] = f.summaries[i].ci_high;
  o["rhat"] = pd.rhat;
  o["ess_bulk"] = pd.ess_bulk;
  o["ess_tail"] = pd.ess_tail;
  o["n_divergent"] = f.diagnostics.n_divergent;
  o["max_treedepth_hits"] = f.diagnostics.max_treedepth_hits;
  o["converged"] = f.diagnostics.converged;
  o["escalated"] = f.escalated;
  o["prior_dominated"] = dominated;
  o["failed"] = f.failed;
  o["error"] = f.error;
  return o;
}

}  // namespace

void write_case_records(const CaseAnalysisResult& r, const std::string& path) {
  std::string out = case_header_json(r).dump() + "\n";
  for (const CaseModelFit& f : r.fits) {
    if (f.cutpoints.size() != f.summaries.size() ||
        f.cutpoints.size() != f.diagnostics.params.size())
      throw ShapeMismatch("case fit " + f.model +
                          ": cut-point layout is not rectangular");
    for (std::size_t i = 0; i < f.cutpoints.size(); ++i)
      out += case_cell_json(r, f, i).dump() + "\n";
  }
  write_atomic(path, out, "case record file");
}

CaseAnalysisResult load_case_records(const std::string& path) {
  std::istringstream in(slurp(path, "case record file"));
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line))
      throw ParseError(path + ": truncated before " + what);
    ++line_no;
    return njson::parse(line, nullptr, false);
  };
  auto context = [&] { return path + ":" + std::to_string(line_no); };

  try {
    njson head = next_line("the case line");
    if (head.is_discarded() || !head.is_object() ||
        head.value("kind", "") != "case")
      throw ParseError(context() + ": expected a \"case\" line");
    CaseAnalysisResult r;
    r.endpoint = head.at("endpoint").get<std::string>();
    const std::size_t j = head.at("j").get<std::size_t>();
    r.n_complete = head.at("n_complete").get<std::size_t>();
    r.n_dropped = head.at("n_dropped").get<std::size_t>();
    r.counts.control = head.at("control_counts").get<std::vector<std::uint64_t>>();
    r.counts.treatment =
        head.at("treatment_counts").get<std::vector<std::uint64_t>>();
    if (r.counts.j() != j || r.counts.treatment.size() != j)
      throw ParseError(context() + ": counts do not match j");
    r.sparse_categories =
        head.at("sparse_categories").get<std::vector<std::size_t>>();
    r.prior_dominated =
        head.at("prior_dominated").get<std::vector<std::size_t>>();
    const std::vector<std::string> models =
        head.at("models").get<std::vector<std::string>>();

    for (const std::string& model : models) {
      CaseModelFit f;
      f.model = model;
      for (std::size_t k = 2; k <= j; ++k) {
        njson cell = next_line("a cell line");
        if (cell.is_discarded() || !cell.is_object() ||
            cell.value("kind", "") != "cell")
          throw ParseError(context() + ": expected a \"cell\" line");
        if (cell.at("model").get<std::string>() != model ||
            cell.at("cutpoint").get<std::size_t>() != k)
          throw ParseError(context() + ": cell out of order (want " + model +
                           " cut-point " + std::to_string(k) + ")");
        f.cutpoints.push_back(k);
        f.summaries.push_back({json_num_or_nan(cell.at("median"), "median"),
                               json_num_or_nan(cell.at("ci_low"), "ci_low"),
                               json_num_or_nan(cell.at("ci_high"), "ci_high")});
        f.diagnostics.params.push_back(
            {json_num_or_nan(cell.at("rhat"), "rhat"),
             json_num_or_nan(cell.at("ess_bulk"), "ess_bulk"),
             json_num_or_nan(cell.at("ess_tail"), "ess_tail")});
        const int n_div = cell.at("n_divergent").get<int>();
        const int mtd = cell.at("max_treedepth_hits").get<int>();
        const bool converged = cell.at("converged").get<bool>();
        const bool escalated = cell.at("escalated").get<bool>();
        const bool failed = cell.at("failed").get<bool>();
        const std::string error = cell.at("error").get<std::string>();
        if (k == 2) {
          f.diagnostics.n_divergent = n_div;
          f.diagnostics.max_treedepth_hits = mtd;
          f.diagnostics.converged = converged;
          f.escalated = escalated;
          f.failed = failed;
          f.error = error;
        } else if (n_div != f.diagnostics.n_divergent ||
                   mtd != f.diagnostics.max_treedepth_hits ||
                   converged != f.diagnostics.converged ||
                   escalated != f.escalated || failed != f.failed ||
                   error != f.error) {
          throw ParseError(context() +
                           ": fit-level fields differ between cells of " +
                           model);
        }
      }
      r.fits.push_back(std::move(f));
    }
    if (std::getline(in, line) && !trim(line).empty())
      throw ParseError(path + ": trailing content after the last cell");
    return r;
  } catch (const njson::exception& e) {
    throw ParseError(context() + ": " + e.what());
  }
}

void write_case_csv(const CaseAnalysisResult& r, const std::string& path) {
  std::string out =
      "endpoint,model,cutpoint,median,ci_low,ci_high,rhat,ess_bulk,ess_tail,"
      "n_divergent,converged,escalated,prior_dominated,failed\n";
  for (const CaseModelFit& f : r.fits) {
    for (std::size_t i = 0; i < f.cutpoints.size(); ++i) {
      const bool dominated =
          std::find(r.prior_dominated.begin(), r.prior_dominated.end(),
                    f.cutpoints[i]) != r.prior_dominated.end();
      const ParamDiagnostics& pd = f.diagnostics.params[i];
      out += r.endpoint + "," + f.model + "," + std::to_string(f.cutpoints[i]);
      out += "," + fmt6(f.summaries[i].median);
      out += "," + fmt6(f.summaries[i].ci_low);
      out += "," + fmt6(f.summaries[i].ci_high);
      out += "," + fmt6(pd.rhat);
      out += "," + fmt6(pd.ess_bulk);
      out += "," + fmt6(pd.ess_tail);
      out += "," + std::to_string(f.diagnostics.n_divergent);
      out += std::string(",") + (f.diagnostics.converged ? "1" : "0");
      out += std::string(",") + (f.escalated ? "1" : "0");
      out += std::string(",") + (dominated ? "1" : "0");
      out += std::string(",") + (f.failed ? "1" : "0");
      out += "\n";
    }
  }
  write_atomic(path, out, "case summary file");
}

TrialDataset synthetic_trial(const SyntheticEndpoint& e, std::uint64_t seed) {
  const std::size_t j = e.labels.size();
  if (j < 2) throw ConfigError("synthetic endpoint needs at least 2 labels");
  if (e.control_weights.size() != j || e.treatment_weights.size() != j)
    throw ConfigError("synthetic endpoint " + e.name +
                      ": weight vectors must match the label count");
  for (const std::vector<double>* w : {&e.control_weights, &e.treatment_weights}) {
    double sum = 0.0;
    for (double x : *w) {
      if (!(x >= 0.0))
        throw ConfigError("synthetic endpoint " + e.name +
                          ": weights must be nonnegative");
      sum += x;
    }
    if (!(sum > 0.0))
      throw ConfigError("synthetic endpoint " + e.name +
                        ": weights must not all be zero");
  }
  if (e.n_subjects < 2)
    throw ConfigError("synthetic endpoint " + e.name +
                      ": needs at least 2 subjects");
  if (!(e.missing_rate >= 0.0 && e.missing_rate < 1.0))
    throw ConfigError("synthetic endpoint " + e.name +
                      ": missing_rate must lie in [0, 1)");

  RngStream rng(seed);
  TrialDataset d;
  d.schema.name = e.name;
  d.schema.labels = e.labels;
  const int width = int(std::to_string(e.n_subjects).size());
  for (std::uint64_t i = 0; i < e.n_subjects; ++i) {
    TrialRow r;
    char id[32];
    std::snprintf(id, sizeof(id), "S%0*llu", width,
                  static_cast<unsigned long long>(i + 1));
    r.subject_id = id;
    r.arm = rng.uniform() < 0.5 ? 0 : 1;
    const int outcome =
        int(rng.categorical(r.arm == 0 ? e.control_weights
                                       : e.treatment_weights)) +
        1;
    if (e.missing_rate > 0.0 && rng.uniform() < e.missing_rate) {
      r.outcome.reset();
    } else {
      r.outcome = outcome;
    }
    d.rows.push_back(std::move(r));
  }
  return d;
}

std::vector<SyntheticEndpoint> demo_endpoints() {
  std::vector<SyntheticEndpoint> out;

  // Eight-state clinical status scale, higher = further recovered.  Skewed:
  // most subjects sit in the top states, the severe ones are thin.
  {
    SyntheticEndpoint e;
    e.name = "status8";
    e.labels = {"dead",
                "ventilated",
                "organ support",
                "hospitalized, on oxygen",
                "hospitalized",
                "home, limited",
                "home, symptomatic",
                "recovered"};
    e.control_weights = {2.0, 1.5, 2.0, 4.0, 8.0, 14.0, 26.0, 42.5};
    e.treatment_weights = {1.6, 1.2, 1.7, 3.3, 7.0, 13.0, 26.0, 46.2};
    e.n_subjects = 700;
    e.missing_rate = 0.03;
    out.push_back(std::move(e));
  }

  // Five-grade symptom severity scale, higher = worse.
  {
    SyntheticEndpoint e;
    e.name = "symptom5";
    e.labels = {"grade 0", "grade 1", "grade 2", "grade 3", "grade 4"};
    e.control_weights = {30.0, 30.0, 20.0, 12.0, 8.0};
    e.treatment_weights = {36.0, 30.0, 18.0, 10.0, 6.0};
    e.n_subjects = 450;
    e.missing_rate = 0.02;
    out.push_back(std::move(e));
  }

  // Days alive and out of hospital over four weeks: 29 categories (0..28
  // days), a death spike at 0, zero-weight gaps through the sparse middle,
  // and heavy mass at the top.  The zeros make some categories empty in
  // every realisation, which is the shape that strains cut-point-specific
  // effect models.
  {
    SyntheticEndpoint e;
    e.name = "hospfree29";
    e.labels.reserve(29);
    for (int days = 0; days <= 28; ++days)
      e.labels.push_back(std::to_string(days) + " days");
    e.control_weights = {7.0, 0.0, 0.4, 0.0, 0.6, 0.0, 0.0, 0.8, 0.5, 0.0,
                         0.9, 0.0, 1.0, 0.7, 1.2, 1.5, 1.8, 2.2, 2.6, 3.0,
                         3.6, 4.4, 5.5, 7.0, 9.0, 12.0, 16.0, 22.0, 55.0};
    e.treatment_weights = {5.5, 0.0, 0.3, 0.0, 0.5, 0.0, 0.0, 0.6, 0.4, 0.0,
                           0.7, 0.0, 0.8, 0.6, 1.0, 1.3, 1.6, 2.0, 2.4, 2.8,
                           3.4, 4.2, 5.3, 6.8, 8.8, 11.8, 16.0, 23.0, 60.0};
    e.n_subjects = 800;
    e.missing_rate = 0.04;
    out.push_back(std::move(e));
  }

  // Days alive and free of ventilation: even more top-heavy, and the
  // treatment arm has a structural zero at 0 days (no deaths), so the first
  // dichotomy has an empty cell and its log-OR is prior-dominated.
  {
    SyntheticEndpoint e;
    e.name = "ventfree29";
    e.labels.reserve(29);
    for (int days = 0; days <= 28; ++days)
      e.labels.push_back(std::to_string(days) + " days");
    e.control_weights = {4.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.4, 0.0, 0.0,
                         0.5, 0.0, 0.0, 0.6, 0.0, 0.7, 0.0, 0.9, 1.1, 1.4,
                         1.8, 2.3, 3.0, 4.0, 5.5, 7.5, 10.0, 14.0, 70.0};
    e.treatment_weights = {0.0, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0,
                           0.4, 0.0, 0.0, 0.5, 0.0, 0.6, 0.0, 0.8, 1.0, 1.2,
                           1.6, 2.1, 2.8, 3.7, 5.1, 7.0, 9.5, 13.5, 74.0};
    e.n_subjects = 800;
    e.missing_rate = 0.035;
    out.push_back(std::move(e));
  }
  return out;
}

std::uint64_t demo_trial_seed(const std::string& endpoint_name) {
  return mix_key(fnv1a64("demo-trial"), fnv1a64(endpoint_name));
}

}  // namespace ordsim
