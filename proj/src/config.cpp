#include "ordsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ordsim/errors.hpp"
#include "ordsim/model.hpp"

namespace ordsim {

using njson = nlohmann::json;

namespace {

[[noreturn]] void syntax_fail(const std::string& origin, std::size_t lineno,
                              const std::string& what) {
  throw ParseError(origin + ":" + std::to_string(lineno) + ": " + what);
}

[[noreturn]] void key_fail(const std::string& origin, const std::string& path,
                           const std::string& what) {
  throw ConfigError(origin + ": " + path + ": " + what);
}

std::string trim(const std::string& s) {
  const char* ws = " \t\r";
  const auto a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(ws) - a + 1);
}

// Cuts a trailing '#' comment, honoring double-quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\')
        ++i;
      else if (c == '"')
        in_string = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool bare_key_ok(const std::string& s) {
  if (s.empty()) return false;
  for (const char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      return false;
  return true;
}

// Decodes the double-quoted string starting at text[pos] == '"'; leaves pos
// one past the closing quote.
std::string parse_quoted(const std::string& text, std::size_t& pos,
                         const std::string& origin, std::size_t lineno) {
  std::string out;
  for (std::size_t i = pos + 1; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '"') {
      pos = i + 1;
      return out;
    }
    if (c == '\\') {
      if (i + 1 >= text.size()) break;
      const char e = text[++i];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default:
          syntax_fail(origin, lineno,
                      std::string("unsupported escape \"\\") + e + "\"");
      }
      continue;
    }
    out.push_back(c);
  }
  syntax_fail(origin, lineno, "unterminated string");
}

njson parse_scalar(const std::string& text, const std::string& origin,
                   std::size_t lineno) {
  if (!text.empty() && text[0] == '"') {
    std::size_t pos = 0;
    const std::string s = parse_quoted(text, pos, origin, lineno);
    if (!trim(text.substr(pos)).empty())
      syntax_fail(origin, lineno, "trailing content after string");
    return njson(s);
  }
  if (text == "true") return njson(true);
  if (text == "false") return njson(false);

  std::int64_t i = 0;
  const auto [iptr, iec] =
      std::from_chars(text.data(), text.data() + text.size(), i);
  if (iec == std::errc() && iptr == text.data() + text.size()) return njson(i);

  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(text.c_str(), &end);
  if (end == text.c_str() + text.size() && !text.empty() && errno != ERANGE)
    return njson(d);

  syntax_fail(origin, lineno, "unparseable value \"" + text + "\"");
}

njson parse_value(const std::string& text, const std::string& origin,
                  std::size_t lineno) {
  if (text.empty()) syntax_fail(origin, lineno, "missing value");
  if (text[0] != '[') return parse_scalar(text, origin, lineno);
  if (text.back() != ']')
    syntax_fail(origin, lineno, "array does not end with ']'");

  njson arr = njson::array();
  std::string elem;
  bool in_string = false;
  auto flush = [&](bool final_piece) {
    const std::string e = trim(elem);
    elem.clear();
    if (e.empty()) {
      // A trailing comma leaves one empty final piece; that's fine.
      if (!final_piece || arr.empty()) return false;
      return true;
    }
    arr.push_back(parse_scalar(e, origin, lineno));
    return true;
  };
  for (std::size_t i = 1; i + 1 < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      elem.push_back(c);
      if (c == '\\' && i + 2 < text.size()) {
        elem.push_back(text[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      elem.push_back(c);
    } else if (c == '[') {
      syntax_fail(origin, lineno, "nested arrays are not supported");
    } else if (c == ',') {
      if (!flush(false))
        syntax_fail(origin, lineno, "empty array element");
    } else {
      elem.push_back(c);
    }
  }
  if (in_string) syntax_fail(origin, lineno, "unterminated string");
  flush(true);
  return arr;
}

// The TOML subset: '#' comments, [table] headers, key = value lines with
// string/bool/int/float/single-line-array values.
njson parse_toml(const std::string& text, const std::string& origin) {
  njson root = njson::object();
  njson* table = &root;
  std::set<std::string> seen_headers;

  std::istringstream lines(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(lines, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line[0] == '[') {
      if (line.back() != ']')
        syntax_fail(origin, lineno, "table header does not end with ']'");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!seen_headers.insert(name).second)
        syntax_fail(origin, lineno, "duplicate table [" + name + "]");
      table = &root;
      std::istringstream parts(name);
      std::string part;
      while (std::getline(parts, part, '.')) {
        part = trim(part);
        if (!bare_key_ok(part))
          syntax_fail(origin, lineno, "malformed table name [" + name + "]");
        njson& next = (*table)[part];
        if (next.is_null()) next = njson::object();
        if (!next.is_object())
          syntax_fail(origin, lineno,
                      "table [" + name + "] collides with a value");
        table = &next;
      }
      continue;
    }

    // key = value, with '=' located outside any string (strings only appear
    // on the right-hand side, so the first '=' is the separator).
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      syntax_fail(origin, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!bare_key_ok(key))
      syntax_fail(origin, lineno, "malformed key \"" + key + "\"");
    if (table->contains(key))
      syntax_fail(origin, lineno, "duplicate key \"" + key + "\"");
    (*table)[key] = parse_value(trim(line.substr(eq + 1)), origin, lineno);
  }
  return root;
}

// --- schema binding -------------------------------------------------------

std::uint64_t req_u64(const njson& v, const std::string& origin,
                      const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const auto i = v.get<std::int64_t>();
    if (i < 0) key_fail(origin, path, "must be a non-negative integer");
    return static_cast<std::uint64_t>(i);
  }
  key_fail(origin, path, "expected an integer");
}

unsigned req_u32(const njson& v, const std::string& origin,
                 const std::string& path) {
  const std::uint64_t u = req_u64(v, origin, path);
  if (u > std::numeric_limits<unsigned>::max())
    key_fail(origin, path, "value is too large");
  return static_cast<unsigned>(u);
}

double req_double(const njson& v, const std::string& origin,
                  const std::string& path) {
  if (!v.is_number()) key_fail(origin, path, "expected a number");
  return v.get<double>();
}

bool req_bool(const njson& v, const std::string& origin,
              const std::string& path) {
  if (!v.is_boolean()) key_fail(origin, path, "expected true or false");
  return v.get<bool>();
}

std::string req_string(const njson& v, const std::string& origin,
                       const std::string& path) {
  if (!v.is_string()) key_fail(origin, path, "expected a string");
  return v.get<std::string>();
}

// A scalar is accepted anywhere an array fits, as a one-element array.
std::vector<njson> array_or_scalar(const njson& v) {
  if (v.is_array()) return std::vector<njson>(v.begin(), v.end());
  return {v};
}

std::vector<std::string> bind_models(const njson& v, const std::string& origin,
                                     const std::string& path) {
  const auto& known = all_model_labels();
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& e : array_or_scalar(v)) {
    const std::string label = req_string(e, origin, path);
    if (std::find(known.begin(), known.end(), label) == known.end())
      key_fail(origin, path, "unknown model \"" + label + "\"");
    if (!seen.insert(label).second)
      key_fail(origin, path, "duplicate model \"" + label + "\"");
    out.push_back(label);
  }
  if (out.empty()) key_fail(origin, path, "must not be empty");
  return out;
}

void bind_grid(const njson& tab, const std::string& origin, GridPlan& plan) {
  if (!tab.is_object()) key_fail(origin, "grid", "expected a table");
  for (const auto& [key, val] : tab.items()) {
    const std::string path = "grid." + key;
    if (key == "n_obs") {
      plan.n_obs.clear();
      for (const auto& e : array_or_scalar(val)) {
        const std::uint64_t n = req_u64(e, origin, path);
        if (n == 0) key_fail(origin, path, "trial size must be at least 1");
        if (std::find(plan.n_obs.begin(), plan.n_obs.end(), n) !=
            plan.n_obs.end())
          key_fail(origin, path, "duplicate entry " + std::to_string(n));
        plan.n_obs.push_back(n);
      }
      if (plan.n_obs.empty()) key_fail(origin, path, "must not be empty");
    } else if (key == "j") {
      plan.j.clear();
      for (const auto& e : array_or_scalar(val)) {
        const std::uint64_t j = req_u64(e, origin, path);
        if (j < 3)
          key_fail(origin, path,
                   "analysis models need at least 3 outcome categories");
        if (std::find(plan.j.begin(), plan.j.end(), j) != plan.j.end())
          key_fail(origin, path, "duplicate entry " + std::to_string(j));
        plan.j.push_back(static_cast<std::size_t>(j));
      }
      if (plan.j.empty()) key_fail(origin, path, "must not be empty");
    } else if (key == "shapes") {
      plan.shapes.clear();
      std::set<std::string> seen;
      for (const auto& e : array_or_scalar(val)) {
        const std::string name = req_string(e, origin, path);
        ControlShape shape;
        try {
          shape = shape_from_name(name);
        } catch (const ConfigError& err) {
          key_fail(origin, path, err.what());
        }
        if (!seen.insert(shape.name).second)
          key_fail(origin, path, "duplicate entry \"" + shape.name + "\"");
        plan.shapes.push_back(shape);
      }
      if (plan.shapes.empty()) key_fail(origin, path, "must not be empty");
    } else if (key == "props") {
      if (val.is_string() && val.get<std::string>() == "all") {
        plan.props = GridPlan::default_props();
        continue;
      }
      if (val.is_string() && val.get<std::string>() == "s1-only") {
        plan.props = GridPlan::s1_only_props();
        continue;
      }
      plan.props.clear();
      std::set<std::string> seen;
      for (const auto& e : array_or_scalar(val)) {
        const std::string name = req_string(e, origin, path);
        PropScenario prop;
        try {
          prop = prop_from_key(name);
        } catch (const ConfigError& err) {
          key_fail(origin, path, err.what());
        }
        if (!seen.insert(prop.key()).second)
          key_fail(origin, path, "duplicate entry \"" + prop.key() + "\"");
        plan.props.push_back(prop);
      }
      if (plan.props.empty()) key_fail(origin, path, "must not be empty");
    } else if (key == "n_sim") {
      plan.n_sim = req_u64(val, origin, path);
      if (plan.n_sim == 0)
        key_fail(origin, path, "replicate count must be at least 1");
    } else {
      key_fail(origin, path, "unrecognized key");
    }
  }
}

void bind_sampler(const njson& tab, const std::string& origin,
                  SamplerConfig& cfg) {
  if (!tab.is_object()) key_fail(origin, "sampler", "expected a table");
  for (const auto& [key, val] : tab.items()) {
    const std::string path = "sampler." + key;
    if (key == "chains")
      cfg.chains = req_u32(val, origin, path);
    else if (key == "warmup")
      cfg.warmup = req_u32(val, origin, path);
    else if (key == "post_warmup")
      cfg.post_warmup_per_chain = req_u32(val, origin, path);
    else if (key == "target_accept")
      cfg.target_accept = req_double(val, origin, path);
    else if (key == "max_treedepth")
      cfg.max_treedepth = req_u32(val, origin, path);
    else
      key_fail(origin, path, "unrecognized key");
  }
}

void bind_aggregate(const njson& tab, const std::string& origin,
                    AggregateOptions& agg) {
  if (!tab.is_object()) key_fail(origin, "aggregate", "expected a table");
  for (const auto& [key, val] : tab.items()) {
    const std::string path = "aggregate." + key;
    if (key == "relbias") {
      const std::string name = req_string(val, origin, path);
      if (name == "mean-ratio")
        agg.relbias = RelBias::MeanRatio;
      else if (name == "ratio-of-means")
        agg.relbias = RelBias::RatioOfMeans;
      else
        key_fail(origin, path,
                 "unknown relative-bias form \"" + name +
                     "\" (expected \"mean-ratio\" or \"ratio-of-means\")");
    } else if (key == "exclude_divergent") {
      agg.exclude_divergent = req_bool(val, origin, path);
    } else if (key == "bootstrap_b") {
      agg.bootstrap_b = req_u32(val, origin, path);
      if (agg.bootstrap_b == 0)
        key_fail(origin, path, "resample count must be at least 1");
    } else {
      key_fail(origin, path, "unrecognized key");
    }
  }
}

}  // namespace

ControlShape shape_from_name(const std::string& name) {
  if (name == "symmetric") return ControlShape::symmetric();
  if (name == "skewed") return ControlShape::skewed();
  throw ConfigError("unrecognized control shape \"" + name +
                    "\" (expected \"symmetric\" or \"skewed\")");
}

PropScenario prop_from_key(const std::string& key) {
  auto malformed = [&]() {
    return ConfigError("unrecognized proportionality key \"" + key +
                       "\" (expected \"s1-or<OR>-sd<SD>\", \"s2\", or "
                       "\"s3-or<OR>\")");
  };
  auto num = [&](const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
      throw malformed();
    return v;
  };
  auto odds_ratio = [&](const std::string& s) {
    const double orv = num(s);
    if (!(orv > 0.0) || !std::isfinite(orv))
      throw ConfigError("proportionality key \"" + key +
                        "\": odds ratio must be positive and finite");
    return orv;
  };

  if (key == "s2") return PropScenario::s2();
  if (key.rfind("s1-or", 0) == 0) {
    const std::string rest = key.substr(5);
    const auto sd_at = rest.find("-sd");
    if (sd_at == std::string::npos) throw malformed();
    const double orv = odds_ratio(rest.substr(0, sd_at));
    const double sd = num(rest.substr(sd_at + 3));
    if (!(sd >= 0.0) || !std::isfinite(sd))
      throw ConfigError("proportionality key \"" + key +
                        "\": sd must be non-negative and finite");
    return PropScenario::s1(std::log(orv), sd);
  }
  if (key.rfind("s3-or", 0) == 0)
    return PropScenario::s3(std::log(odds_ratio(key.substr(5))));
  throw malformed();
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  const auto first = text.find_first_not_of(" \t\r\n");
  njson root;
  if (first != std::string::npos && text[first] == '{') {
    try {
      root = njson::parse(text);
    } catch (const njson::parse_error& e) {
      throw ParseError(origin + ": " + e.what());
    }
  } else {
    root = parse_toml(text, origin);
  }
  if (!root.is_object())
    throw ConfigError(origin + ": config root must be a table");

  RunConfig rc;
  for (const auto& [key, val] : root.items()) {
    if (key == "seed") {
      rc.plan.sampler.seed = req_u64(val, origin, "seed");
    } else if (key == "out_dir") {
      rc.out_dir = req_string(val, origin, "out_dir");
      if (rc.out_dir.empty()) key_fail(origin, "out_dir", "must not be empty");
    } else if (key == "jobs") {
      rc.jobs = req_u32(val, origin, "jobs");
      if (rc.jobs == 0) key_fail(origin, "jobs", "must be at least 1");
    } else if (key == "models") {
      rc.plan.models = bind_models(val, origin, "models");
    } else if (key == "grid") {
      bind_grid(val, origin, rc.plan);
    } else if (key == "sampler") {
      bind_sampler(val, origin, rc.plan.sampler);
    } else if (key == "aggregate") {
      bind_aggregate(val, origin, rc.agg);
    } else {
      key_fail(origin, key, "unrecognized key");
    }
  }

  try {
    rc.plan.sampler.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": sampler: " + e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path);
}

}  // namespace ordsim
