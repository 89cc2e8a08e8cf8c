#include "ordsim/report.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "ordsim/errors.hpp"
#include "ordsim/model.hpp"

namespace ordsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// --- plain-CSV plumbing (these files never quote fields) -------------------

std::string fmt6(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (const char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

double parse_double(const std::string& s, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ParseError(where + ": unparseable number \"" + s + "\"");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(where + ": unparseable count \"" + s + "\"");
  return v;
}

// Header columns matched by name: returns name -> position, and complains
// about every required column that is absent in one throw.
std::map<std::string, std::size_t> header_index(
    const std::vector<std::string>& header,
    const std::vector<std::string>& required, const std::string& what) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < header.size(); ++i) idx.emplace(header[i], i);
  std::string missing;
  for (const auto& name : required)
    if (!idx.count(name)) missing += (missing.empty() ? "" : ", ") + name;
  if (!missing.empty())
    throw MissingColumns(what + " is missing columns: " + missing);
  return idx;
}

// --- metric dispatch --------------------------------------------------------

const std::array<std::pair<const char*, ReportKind>, 5> kKinds = {{
    {"bias", ReportKind::Bias},
    {"relbias", ReportKind::RelBias},
    {"coverage", ReportKind::Coverage},
    {"mse", ReportKind::Mse},
    {"forest", ReportKind::Forest},
}};

double metric_value(const AggregateRow& r, ReportKind kind) {
  switch (kind) {
    case ReportKind::Bias: return r.bias;
    case ReportKind::RelBias: return r.relbias_pct;
    case ReportKind::Coverage: return r.coverage;
    case ReportKind::Mse: return r.mse;
    case ReportKind::Forest: break;
  }
  throw UnknownKind("forest is not an aggregate metric");
}

double metric_mcse_of(const AggregateRow& r, ReportKind kind) {
  switch (kind) {
    case ReportKind::Bias: return r.bias_mcse;
    case ReportKind::RelBias: return r.relbias_mcse;
    case ReportKind::Coverage: return r.coverage_mcse;
    case ReportKind::Mse: return r.mse_mcse;
    case ReportKind::Forest: break;
  }
  throw UnknownKind("forest is not an aggregate metric");
}

// Reference level a metric is judged against, or NaN when there is none.
double reference_level(ReportKind kind) {
  if (kind == ReportKind::Coverage) return 0.95;
  if (kind == ReportKind::Bias || kind == ReportKind::RelBias) return 0.0;
  return kNaN;
}

// --- SVG plumbing -----------------------------------------------------------

void addf(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  out += buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else if (c == '"')
      out += "&quot;";
    else
      out.push_back(c);
  }
  return out;
}

// Okabe-Ito palette: distinguishable under common color-vision deficiencies.
const char* color_for(std::size_t i) {
  static const std::array<const char*, 7> palette = {
      "#0072b2", "#d55e00", "#009e73", "#cc79a7",
      "#e69f00", "#56b4e9", "#999999"};
  return palette[i % palette.size()];
}

std::string tick_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// Affine value -> pixel map; the value span is never zero (padded upstream).
struct LinScale {
  double v0 = 0.0, v1 = 1.0, p0 = 0.0, p1 = 1.0;
  double operator()(double v) const {
    return p0 + (p1 - p0) * (v - v0) / (v1 - v0);
  }
};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return !(lo <= hi); }
  // Fallback for empty input, then symmetric padding, then a floor on the
  // span so the pixel map stays finite.
  void finalize(double pad_frac) {
    if (empty()) {
      lo = 0.0;
      hi = 1.0;
    }
    double pad = (hi - lo) * pad_frac;
    if (pad <= 0.0) pad = std::max(1e-3, std::fabs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  }
};

// The five canonical labels first, then anything else in appearance order.
std::vector<std::string> ordered_models(const std::vector<std::string>& seen) {
  std::vector<std::string> out;
  for (const auto& label : all_model_labels())
    if (std::find(seen.begin(), seen.end(), label) != seen.end())
      out.push_back(label);
  for (const auto& label : seen)
    if (std::find(out.begin(), out.end(), label) == out.end())
      out.push_back(label);
  return out;
}

std::size_t palette_slot(const std::string& model) {
  const auto& canon = all_model_labels();
  const auto at = std::find(canon.begin(), canon.end(), model);
  return static_cast<std::size_t>(at - canon.begin());  // size() for unknowns
}

// One faceted metric figure for a single scenario.
std::string metric_figure(const std::string& scenario_id,
                          const std::vector<AggregateRow>& rows,
                          ReportKind kind) {
  std::vector<std::string> seen;
  for (const auto& r : rows)
    if (std::find(seen.begin(), seen.end(), r.model) == seen.end())
      seen.push_back(r.model);
  const std::vector<std::string> models = ordered_models(seen);

  // Shared scales: cut-point extent and metric extent across all panels.
  Range xr, yr;
  for (const auto& r : rows) {
    xr.include(static_cast<double>(r.cutpoint));
    const double v = metric_value(r, kind);
    const double m = metric_mcse_of(r, kind);
    yr.include(v);
    if (std::isfinite(v) && std::isfinite(m)) {
      yr.include(v - m);
      yr.include(v + m);
    }
  }
  const double ref = reference_level(kind);
  if (std::isfinite(ref)) yr.include(ref);
  const std::size_t k_lo =
      xr.empty() ? 2 : static_cast<std::size_t>(std::lround(xr.lo));
  const std::size_t k_hi =
      xr.empty() ? 3 : static_cast<std::size_t>(std::lround(xr.hi));
  xr.finalize(0.08);
  yr.finalize(0.05);

  const int panel_w = 240, panel_h = 190, gap = 14, fig_margin = 12;
  const int title_h = 30;
  const int pad_l = 48, pad_r = 10, pad_t = 24, pad_b = 36;
  const int cols = static_cast<int>(std::min<std::size_t>(3, models.size()));
  const int nrows = static_cast<int>((models.size() + 2) / 3);
  const int W = 2 * fig_margin + cols * panel_w + (cols - 1) * gap;
  const int H = fig_margin + title_h + nrows * panel_h + (nrows - 1) * gap +
                fig_margin;

  std::string svg;
  addf(svg,
       "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
       "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"11\">\n",
       W, H, W, H);
  addf(svg, "<rect width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>\n", W, H);
  svg += "<text class=\"figure-title\" x=\"" + std::to_string(fig_margin) +
         "\" y=\"22\" font-size=\"14\">" +
         xml_escape(report_kind_name(kind) + " by cut-point — " + scenario_id) +
         "</text>\n";

  const std::size_t k_stride = 1 + (k_hi - k_lo) / 8;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const int col = static_cast<int>(mi) % 3;
    const int row = static_cast<int>(mi) / 3;
    const double px = fig_margin + col * (panel_w + gap);
    const double py = fig_margin + title_h + row * (panel_h + gap);
    const LinScale sx{xr.lo, xr.hi, px + pad_l, px + panel_w - pad_r};
    const LinScale sy{yr.lo, yr.hi, py + panel_h - pad_b, py + pad_t};

    addf(svg, "<g class=\"panel\" data-model=\"%s\">\n",
         xml_escape(models[mi]).c_str());
    addf(svg,
         "<rect x=\"%.2f\" y=\"%.2f\" width=\"%d\" height=\"%d\" "
         "fill=\"none\" stroke=\"#cccccc\"/>\n",
         px, py, panel_w, panel_h);
    addf(svg, "<text class=\"panel-title\" x=\"%.2f\" y=\"%.2f\">", px + pad_l,
         py + 15.0);
    svg += xml_escape(models[mi]) + "</text>\n";

    // Axes: five evenly spaced value ticks, cut-point ticks with a stride.
    for (int t = 0; t < 5; ++t) {
      const double v = yr.lo + (yr.hi - yr.lo) * t / 4.0;
      addf(svg,
           "<line class=\"tick\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" "
           "y2=\"%.2f\" stroke=\"#888888\"/>\n",
           px + pad_l - 4.0, sy(v), px + pad_l, sy(v));
      addf(svg,
           "<text class=\"tick-label\" x=\"%.2f\" y=\"%.2f\" "
           "text-anchor=\"end\" font-size=\"9\">%s</text>\n",
           px + pad_l - 6.0, sy(v) + 3.0, tick_label(v).c_str());
    }
    for (std::size_t k = k_lo; k <= k_hi; k += k_stride) {
      const double x = sx(static_cast<double>(k));
      const double y0 = py + panel_h - pad_b;
      addf(svg,
           "<line class=\"tick\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" "
           "y2=\"%.2f\" stroke=\"#888888\"/>\n",
           x, y0, x, y0 + 4.0);
      addf(svg,
           "<text class=\"tick-label\" x=\"%.2f\" y=\"%.2f\" "
           "text-anchor=\"middle\" font-size=\"9\">%zu</text>\n",
           x, y0 + 14.0, k);
    }
    addf(svg,
         "<text class=\"axis-label\" x=\"%.2f\" y=\"%.2f\" "
         "text-anchor=\"middle\" font-size=\"10\">cut-point k</text>\n",
         px + pad_l + (panel_w - pad_l - pad_r) / 2.0, py + panel_h - 8.0);

    if (std::isfinite(ref))
      addf(svg,
           "<line class=\"refline\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" "
           "y2=\"%.2f\" stroke=\"#555555\" stroke-dasharray=\"4 3\"/>\n",
           px + static_cast<double>(pad_l), sy(ref),
           px + panel_w - static_cast<double>(pad_r), sy(ref));

    const char* color = color_for(palette_slot(models[mi]));
    for (const auto& r : rows) {
      if (r.model != models[mi]) continue;
      const double v = metric_value(r, kind);
      if (!std::isfinite(v)) continue;
      const double m = metric_mcse_of(r, kind);
      const double x = sx(static_cast<double>(r.cutpoint));
      if (std::isfinite(m) && m > 0.0)
        addf(svg,
             "<line class=\"whisker\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" "
             "y2=\"%.2f\" stroke=\"%s\"/>\n",
             x, sy(v - m), x, sy(v + m), color);
      addf(svg,
           "<circle class=\"point\" cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" "
           "fill=\"%s\"/>\n",
           x, sy(v), color);
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

ReportKind report_kind_from(const std::string& name) {
  for (const auto& [label, kind] : kKinds)
    if (name == label) return kind;
  throw UnknownKind("unknown report kind \"" + name +
                    "\" (expected bias, relbias, coverage, mse, or forest)");
}

const std::string& report_kind_name(ReportKind kind) {
  static const std::array<std::string, 5> names = {"bias", "relbias",
                                                   "coverage", "mse", "forest"};
  return names[static_cast<std::size_t>(kind)];
}

std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open aggregate csv: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::vector<std::string> lines = split_lines(buf.str());
  if (lines.empty()) throw ParseError(path + ": empty aggregate csv");

  static const std::vector<std::string> required = {
      "scenario_id",  "model",         "cutpoint", "bias",
      "bias_mcse",    "relbias_pct",   "relbias_mcse", "coverage",
      "coverage_mcse", "mse",          "mse_mcse", "n_effective_reps"};
  const std::vector<std::string> header = split_fields(lines[0]);
  const auto idx = header_index(header, required, path + ": aggregate csv");

  std::vector<AggregateRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    const std::vector<std::string> f = split_fields(lines[i]);
    if (f.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(f.size()));
    auto field = [&](const char* name) -> const std::string& {
      return f[idx.at(name)];
    };
    AggregateRow r;
    r.scenario_id = field("scenario_id");
    r.model = field("model");
    r.cutpoint = static_cast<std::size_t>(
        parse_u64(field("cutpoint"), where + ": column cutpoint"));
    r.bias = parse_double(field("bias"), where + ": column bias");
    r.bias_mcse = parse_double(field("bias_mcse"), where + ": column bias_mcse");
    r.relbias_pct =
        parse_double(field("relbias_pct"), where + ": column relbias_pct");
    r.relbias_mcse =
        parse_double(field("relbias_mcse"), where + ": column relbias_mcse");
    r.coverage = parse_double(field("coverage"), where + ": column coverage");
    r.coverage_mcse =
        parse_double(field("coverage_mcse"), where + ": column coverage_mcse");
    r.mse = parse_double(field("mse"), where + ": column mse");
    r.mse_mcse = parse_double(field("mse_mcse"), where + ": column mse_mcse");
    r.n_effective_reps =
        parse_u64(field("n_effective_reps"), where + ": column n_effective_reps");
    r.bias_mcse_se = r.relbias_mcse_se = r.coverage_mcse_se = r.mse_mcse_se =
        kNaN;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string tidy_csv(const std::vector<AggregateRow>& rows, ReportKind kind) {
  if (kind == ReportKind::Forest)
    throw UnknownKind(
        "forest is not an aggregate metric; render it from case records");
  std::vector<TidyCell> cells;
  cells.reserve(rows.size());
  for (const auto& r : rows)
    cells.push_back(TidyCell{r.scenario_id, r.model, r.cutpoint,
                             report_kind_name(kind), metric_value(r, kind),
                             metric_mcse_of(r, kind)});
  return emit_tidy_csv(cells);
}

std::string emit_tidy_csv(const std::vector<TidyCell>& cells) {
  std::string out = "scenario_id,model,cutpoint,metric,value,mcse\n";
  for (const auto& c : cells) {
    out += c.scenario_id + "," + c.model + "," + std::to_string(c.cutpoint) +
           "," + c.metric + "," + fmt6(c.value) + "," + fmt6(c.mcse) + "\n";
  }
  return out;
}

std::vector<TidyCell> parse_tidy_csv(const std::string& text) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) throw ParseError("tidy csv: empty input");
  static const std::vector<std::string> required = {
      "scenario_id", "model", "cutpoint", "metric", "value", "mcse"};
  const std::vector<std::string> header = split_fields(lines[0]);
  const auto idx = header_index(header, required, "tidy csv");

  std::vector<TidyCell> cells;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = "tidy csv:" + std::to_string(i + 1);
    const std::vector<std::string> f = split_fields(lines[i]);
    if (f.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(f.size()));
    TidyCell c;
    c.scenario_id = f[idx.at("scenario_id")];
    c.model = f[idx.at("model")];
    c.cutpoint = static_cast<std::size_t>(
        parse_u64(f[idx.at("cutpoint")], where + ": column cutpoint"));
    c.metric = f[idx.at("metric")];
    c.value = parse_double(f[idx.at("value")], where + ": column value");
    c.mcse = parse_double(f[idx.at("mcse")], where + ": column mcse");
    cells.push_back(std::move(c));
  }
  return cells;
}

std::vector<std::pair<std::string, std::string>> metric_svgs(
    const std::vector<AggregateRow>& rows, ReportKind kind) {
  if (kind == ReportKind::Forest)
    throw UnknownKind(
        "forest is not an aggregate metric; render it from case records");
  std::vector<std::string> order;
  std::map<std::string, std::vector<AggregateRow>> by_scenario;
  for (const auto& r : rows) {
    if (!by_scenario.count(r.scenario_id)) order.push_back(r.scenario_id);
    by_scenario[r.scenario_id].push_back(r);
  }
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(order.size());
  for (const auto& id : order)
    out.emplace_back(id, metric_figure(id, by_scenario[id], kind));
  return out;
}

std::string forest_svg(const CaseAnalysisResult& result) {
  const std::size_t j = result.counts.j();
  const std::size_t n_cut = j >= 2 ? j - 1 : 0;
  const std::size_t n_models = result.fits.size();

  // Horizontal extent: every finite interval endpoint, plus the zero line.
  Range xr;
  xr.include(0.0);
  for (const auto& fit : result.fits) {
    if (fit.failed) continue;
    for (const auto& s : fit.summaries) {
      xr.include(s.ci_low);
      xr.include(s.ci_high);
      xr.include(s.median);
    }
  }
  xr.finalize(0.06);

  std::vector<std::string> footnotes;
  if (!result.prior_dominated.empty()) {
    std::string ks;
    for (const auto k : result.prior_dominated)
      ks += (ks.empty() ? "" : ", ") + std::to_string(k);
    footnotes.push_back(
        "* prior-dominated cut-point (a dichotomized arm-by-event cell is "
        "empty): k = " + ks);
  }
  if (!result.sparse_categories.empty()) {
    std::string cats;
    for (const auto c : result.sparse_categories)
      cats += (cats.empty() ? "" : ", ") + std::to_string(c);
    footnotes.push_back("sparse categories (arm count below threshold): " +
                        cats);
  }
  for (const auto& fit : result.fits)
    if (fit.failed) {
      const auto nl = fit.error.find('\n');
      footnotes.push_back(fit.model + " failed: " + fit.error.substr(0, nl));
    }

  const int W = 760;
  const int margin_l = 70, margin_r = 24;
  const int title_h = 46, legend_h = 22, axis_h = 42;
  const int track_h = 15;
  const int band_h = track_h * static_cast<int>(n_models) + 12;
  const int bands_top = title_h + legend_h;
  const int bands_h = band_h * static_cast<int>(n_cut);
  const int foot_h = footnotes.empty()
                         ? 0
                         : 8 + 16 * static_cast<int>(footnotes.size());
  const int H = bands_top + bands_h + axis_h + foot_h + 10;
  const LinScale sx{xr.lo, xr.hi, static_cast<double>(margin_l),
                    static_cast<double>(W - margin_r)};

  std::string svg;
  addf(svg,
       "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
       "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"11\">\n",
       W, H, W, H);
  addf(svg, "<rect width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>\n", W, H);
  svg += "<text class=\"figure-title\" x=\"12\" y=\"20\" font-size=\"14\">" +
         xml_escape(result.endpoint) + "</text>\n";
  addf(svg,
       "<text class=\"figure-subtitle\" x=\"12\" y=\"38\" font-size=\"11\" "
       "fill=\"#444444\">%zu complete cases, %zu dropped; posterior median "
       "and 95%% credible interval, log odds of P(Y &gt;= k)</text>\n",
       result.n_complete, result.n_dropped);

  // Legend: one swatch per fitted model, in fit order.
  double lx = 12.0;
  for (std::size_t mi = 0; mi < n_models; ++mi) {
    const auto& fit = result.fits[mi];
    const char* color = color_for(palette_slot(fit.model));
    addf(svg,
         "<rect class=\"legend-swatch\" x=\"%.2f\" y=\"%.2f\" width=\"10\" "
         "height=\"10\" fill=\"%s\"/>\n",
         lx, title_h + 4.0, color);
    const std::string label =
        fit.model + (fit.failed ? " (failed)" : "");
    addf(svg, "<text class=\"legend-label\" x=\"%.2f\" y=\"%.2f\">", lx + 14.0,
         title_h + 13.0);
    svg += xml_escape(label) + "</text>\n";
    lx += 24.0 + 6.5 * static_cast<double>(label.size());
  }

  // Zero reference line across the whole band region.
  addf(svg,
       "<line class=\"zero\" x1=\"%.2f\" y1=\"%d\" x2=\"%.2f\" y2=\"%d\" "
       "stroke=\"#555555\" stroke-dasharray=\"4 3\"/>\n",
       sx(0.0), bands_top, sx(0.0), bands_top + bands_h);

  for (std::size_t ci = 0; ci < n_cut; ++ci) {
    const std::size_t k = ci + 2;
    const double band_y = bands_top + static_cast<double>(ci) * band_h;
    if (ci > 0)
      addf(svg,
           "<line class=\"band-sep\" x1=\"%d\" y1=\"%.2f\" x2=\"%d\" "
           "y2=\"%.2f\" stroke=\"#eeeeee\"/>\n",
           margin_l, band_y, W - margin_r, band_y);
    addf(svg,
         "<text class=\"row-label\" x=\"%.2f\" y=\"%.2f\" "
         "text-anchor=\"end\">k = %zu</text>\n",
         margin_l - 10.0, band_y + band_h / 2.0 + 4.0, k);

    for (std::size_t mi = 0; mi < n_models; ++mi) {
      const auto& fit = result.fits[mi];
      if (fit.failed) continue;
      // Fits carry one summary per cut-point 2..j, in order.
      if (ci >= fit.summaries.size()) continue;
      const PosteriorSummary& s = fit.summaries[ci];
      if (!std::isfinite(s.median)) continue;
      const char* color = color_for(palette_slot(fit.model));
      const double y =
          band_y + 6.0 + static_cast<double>(mi) * track_h + track_h / 2.0;
      if (std::isfinite(s.ci_low) && std::isfinite(s.ci_high))
        addf(svg,
             "<line class=\"ci\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" "
             "y2=\"%.2f\" stroke=\"%s\" stroke-width=\"1.5\"/>\n",
             sx(s.ci_low), y, sx(s.ci_high), y, color);
      addf(svg,
           "<circle class=\"median\" cx=\"%.2f\" cy=\"%.2f\" r=\"3\" "
           "fill=\"%s\"/>\n",
           sx(s.median), y, color);
      const bool dominated =
          fit.model == "sep-logistic" &&
          std::find(result.prior_dominated.begin(),
                    result.prior_dominated.end(),
                    k) != result.prior_dominated.end();
      if (dominated)
        addf(svg,
             "<text class=\"prior-dominated-marker\" x=\"%.2f\" y=\"%.2f\" "
             "font-size=\"12\">*</text>\n",
             sx(std::isfinite(s.ci_high) ? s.ci_high : s.median) + 5.0,
             y + 4.0);
    }
  }

  // Horizontal axis under the bands: six ticks across the padded range.
  const int axis_y = bands_top + bands_h + 12;
  addf(svg,
       "<line class=\"axis\" x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
       "stroke=\"#333333\"/>\n",
       margin_l, axis_y, W - margin_r, axis_y);
  for (int t = 0; t < 6; ++t) {
    const double v = xr.lo + (xr.hi - xr.lo) * t / 5.0;
    addf(svg,
         "<line class=\"tick\" x1=\"%.2f\" y1=\"%d\" x2=\"%.2f\" y2=\"%d\" "
         "stroke=\"#333333\"/>\n",
         sx(v), axis_y, sx(v), axis_y + 4);
    addf(svg,
         "<text class=\"tick-label\" x=\"%.2f\" y=\"%d\" "
         "text-anchor=\"middle\" font-size=\"9\">%s</text>\n",
         sx(v), axis_y + 15, tick_label(v).c_str());
  }
  addf(svg,
       "<text class=\"axis-label\" x=\"%.2f\" y=\"%d\" "
       "text-anchor=\"middle\" font-size=\"10\">cut-point log odds ratio "
       "(treatment vs control)</text>\n",
       margin_l + (W - margin_l - margin_r) / 2.0, axis_y + 30);

  for (std::size_t fi = 0; fi < footnotes.size(); ++fi) {
    addf(svg,
         "<text class=\"footnote\" x=\"12\" y=\"%d\" font-size=\"10\" "
         "fill=\"#444444\">",
         axis_y + axis_h + static_cast<int>(fi) * 16);
    svg += xml_escape(footnotes[fi]) + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace ordsim
