#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "costs.hpp"
#include "digest.hpp"
#include "metrics.hpp"

namespace posbench {

class ReportError : public std::runtime_error {
 public:
  enum class Kind { UnknownKind, IoFailure, EmptyInput };
  ReportError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline const std::vector<std::string>& canonical_levels() {
  static const std::vector<std::string> levels{"baseline", "typical", "peak", "stress"};
  return levels;
}

// Canonical load levels first, in load order, then any others by name.
inline std::vector<std::string> order_levels(const std::set<std::string>& present) {
  std::vector<std::string> out;
  for (const auto& l : canonical_levels())
    if (present.count(l)) out.push_back(l);
  for (const auto& l : present)
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  return out;
}

struct ReportData {
  std::vector<AggregateSummary> aggregates;
  std::vector<CostEstimate> costs;  // one per (target, scenario); platform_label holds the target label
  std::vector<std::string> targets;  // column order
};

enum class FigureKind { P95, Tps, Cost, Error };

inline std::optional<FigureKind> parse_figure_kind(std::string_view s) {
  if (s == "p95") return FigureKind::P95;
  if (s == "tps") return FigureKind::Tps;
  if (s == "cost") return FigureKind::Cost;
  if (s == "error") return FigureKind::Error;
  return std::nullopt;
}

// One metric laid out by load level × target, as the formatted strings that
// both the CSV tables and the SVG figures print.
struct LevelSeries {
  FigureKind kind = FigureKind::P95;
  std::string title;
  std::string axis_label;
  std::vector<std::string> levels;
  std::vector<std::string> targets;
  std::vector<std::vector<std::optional<std::string>>> mean;   // [level][target]
  std::vector<std::vector<std::optional<std::string>>> stdev;  // [level][target]; cost has none

  bool has_missing() const {
    for (std::size_t i = 0; i < levels.size(); ++i)
      for (std::size_t j = 0; j < targets.size(); ++j)
        if (!mean[i][j]) return true;
    return false;
  }
};

namespace detail {

inline std::vector<std::string> report_targets(const ReportData& d) {
  if (!d.targets.empty()) return d.targets;
  std::vector<std::string> t;
  for (const auto& a : d.aggregates)
    if (std::find(t.begin(), t.end(), a.target_label) == t.end()) t.push_back(a.target_label);
  for (const auto& c : d.costs)
    if (std::find(t.begin(), t.end(), c.platform_label) == t.end()) t.push_back(c.platform_label);
  return t;
}

inline std::vector<std::string> report_levels(const ReportData& d) {
  std::set<std::string> s;
  for (const auto& a : d.aggregates) s.insert(a.scenario);
  for (const auto& c : d.costs) s.insert(c.scenario);
  return order_levels(s);
}

}  // namespace detail

inline std::string usd_text(const CostAmount& v) { return v.rescale<Money::scale>().to_trimmed_string(2); }

inline LevelSeries level_series(FigureKind kind, const ReportData& d) {
  LevelSeries s;
  s.kind = kind;
  s.levels = detail::report_levels(d);
  s.targets = detail::report_targets(d);
  s.mean.assign(s.levels.size(), std::vector<std::optional<std::string>>(s.targets.size()));
  s.stdev = s.mean;
  auto li = [&](const std::string& l) {
    return static_cast<std::size_t>(std::find(s.levels.begin(), s.levels.end(), l) - s.levels.begin());
  };
  auto ti = [&](const std::string& t) {
    return static_cast<std::size_t>(std::find(s.targets.begin(), s.targets.end(), t) - s.targets.begin());
  };
  switch (kind) {
    case FigureKind::P95: s.title = "p95 response time by load level"; s.axis_label = "p95 latency (ms)"; break;
    case FigureKind::Tps: s.title = "Throughput by load level"; s.axis_label = "Throughput (TPS)"; break;
    case FigureKind::Cost: s.title = "Estimated cost by load level"; s.axis_label = "Estimated cost (USD)"; break;
    case FigureKind::Error: s.title = "Error rate by load level"; s.axis_label = "Error rate (%)"; break;
  }
  if (kind == FigureKind::Cost) {
    for (const auto& c : d.costs) {
      const auto i = li(c.scenario), j = ti(c.platform_label);
      if (i < s.levels.size() && j < s.targets.size()) s.mean[i][j] = usd_text(c.total_usd);
    }
    return s;
  }
  for (const auto& a : d.aggregates) {
    const auto i = li(a.scenario), j = ti(a.target_label);
    if (i >= s.levels.size() || j >= s.targets.size()) continue;
    const Stat& st = kind == FigureKind::P95 ? a.p95_ms : kind == FigureKind::Tps ? a.tps : a.error_rate_pct;
    if (st.mean) {
      s.mean[i][j] = kind == FigureKind::P95 ? format_ms(*st.mean) : format_rate(*st.mean);
      s.stdev[i][j] = kind == FigureKind::P95 ? format_ms(*st.stdev) : format_rate(*st.stdev);
    }
  }
  return s;
}

inline constexpr const char* kMissingNote = "note,empty cells: metric undefined (no successful requests in the window)";

// Wide table: one row per level, one value column (the mean) per target.
inline std::string series_csv(const LevelSeries& s) {
  std::ostringstream os;
  os << "load_level";
  for (const auto& t : s.targets) os << ',' << t;
  os << '\n';
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    os << s.levels[i];
    for (std::size_t j = 0; j < s.targets.size(); ++j) os << ',' << s.mean[i][j].value_or("");
    os << '\n';
  }
  if (s.has_missing()) os << kMissingNote << '\n';
  return os.str();
}

inline std::vector<const AggregateSummary*> ordered_aggregates(const ReportData& d) {
  const auto levels = detail::report_levels(d);
  const auto targets = detail::report_targets(d);
  std::vector<const AggregateSummary*> out;
  for (const auto& l : levels)
    for (const auto& t : targets)
      for (const auto& a : d.aggregates)
        if (a.scenario == l && a.target_label == t) out.push_back(&a);
  return out;
}

inline constexpr const char* kAggregateCsvHeader =
    "scenario,target_label,runs,p50_ms_mean,p50_ms_stdev,p95_ms_mean,p95_ms_stdev,p99_ms_mean,p99_ms_stdev,"
    "tps_mean,tps_stdev,error_rate_pct_mean,error_rate_pct_stdev,total_calls_mean,total_calls_stdev,"
    "egress_bytes_mean,egress_bytes_stdev";

// Long form, one row per (scenario, target): mean and stdev of every metric.
inline std::string response_times_csv(const ReportData& d) {
  std::ostringstream os;
  os << kAggregateCsvHeader << '\n';
  bool missing = false;
  auto cell = [&](const std::optional<double>& v) {
    if (!v) missing = true;
    return v ? format_fixed(*v, 2) : std::string();
  };
  for (const auto* a : ordered_aggregates(d)) {
    os << a->scenario << ',' << a->target_label << ',' << a->runs.size();
    for (const Stat* st : {&a->p50_ms, &a->p95_ms, &a->p99_ms, &a->tps, &a->error_rate_pct, &a->total_calls,
                           &a->egress_bytes}) {
      const auto m = cell(st->mean);
      os << ',' << m << ',' << (st->stdev ? format_fixed(*st->stdev, 2) : std::string());
    }
    os << '\n';
  }
  if (missing) os << kMissingNote << '\n';
  return os.str();
}

inline std::string costs_csv(const ReportData& d) {
  const auto levels = detail::report_levels(d);
  const auto targets = detail::report_targets(d);
  std::ostringstream os;
  os << kCostCsvHeader << '\n';
  for (const auto& l : levels)
    for (const auto& t : targets)
      for (const auto& c : d.costs)
        if (c.scenario == l && c.platform_label == t)
          os << c.platform_label << ',' << c.scenario << ',' << c.api_calls << ',' << format_gb(c.egress_bytes) << ','
             << usd_text(c.call_cost_usd) << ',' << usd_text(c.egress_cost_usd) << ',' << usd_text(c.total_usd)
             << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline double nice_ceiling(double v) {
  if (!(v > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(v)));
  for (double step : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (step * mag >= v) return step * mag;
  return 10.0 * mag;
}

inline std::string tick_label(double v, bool scientific) {
  char buf[32];
  if (scientific) {
    std::snprintf(buf, sizeof buf, "%.1e", v);
  } else {
    std::snprintf(buf, sizeof buf, "%g", v);
  }
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// Grouped bar chart, levels on x, one series per target. Every plotted value
// is embedded verbatim in a <text class="value"> element.
inline std::string render_svg(const LevelSeries& s) {
  constexpr double width = 760, height = 440, left = 90, right = 150, top = 50, bottom = 70;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  static const char* palette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948"};
  const bool scientific = s.kind == FigureKind::Cost;

  double max_v = 0.0;
  for (const auto& row : s.mean)
    for (const auto& v : row)
      if (v) max_v = std::max(max_v, std::stod(*v));
  const double y_max = detail::nice_ceiling(max_v);
  auto y_of = [&](double v) { return top + plot_h - plot_h * v / y_max; };
  auto num = [](double v) { return detail::fixed(v, 2); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text id=\"title\" x=\"" << num(width / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
     << detail::xml_escape(s.title) << "</text>\n";
  // Axes and ticks.
  os << "<g id=\"axes\" stroke=\"black\">\n";
  os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
     << num(top + plot_h) << "\"/>\n";
  os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + plot_h) << "\" x2=\"" << num(left + plot_w)
     << "\" y2=\"" << num(top + plot_h) << "\"/>\n";
  os << "</g>\n<g id=\"y-ticks\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = y_max * k / 5.0;
    const double y = y_of(v);
    os << "<line x1=\"" << num(left - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left + plot_w) << "\" y2=\""
       << num(y) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text class=\"tick\" x=\"" << num(left - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
       << detail::tick_label(v, scientific) << "</text>\n";
  }
  os << "</g>\n";
  os << "<text id=\"y-label\" transform=\"translate(20," << num(top + plot_h / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << detail::xml_escape(s.axis_label) << "</text>\n";
  os << "<text id=\"x-label\" x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(height - 15)
     << "\" text-anchor=\"middle\">Load level</text>\n";

  const double group_w = s.levels.empty() ? plot_w : plot_w / static_cast<double>(s.levels.size());
  const double bar_w = s.targets.empty() ? 0 : group_w * 0.7 / static_cast<double>(s.targets.size());
  os << "<g id=\"bars\">\n";
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    const double gx = left + group_w * static_cast<double>(i) + group_w * 0.15;
    os << "<text class=\"level\" x=\"" << num(left + group_w * (static_cast<double>(i) + 0.5)) << "\" y=\""
       << num(top + plot_h + 20) << "\" text-anchor=\"middle\">" << detail::xml_escape(s.levels[i]) << "</text>\n";
    for (std::size_t j = 0; j < s.targets.size(); ++j) {
      const double x = gx + bar_w * static_cast<double>(j);
      const auto& cell = s.mean[i][j];
      const std::string attrs = "data-level=\"" + detail::xml_escape(s.levels[i]) + "\" data-target=\"" +
                                detail::xml_escape(s.targets[j]) + "\"";
      if (!cell) {
        os << "<text class=\"missing\" " << attrs << " x=\"" << num(x + bar_w / 2) << "\" y=\""
           << num(top + plot_h - 4) << "\" text-anchor=\"middle\">n/a</text>\n";
        continue;
      }
      const double v = std::stod(*cell);
      const double y = y_of(v);
      os << "<rect class=\"bar\" " << attrs << " x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
         << num(bar_w) << "\" height=\"" << num(top + plot_h - y) << "\" fill=\"" << palette[j % 6] << "\"/>\n";
      os << "<text class=\"value\" " << attrs << " x=\"" << num(x + bar_w / 2) << "\" y=\"" << num(y - 4)
         << "\" text-anchor=\"middle\" font-size=\"10\">" << *cell << "</text>\n";
    }
  }
  os << "</g>\n<g id=\"legend\">\n";
  for (std::size_t j = 0; j < s.targets.size(); ++j) {
    const double y = top + 10 + 20 * static_cast<double>(j);
    os << "<rect x=\"" << num(width - right + 20) << "\" y=\"" << num(y - 10) << "\" width=\"12\" height=\"12\" fill=\""
       << palette[j % 6] << "\"/>\n";
    os << "<text x=\"" << num(width - right + 38) << "\" y=\"" << num(y) << "\">" << detail::xml_escape(s.targets[j])
       << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

struct SvgValue {
  std::string level;
  std::string target;
  std::string text;
};

// Reads back every embedded data value of a figure produced by render_svg.
inline std::vector<SvgValue> parse_svg_values(const std::string& svg) {
  static const std::regex re(R"re(<text class="value" data-level="([^"]*)" data-target="([^"]*)"[^>]*>([^<]*)</text>)re");
  std::vector<SvgValue> out;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back({(*it)[1].str(), (*it)[2].str(), (*it)[3].str()});
  return out;
}

inline const char* figure_file(FigureKind k) {
  switch (k) {
    case FigureKind::P95: return "p95_by_load.svg";
    case FigureKind::Tps: return "tps_by_load.svg";
    case FigureKind::Cost: return "cost_by_load.svg";
    case FigureKind::Error: return "error_by_load.svg";
  }
  return "figure.svg";
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReportError(ReportError::Kind::IoFailure, "cannot write " + path.string());
  out << content;
  if (!out) throw ReportError(ReportError::Kind::IoFailure, "write failed for " + path.string());
}

inline std::string emit_figure(FigureKind kind, const ReportData& d, const std::filesystem::path& out_path) {
  if (detail::report_levels(d).empty())
    throw ReportError(ReportError::Kind::EmptyInput, "figure needs at least one scenario");
  auto svg = render_svg(level_series(kind, d));
  write_text(out_path, svg);
  return svg;
}

inline std::string emit_figure(std::string_view kind, const ReportData& d, const std::filesystem::path& out_path) {
  auto k = parse_figure_kind(kind);
  if (!k) throw ReportError(ReportError::Kind::UnknownKind, "unknown figure kind '" + std::string(kind) + "'");
  return emit_figure(*k, d, out_path);
}

struct TableSet {
  std::map<std::string, std::string> files;  // name -> CSV content
};

inline TableSet build_tables(const ReportData& d) {
  TableSet t;
  t.files["response_times.csv"] = response_times_csv(d);
  t.files["p95_scaling.csv"] = series_csv(level_series(FigureKind::P95, d));
  t.files["throughput.csv"] = series_csv(level_series(FigureKind::Tps, d));
  t.files["costs.csv"] = costs_csv(d);
  t.files["error_rates.csv"] = series_csv(level_series(FigureKind::Error, d));
  return t;
}

// Writes tables/*.csv; returns the relative paths written.
inline std::vector<std::string> emit_tables(const ReportData& d, const std::filesystem::path& out_dir) {
  if (d.aggregates.empty() && d.costs.empty())
    throw ReportError(ReportError::Kind::EmptyInput, "no aggregates to tabulate");
  std::vector<std::string> written;
  for (const auto& [name, content] : build_tables(d).files) {
    write_text(out_dir / "tables" / name, content);
    written.push_back("tables/" + name);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Highlights

struct LevelComparison {
  std::string level;
  std::string better;  // lower p95 / lower cost
  std::string worse;
  double better_value = 0.0;
  double worse_value = 0.0;
  double improvement_pct = 0.0;  // relative_difference(worse, better)
};

// Pairwise comparison of the first two targets at each level where both
// have a value. `lower_is_better` metric per (level, target).
inline std::vector<LevelComparison> compare_levels(const LevelSeries& s) {
  std::vector<LevelComparison> out;
  if (s.targets.size() < 2) return out;
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    const auto& a = s.mean[i][0];
    const auto& b = s.mean[i][1];
    if (!a || !b) continue;
    const double va = std::stod(*a), vb = std::stod(*b);
    LevelComparison c;
    c.level = s.levels[i];
    const bool a_better = va <= vb;
    c.better = a_better ? s.targets[0] : s.targets[1];
    c.worse = a_better ? s.targets[1] : s.targets[0];
    c.better_value = a_better ? va : vb;
    c.worse_value = a_better ? vb : va;
    c.improvement_pct = c.worse_value == 0.0 ? 0.0 : relative_difference(c.worse_value, c.better_value);
    out.push_back(c);
  }
  return out;
}

struct CostDelta {
  std::string level;
  double pct = 0.0;  // relative_difference(reference cost, comparison cost)
};

// Per-level cost deltas of `comparison` against `reference`.
inline std::vector<CostDelta> cost_deltas(const std::vector<CostEstimate>& costs, const std::string& reference,
                                          const std::string& comparison) {
  std::set<std::string> levels;
  for (const auto& c : costs) levels.insert(c.scenario);
  std::vector<CostDelta> out;
  for (const auto& l : order_levels(levels)) {
    const CostEstimate *ref = nullptr, *cmp = nullptr;
    for (const auto& c : costs) {
      if (c.scenario != l) continue;
      if (c.platform_label == reference) ref = &c;
      if (c.platform_label == comparison) cmp = &c;
    }
    if (!ref || !cmp || ref->total_usd.is_zero()) continue;
    out.push_back({l, relative_difference(ref->total_usd.to_double(), cmp->total_usd.to_double())});
  }
  return out;
}

// Mean of the per-level deltas, skipping `excluded` levels.
inline std::optional<double> mean_delta(const std::vector<CostDelta>& deltas, const std::set<std::string>& excluded) {
  double sum = 0.0;
  int n = 0;
  for (const auto& d : deltas)
    if (!excluded.count(d.level)) {
      sum += d.pct;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / n;
}

inline std::string summary_text(const ReportData& d) {
  std::ostringstream os;
  const auto targets = detail::report_targets(d);
  os << "targets: ";
  for (std::size_t i = 0; i < targets.size(); ++i) os << (i ? ", " : "") << targets[i];
  os << '\n';
  if (targets.size() < 2) {
    os << "single target: comparisons omitted\n";
    return os.str();
  }
  os << "\np95 latency (lower is faster)\n";
  for (const auto& c : compare_levels(level_series(FigureKind::P95, d)))
    os << "  " << c.level << ": " << c.better << " faster by " << format_relative(c.improvement_pct) << "% ("
       << format_ms(c.better_value) << " vs " << format_ms(c.worse_value) << " ms)\n";
  os << "\nestimated cost per run (lower is cheaper)\n";
  for (const auto& c : compare_levels(level_series(FigureKind::Cost, d)))
    os << "  " << c.level << ": " << c.better << " cheaper by " << format_relative(c.improvement_pct) << "%\n";
  const auto deltas = cost_deltas(d.costs, targets[0], targets[1]);
  if (!deltas.empty()) {
    os << "\ncost delta of " << targets[1] << " relative to " << targets[0]
       << " (100 x (" << targets[0] << " - " << targets[1] << ") / " << targets[0] << ")\n";
    for (const auto& x : deltas) os << "  " << x.level << ": " << format_relative(x.pct) << "%\n";
    if (auto m = mean_delta(deltas, {})) os << "  mean over all levels: " << format_relative(*m) << "%\n";
    if (auto m = mean_delta(deltas, {"baseline"}))
      os << "  mean over levels above baseline: " << format_relative(*m) << "%\n";
    os << "  note: means are unweighted averages of per-level deltas, not ratios of summed costs\n";
  }
  return os.str();
}

}  // namespace posbench
