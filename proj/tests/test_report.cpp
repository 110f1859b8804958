#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "posbench/csv.hpp"
#include "posbench/report.hpp"

using namespace posbench;

namespace {

// Aggregates with the given per-level means (single run each, so stdev 0).
AggregateSummary agg(const std::string& level, const std::string& target, std::optional<double> p95, double tps,
                     double err) {
  MetricsSummary s;
  s.scenario = level;
  s.target_label = target;
  s.platform = target;
  s.p50_ms = p95 ? std::optional<double>(*p95 * 0.8) : std::nullopt;
  s.p95_ms = p95;
  s.p99_ms = p95 ? std::optional<double>(*p95 * 1.1) : std::nullopt;
  s.tps = tps;
  s.error_rate_pct = err;
  return aggregate(std::span(&s, 1));
}

CostEstimate cost(const std::string& level, const std::string& target, const char* total) {
  CostEstimate c;
  c.platform_label = target;
  c.scenario = level;
  c.total_usd = CostAmount::parse(total);
  return c;
}

// Two targets, four levels, values as tabulated for the two reference platforms.
ReportData reference_data() {
  ReportData d;
  d.targets = {"gcp", "azure"};
  const char* levels[] = {"stress", "baseline", "peak", "typical"};  // deliberately shuffled
  std::map<std::string, std::array<double, 6>> v{{"baseline", {183.69, 238.42, 7.62, 4.19, 0, 0.4}},
                                                 {"typical", {181.37, 391.9, 18.98, 12.65, 0, 0.26}},
                                                 {"peak", {232.59, 1010.55, 25.24, 16.94, 0.31, 1.07}},
                                                 {"stress", {209.51, 2617.2, 70.84, 20.14, 0.11, 2}}};
  std::map<std::string, std::pair<const char*, const char*>> c{{"baseline", {"0.000057", "0.00016"}},
                                                              {"typical", {"0.00143", "0.00049"}},
                                                              {"peak", {"0.0019", "0.00065"}},
                                                              {"stress", {"0.00534", "0.00078"}}};
  for (const char* l : levels) {
    const auto& x = v[l];
    d.aggregates.push_back(agg(l, "azure", x[1], x[3], x[5]));
    d.aggregates.push_back(agg(l, "gcp", x[0], x[2], x[4]));
    d.costs.push_back(cost(l, "gcp", c[l].first));
    d.costs.push_back(cost(l, "azure", c[l].second));
  }
  return d;
}

std::vector<std::vector<std::string>> rows(const std::string& csv_text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv_text);
  std::string line;
  while (std::getline(in, line)) out.push_back(csv::split(line));
  return out;
}

}  // namespace

TEST(Tables, ThroughputShapeAndCanonicalOrder) {
  const auto t = build_tables(reference_data());
  const auto r = rows(t.files.at("throughput.csv"));
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r[0], (std::vector<std::string>{"load_level", "gcp", "azure"}));
  EXPECT_EQ(r[1], (std::vector<std::string>{"baseline", "7.62", "4.19"}));
  EXPECT_EQ(r[4], (std::vector<std::string>{"stress", "70.84", "20.14"}));
  EXPECT_EQ(r[2][0], "typical");
  EXPECT_EQ(r[3][0], "peak");
}

TEST(Tables, AllFiveWithAggregateAndCostSchemas) {
  const auto t = build_tables(reference_data());
  for (const char* f : {"response_times.csv", "p95_scaling.csv", "throughput.csv", "costs.csv", "error_rates.csv"})
    EXPECT_TRUE(t.files.count(f)) << f;
  EXPECT_EQ(rows(t.files.at("costs.csv"))[0][0], "platform");
  EXPECT_EQ(rows(t.files.at("costs.csv"))[1],
            (std::vector<std::string>{"gcp", "baseline", "0", "0.000000000", "0.00", "0.00", "0.000057"}));
  const auto rt = rows(t.files.at("response_times.csv"));
  EXPECT_EQ(rt[0][3], "p50_ms_mean");
  EXPECT_EQ(rt[0][4], "p50_ms_stdev");
  EXPECT_EQ(rt[1][0], "baseline");
  EXPECT_EQ(rt[1][1], "gcp");
  EXPECT_EQ(rt[1][5], "183.69");
  EXPECT_EQ(rt[1][6], "0.00");  // single run
  EXPECT_EQ(rows(t.files.at("p95_scaling.csv"))[4], (std::vector<std::string>{"stress", "209.51", "2617.20"}));
}

TEST(Tables, MissingValuesAreGapsWithFootnote) {
  ReportData d;
  d.aggregates.push_back(agg("stress", "a", std::nullopt, 0.0, 100.0));
  d.aggregates.push_back(agg("stress", "b", 200.0, 5.0, 0.0));
  const auto t = build_tables(d);
  const auto r = rows(t.files.at("p95_scaling.csv"));
  EXPECT_EQ(r[1], (std::vector<std::string>{"stress", "", "200.00"}));
  EXPECT_EQ(r.back()[0], "note");
  // Throughput is defined even when every request failed.
  EXPECT_EQ(rows(t.files.at("throughput.csv")).back()[0], "stress");
  const auto svg = render_svg(level_series(FigureKind::P95, d));
  EXPECT_NE(svg.find("class=\"missing\""), std::string::npos);
  EXPECT_EQ(parse_svg_values(svg).size(), 1u);
}

TEST(Figures, EmbedTableValuesVerbatim) {
  const auto d = reference_data();
  const auto t = build_tables(d);
  const std::map<FigureKind, std::string> table{{FigureKind::P95, "p95_scaling.csv"},
                                                {FigureKind::Tps, "throughput.csv"},
                                                {FigureKind::Error, "error_rates.csv"}};
  for (auto [kind, file] : table) {
    const auto r = rows(t.files.at(file));
    const auto values = parse_svg_values(render_svg(level_series(kind, d)));
    ASSERT_EQ(values.size(), 8u);
    for (const auto& v : values) {
      const auto row = std::find_if(r.begin(), r.end(), [&](const auto& x) { return x[0] == v.level; });
      ASSERT_NE(row, r.end());
      const auto col = std::find(r[0].begin(), r[0].end(), v.target) - r[0].begin();
      EXPECT_EQ((*row)[static_cast<std::size_t>(col)], v.text);
    }
  }
  const auto c = rows(t.files.at("costs.csv"));
  for (const auto& v : parse_svg_values(render_svg(level_series(FigureKind::Cost, d)))) {
    const auto row = std::find_if(c.begin(), c.end(), [&](const auto& x) { return x[0] == v.target && x[1] == v.level; });
    ASSERT_NE(row, c.end());
    EXPECT_EQ((*row)[6], v.text);
  }
}

TEST(Figures, ContainsReferenceThroughputText) {
  const auto svg = render_svg(level_series(FigureKind::Tps, reference_data()));
  EXPECT_NE(svg.find(">70.84<"), std::string::npos);
  EXPECT_NE(svg.find(">20.14<"), std::string::npos);
  EXPECT_NE(svg.find("Throughput (TPS)"), std::string::npos);
  // Levels appear left to right in load order.
  EXPECT_LT(svg.find(">baseline<"), svg.find(">typical<"));
  EXPECT_LT(svg.find(">typical<"), svg.find(">peak<"));
  EXPECT_LT(svg.find(">peak<"), svg.find(">stress<"));
}

TEST(Figures, CostAxisUsesScientificTicks) {
  const auto svg = render_svg(level_series(FigureKind::Cost, reference_data()));
  EXPECT_NE(svg.find("e-03</text>"), std::string::npos);
  EXPECT_NE(svg.find("Estimated cost (USD)"), std::string::npos);
}

TEST(Figures, AllZeroErrorRatesStillRenderAxes) {
  ReportData d;
  for (const char* l : {"baseline", "stress"}) d.aggregates.push_back(agg(l, "a", 10.0, 1.0, 0.0));
  const auto svg = render_svg(level_series(FigureKind::Error, d));
  EXPECT_NE(svg.find("id=\"axes\""), std::string::npos);
  EXPECT_NE(svg.find("height=\"0.00\""), std::string::npos);
}

TEST(Figures, DeterministicAndKindChecked) {
  const auto d = reference_data();
  EXPECT_EQ(render_svg(level_series(FigureKind::P95, d)), render_svg(level_series(FigureKind::P95, d)));
  EXPECT_THROW(emit_figure("pie", d, "/tmp/x.svg"), ReportError);
  EXPECT_THROW(emit_figure(FigureKind::P95, ReportData{}, "/tmp/x.svg"), ReportError);
}

TEST(Highlights, BaselineLatencyAndCostDeltas) {
  const auto d = reference_data();
  const auto p95 = compare_levels(level_series(FigureKind::P95, d));
  ASSERT_EQ(p95.size(), 4u);
  EXPECT_EQ(p95[0].level, "baseline");
  EXPECT_EQ(p95[0].better, "gcp");
  EXPECT_EQ(format_relative(p95[0].improvement_pct), "23.0");
  const auto deltas = cost_deltas(d.costs, "gcp", "azure");
  ASSERT_EQ(deltas.size(), 4u);
  EXPECT_EQ(format_relative(deltas[1].pct), "65.7");
  EXPECT_EQ(format_relative(deltas[2].pct), "65.8");
  EXPECT_EQ(format_relative(deltas[3].pct), "85.4");
  EXPECT_EQ(format_relative(*mean_delta(deltas, {"baseline"})), "72.3");
  const auto text = summary_text(d);
  EXPECT_NE(text.find("baseline: gcp faster by 23.0%"), std::string::npos);
  EXPECT_NE(text.find("stress: azure cheaper by 85.4%"), std::string::npos);
  EXPECT_NE(text.find("mean over levels above baseline: 72.3%"), std::string::npos);
}

TEST(Highlights, SingleTargetOmitsComparisons) {
  ReportData d;
  d.aggregates.push_back(agg("baseline", "solo", 100.0, 5.0, 0.0));
  EXPECT_NE(summary_text(d).find("comparisons omitted"), std::string::npos);
  EXPECT_EQ(rows(build_tables(d).files.at("throughput.csv"))[0], (std::vector<std::string>{"load_level", "solo"}));
}

TEST(Emit, WritesFilesUnderTablesDir) {
  const auto dir = std::filesystem::temp_directory_path() / "posbench_report_emit";
  std::filesystem::remove_all(dir);
  const auto files = emit_tables(reference_data(), dir);
  EXPECT_EQ(files.size(), 5u);
  for (const auto& f : files) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::filesystem::remove_all(dir);
}
