#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <optional>
#include <ostream>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "engine.hpp"

namespace posbench {

class MetricsError : public std::runtime_error {
 public:
  enum class Kind { EmptySample, InvalidPercentile, NoSteadyStateData, MixedConfigurations, ZeroBaseline };
  MetricsError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// 1-based nearest rank ceil(p/100 * n), clamped to [1, n].
inline std::size_t nearest_rank(double p, std::size_t n) {
  if (!(p > 0.0 && p <= 100.0))
    throw MetricsError(MetricsError::Kind::InvalidPercentile, "percentile must lie in (0, 100]");
  const double exact = p * static_cast<double>(n) / 100.0;
  // p*n is exact for the integral percentiles used here; the epsilon absorbs
  // representation error for fractional p such as 99.9.
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::size_t>(rank, 1, n);
}

// Nearest-rank percentile of an already sorted sample.
inline double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw MetricsError(MetricsError::Kind::EmptySample, "percentile of an empty sample");
  return sorted[nearest_rank(p, sorted.size()) - 1];
}

// Nearest-rank percentile; no interpolation, so the result is a sample member.
template <std::ranges::input_range R>
  requires std::convertible_to<std::ranges::range_value_t<R>, double>
double percentile(R&& latencies, double p) {
  std::vector<double> v(std::ranges::begin(latencies), std::ranges::end(latencies));
  if (v.empty()) throw MetricsError(MetricsError::Kind::EmptySample, "percentile of an empty sample");
  const auto k = nearest_rank(p, v.size()) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

inline double percentile(std::initializer_list<double> latencies, double p) {
  return percentile(std::span<const double>(latencies.begin(), latencies.size()), p);
}

// Half-open window of start offsets, in milliseconds since run start.
struct Window {
  double begin_ms = 0.0;
  double end_ms = 0.0;
  double seconds() const { return (end_ms - begin_ms) / 1000.0; }
  bool contains(double t_ms) const { return t_ms >= begin_ms && t_ms < end_ms; }
};

inline Window steady_window(const LoadScenario& s) { return {s.ramp_up_s * 1000.0, s.duration_s() * 1000.0}; }

inline bool is_failure(Outcome o) { return o != Outcome::Success; }

// Successful requests per second; `results` are taken as already windowed.
inline double throughput(std::span<const RequestResult> results, double window_s) {
  if (!(window_s > 0.0)) throw MetricsError(MetricsError::Kind::EmptySample, "throughput window must be > 0");
  const auto ok = std::ranges::count_if(results, [](const auto& r) { return r.outcome == Outcome::Success; });
  return static_cast<double>(ok) / window_s;
}

inline double throughput(std::span<const RequestResult> results, const Window& w) {
  const auto ok = std::ranges::count_if(
      results, [&](const auto& r) { return r.outcome == Outcome::Success && w.contains(r.start_offset_ms); });
  return static_cast<double>(ok) / w.seconds();
}

// Percentage of results that are not successes.
inline double error_rate(std::span<const RequestResult> results) {
  if (results.empty()) throw MetricsError(MetricsError::Kind::EmptySample, "error rate of an empty sample");
  const auto failed = std::ranges::count_if(results, [](const auto& r) { return is_failure(r.outcome); });
  return 100.0 * static_cast<double>(failed) / static_cast<double>(results.size());
}

struct MetricsSummary {
  std::string scenario;
  std::string target_label;
  std::string platform;
  std::string run_id;
  std::optional<double> p50_ms, p95_ms, p99_ms;  // absent when no request succeeded
  double tps = 0.0;
  double error_rate_pct = 0.0;
  std::int64_t total_calls = 0;
  std::int64_t success_calls = 0;
  std::int64_t egress_bytes = 0;
  double included_window_s = 0.0;
};

// Steady-window metrics of one run. Percentiles use successful requests only;
// calls and egress count every steady-window request.
inline MetricsSummary summarize(const RunRecord& run) {
  const Window w = steady_window(run.scenario);
  std::vector<RequestResult> steady;
  std::ranges::copy_if(run.results, std::back_inserter(steady),
                       [&](const RequestResult& r) { return w.contains(r.start_offset_ms); });
  if (steady.empty())
    throw MetricsError(MetricsError::Kind::NoSteadyStateData, "run " + run.run_id + " has no steady-state results");

  MetricsSummary s;
  s.scenario = run.scenario.name;
  s.target_label = run.target_label;
  s.platform = run.platform.empty() ? run.target_label : run.platform;
  s.run_id = run.run_id;
  s.included_window_s = w.seconds();
  std::vector<double> ok;
  for (const auto& r : steady) {
    s.egress_bytes += r.bytes_in;
    if (r.outcome == Outcome::Success) ok.push_back(r.latency_ms);
  }
  s.total_calls = static_cast<std::int64_t>(steady.size());
  s.success_calls = static_cast<std::int64_t>(ok.size());
  if (!ok.empty()) {
    std::ranges::sort(ok);
    s.p50_ms = percentile_sorted(ok, 50);
    s.p95_ms = percentile_sorted(ok, 95);
    s.p99_ms = percentile_sorted(ok, 99);
  }
  s.tps = throughput(steady, s.included_window_s);
  s.error_rate_pct = error_rate(steady);
  return s;
}

struct Stat {
  std::optional<double> mean;
  std::optional<double> stdev;  // sample standard deviation, 0 for a single value
  std::size_t n = 0;
};

// Mean and n-1 standard deviation over the present values.
inline Stat describe(std::span<const std::optional<double>> values) {
  std::vector<double> v;
  for (const auto& x : values)
    if (x) v.push_back(*x);
  Stat s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  s.mean = mean;
  s.stdev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

struct AggregateSummary {
  std::string scenario;
  std::string target_label;
  std::string platform;
  std::vector<MetricsSummary> runs;
  Stat p50_ms, p95_ms, p99_ms, tps, error_rate_pct, total_calls, egress_bytes;
};

inline AggregateSummary aggregate(std::span<const MetricsSummary> summaries) {
  if (summaries.empty())
    throw MetricsError(MetricsError::Kind::MixedConfigurations, "aggregate of an empty summary list");
  for (const auto& s : summaries)
    if (s.scenario != summaries[0].scenario || s.target_label != summaries[0].target_label)
      throw MetricsError(MetricsError::Kind::MixedConfigurations,
                         "cannot aggregate " + s.scenario + "/" + s.target_label + " with " + summaries[0].scenario +
                             "/" + summaries[0].target_label);
  AggregateSummary a;
  a.scenario = summaries[0].scenario;
  a.target_label = summaries[0].target_label;
  a.platform = summaries[0].platform;
  a.runs.assign(summaries.begin(), summaries.end());
  auto column = [&](auto get) {
    std::vector<std::optional<double>> v;
    for (const auto& s : summaries) v.push_back(get(s));
    return describe(v);
  };
  a.p50_ms = column([](const MetricsSummary& s) { return s.p50_ms; });
  a.p95_ms = column([](const MetricsSummary& s) { return s.p95_ms; });
  a.p99_ms = column([](const MetricsSummary& s) { return s.p99_ms; });
  a.tps = column([](const MetricsSummary& s) { return std::optional<double>(s.tps); });
  a.error_rate_pct = column([](const MetricsSummary& s) { return std::optional<double>(s.error_rate_pct); });
  a.total_calls =
      column([](const MetricsSummary& s) { return std::optional<double>(static_cast<double>(s.total_calls)); });
  a.egress_bytes =
      column([](const MetricsSummary& s) { return std::optional<double>(static_cast<double>(s.egress_bytes)); });
  return a;
}

// 100 * (baseline - comparison) / baseline, unrounded.
inline double relative_difference(double baseline, double comparison) {
  if (baseline == 0.0) throw MetricsError(MetricsError::Kind::ZeroBaseline, "relative difference against zero");
  return 100.0 * (baseline - comparison) / baseline;
}

// Half away from zero; -0 is normalized to 0.
inline double round_to(double v, int digits) {
  const double scale = std::pow(10.0, digits);
  // Nudge by a relative epsilon so values such as 22.95 (stored as 22.9499..) round as written.
  const double nudged = v * scale * (1.0 + 1e-12);
  const double r = std::round(nudged) / scale;
  return r == 0.0 ? 0.0 : r;
}

inline double relative_difference_rounded(double baseline, double comparison) {
  return round_to(relative_difference(baseline, comparison), 1);
}

// Reporting precision: latencies and rates 0.01, relative differences 0.1.
inline std::string format_fixed(double v, int digits) { return detail::fixed(round_to(v, digits), digits); }
inline std::string format_ms(double v) { return format_fixed(v, 2); }
inline std::string format_rate(double v) { return format_fixed(v, 2); }
inline std::string format_relative(double v) { return format_fixed(v, 1); }

inline constexpr const char* kSummaryCsvHeader =
    "scenario,target_label,run_id,p50_ms,p95_ms,p99_ms,tps,error_rate_pct,total_calls,egress_bytes";

inline void write_summary_csv(std::ostream& os, std::span<const MetricsSummary> summaries) {
  auto opt = [](const std::optional<double>& v) { return v ? format_ms(*v) : std::string(); };
  os << kSummaryCsvHeader << '\n';
  for (const auto& s : summaries)
    os << s.scenario << ',' << s.target_label << ',' << s.run_id << ',' << opt(s.p50_ms) << ',' << opt(s.p95_ms)
       << ',' << opt(s.p99_ms) << ',' << format_rate(s.tps) << ',' << format_rate(s.error_rate_pct) << ','
       << s.total_calls << ',' << s.egress_bytes << '\n';
}

}  // namespace posbench
