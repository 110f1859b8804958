// Acceptance checks, one PASS/FAIL line per criterion.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "posbench/cli.hpp"

using namespace posbench;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kMixTolerancePp = 1.0;
constexpr double kCostTolerancePp = 0.1;
constexpr double kFidelityTolerance = 0.10;
constexpr double kStressRatioMin = 5.0;
constexpr double kErrorTolerancePp = 0.5;
constexpr double kProfileBudgetS = 300.0;
constexpr double kCampaignBudgetS = 600.0;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 2) { return format_fixed(v, digits); }

fs::path work_dir() {
  const auto d = fs::temp_directory_path() / "posbench_acceptance";
  fs::create_directories(d);
  return d;
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) out.push_back(csv::split(line));
  return out;
}

Verdict percentile_oracle() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  std::size_t mismatches = 0, checks = 0;
  for (int sample = 0; sample < 1000; ++sample) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 10'000));
    std::vector<double> v(n);
    for (auto& x : v) x = std::floor(rng.uniform() * 5000.0 * 100.0) / 100.0;  // ties are likely
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int p : {50, 95, 99}) {
      // ceil(p*n/100) in integers, 1-based.
      const std::size_t rank = (static_cast<std::size_t>(p) * n + 99) / 100;
      mismatches += percentile(v, p) != sorted[std::max<std::size_t>(rank, 1) - 1];
      ++checks;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0,
          std::to_string(checks) + " checks, " + std::to_string(mismatches) + " mismatches, " + fmt(secs) + " s"};
}

Verdict mix_convergence() {
  CatalogIndex index(default_catalog());
  WorkloadMix mix;
  Rng rng(7);
  std::array<int, 3> counts{};
  const int n = 100'000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_operation(index, mix, rng).category)];
  const std::array<double, 3> want{60.0, 30.0, 10.0};
  bool ok = true;
  std::string detail;
  for (std::size_t c = 0; c < 3; ++c) {
    const double pct = 100.0 * counts[c] / n;
    ok = ok && std::abs(pct - want[c]) <= kMixTolerancePp;
    detail += (c ? "/" : "") + fmt(pct);
  }
  return {ok, detail + " % vs 60/30/10"};
}

Verdict cost_exactness() {
  const auto pricing = default_pricing();
  const auto gcp = estimate_cost({"gcp", 1'000'000, 1'000'000'000}, pricing).total_usd;
  const auto azure = estimate_cost({"azure", 1'000'000, 1'000'000'000}, pricing).total_usd;
  bool ok = gcp == CostAmount::parse("0.52") && azure == CostAmount::parse("0.39");
  Rng rng(11);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string platform = i % 2 ? "azure" : "gcp";
    const auto c1 = rng.uniform_int(0, 50'000'000), b1 = rng.uniform_int(0, 500'000'000'000);
    const auto c2 = rng.uniform_int(0, 50'000'000), b2 = rng.uniform_int(0, 500'000'000'000);
    const auto a = estimate_cost({platform, c1, b1}, pricing).total_usd;
    const auto b = estimate_cost({platform, c2, b2}, pricing).total_usd;
    const auto sum = estimate_cost({platform, c1 + c2, b1 + b2}, pricing).total_usd;
    if (!(sum == a + b)) ++violations;
    if (estimate_cost({platform, c1 + 1, b1}, pricing).total_usd < a) ++violations;
    if (estimate_cost({platform, c1, b1 + 1}, pricing).total_usd < a) ++violations;
  }
  ok = ok && violations == 0;
  return {ok, "gcp " + gcp.rescale<9>().to_string() + ", azure " + azure.rescale<9>().to_string() + ", " +
                  std::to_string(violations) + " linearity/monotonicity violations"};
}

Verdict latency_delta() {
  const auto text = format_relative(relative_difference(238.42, 183.69));
  return {text == "23.0", "relative_difference(238.42, 183.69) = " + text};
}

Verdict cost_deltas_check() {
  const std::pair<const char*, std::pair<const char*, const char*>> table[] = {
      {"baseline", {"0.000057", "0.00016"}},
      {"typical", {"0.00143", "0.00049"}},
      {"peak", {"0.0019", "0.00065"}},
      {"stress", {"0.00534", "0.00078"}}};
  std::vector<CostEstimate> costs;
  for (const auto& [level, v] : table)
    for (auto [label, total] : {std::pair{"gcp", v.first}, std::pair{"azure", v.second}}) {
      CostEstimate e;
      e.platform_label = label;
      e.scenario = level;
      e.total_usd = CostAmount::parse(total);
      costs.push_back(e);
    }
  const auto deltas = cost_deltas(costs, "gcp", "azure");
  const std::map<std::string, double> want{{"typical", 65.7}, {"peak", 65.8}, {"stress", 85.4}};
  bool ok = deltas.size() == 4;
  std::string detail;
  for (const auto& d : deltas) {
    if (!want.count(d.level)) continue;
    ok = ok && std::abs(d.pct - want.at(d.level)) <= kCostTolerancePp;
    detail += d.level + " " + fmt(d.pct, 2) + ", ";
  }
  const auto mean = mean_delta(deltas, {"baseline"});
  ok = ok && mean && std::abs(*mean - 72.3) <= kCostTolerancePp;
  return {ok, detail + "mean " + (mean ? fmt(*mean, 2) : std::string("n/a"))};
}

Verdict error_injection() {
  auto profile = *named_profile("paper-azure");
  profile.error_rate = 0.02;
  profile.seed = 5;
  EmulatedTarget target(profile);
  int failures = 0;
  const int n = 10'000;
  for (int i = 0; i < n; ++i) {
    ServiceRequest r;
    r.method = "GET";
    r.path = "/products/" + std::to_string(i % 100 + 1);
    const double now = i * 0.01;
    auto p = target.begin(r, now);
    failures += p.response.status == 500;
    if (p.emulated) target.end(now);
  }
  const double pct = 100.0 * failures / n;
  return {std::abs(pct - 2.0) <= kErrorTolerancePp, fmt(pct) + " % over " + std::to_string(n) + " requests"};
}

Verdict target_consistency() {
  ServiceRequest put;
  put.method = "PUT";
  put.path = "/products/1/stock";
  put.body = R"({"delta":-1})";
  TargetService svc(default_fixture(1, 50));
  std::atomic<int> ok{0}, rejected{0};
  std::atomic<bool> go{false};
  std::vector<std::thread> threads;
  for (int i = 0; i < 100; ++i)
    threads.emplace_back([&] {
      while (!go.load()) std::this_thread::yield();
      (svc.handle(put).status == 200 ? ok : rejected)++;
    });
  go = true;
  for (auto& t : threads) t.join();
  const auto stock = svc.stock_of(1).value_or(-1);
  bool pass = stock == 0 && ok == 50 && rejected == 50;

  Rng rng(31);
  int mismatched = 0;
  for (int script = 0; script < 1000; ++script) {
    TargetService s(default_fixture(20, 1000));
    ServiceRequest r;
    r.method = "POST";
    r.path = "/sales";
    s.handle(r);
    std::int64_t cents = 0;
    const auto steps = rng.uniform_int(1, 15);
    for (int k = 0; k < steps; ++k) {
      if (rng.uniform() < 0.75) {
        const auto pid = rng.uniform_int(1, 20), qty = rng.uniform_int(1, 6);
        r.path = "/sales/1/items";
        r.body = nlohmann::json{{"product_id", pid}, {"qty", qty}}.dump();
        if (s.handle(r).status == 200) cents += (100 + (pid % 50) * 25) * qty;
      } else {
        const auto d = rng.uniform_int(1, 400);
        r.path = "/sales/1/discount";
        r.body = nlohmann::json{{"amount_usd", Money::from_units(static_cast<__int128>(d) * 10'000'000).to_string()}}.dump();
        if (s.handle(r).status == 200) cents -= d;
      }
    }
    const auto sale = *s.sale(1);
    const bool stored_ok = sale.receipt_total == sale.recompute_total();
    // Independent integer-cents oracle; discounts floor the total at zero.
    const bool oracle_ok = sale.receipt_total.units() == static_cast<__int128>(std::max<std::int64_t>(cents, 0)) * 10'000'000;
    mismatched += !(stored_ok && oracle_ok);
  }
  pass = pass && mismatched == 0;
  return {pass, "stock " + std::to_string(stock) + ", " + std::to_string(ok.load()) + " ok, " +
                    std::to_string(rejected.load()) + " rejected; " + std::to_string(mismatched) +
                    "/1000 receipt mismatches"};
}

CampaignConfig two_profiles(const char* mode) {
  auto c = parse_config_json(nlohmann::json{
      {"targets",
       {{{"label", "gcp"}, {"profile", "paper-gcp"}, {"mode", mode}},
        {{"label", "azure"}, {"profile", "paper-azure"}, {"mode", mode}}}}});
  return c;
}

Verdict determinism() {
  std::vector<fs::path> outs;
  for (const char* name : {"det_a", "det_b"}) {
    const auto out = work_dir() / name;
    fs::remove_all(out);
    std::ostringstream log;
    cli::RunOverrides o;
    o.desk_scale = true;
    o.out_dir = out;
    if (cli::cmd_run(two_profiles("simulated"), o, log) != cli::kOk ||
        cli::cmd_report(out / "raw", out, {}, log) != cli::kOk)
      return {false, "pipeline failed: " + log.str()};
    outs.push_back(out);
  }
  int files = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(outs[0] / "tables")) {
    ++files;
    differing += read_file(e.path()) != read_file(outs[1] / "tables" / e.path().filename());
  }
  return {files == 5 && differing == 0, std::to_string(files) + " tables compared, " + std::to_string(differing) + " differ"};
}

std::map<std::pair<std::string, std::string>, MetricsSummary> summaries_of(const fs::path& raw) {
  std::ostringstream log;
  std::map<std::pair<std::string, std::string>, MetricsSummary> out;
  for (const auto& run : cli::load_campaign(raw, log).runs) {
    const auto s = summarize(run);
    out[{s.target_label, s.scenario}] = s;
  }
  return out;
}

// Runs one profile over HTTP for the named canonical levels, desk scale.
struct ProfileRun {
  int code = -1;
  double seconds = 0;
  fs::path raw;
};

ProfileRun http_profile_run(const std::string& label, const std::string& profile, std::vector<std::string> levels) {
  auto c = desk_scaled(parse_config_json(
      nlohmann::json{{"targets", {{{"label", label}, {"profile", profile}}}}}));
  std::erase_if(c.scenarios, [&](const LoadScenario& s) {
    return std::find(levels.begin(), levels.end(), s.name) == levels.end();
  });
  ProfileRun r;
  c.out_dir = work_dir() / ("fidelity_" + label);
  r.raw = c.out_dir / "raw";
  std::ostringstream log;
  const auto t0 = Clock::now();
  r.code = cli::cmd_run(c, {}, log);
  r.seconds = seconds_since(t0);
  return r;
}

Verdict emulation_fidelity() {
  ProfileRun gcp, azure;
  std::thread a([&] { gcp = http_profile_run("gcp", "paper-gcp", {"baseline"}); });
  std::thread b([&] { azure = http_profile_run("azure", "paper-azure", {"baseline", "stress"}); });
  a.join();
  b.join();
  if (gcp.code != cli::kOk || azure.code != cli::kOk) return {false, "run failed"};
  const auto gs = summaries_of(gcp.raw), as = summaries_of(azure.raw);
  const auto& g = gs.at({"gcp", "baseline"});
  const auto ab = as.at({"azure", "baseline"}).p95_ms, ast = as.at({"azure", "stress"}).p95_ms;
  if (!g.p50_ms || !g.p95_ms || !ab || !ast) return {false, "missing percentiles"};
  const bool p50_ok = std::abs(*g.p50_ms / 153.83 - 1.0) <= kFidelityTolerance;
  const bool p95_ok = std::abs(*g.p95_ms / 183.69 - 1.0) <= kFidelityTolerance;
  const double ratio = *ast / *ab;
  const bool time_ok = gcp.seconds < kProfileBudgetS && azure.seconds < kProfileBudgetS;
  return {p50_ok && p95_ok && ratio >= kStressRatioMin && time_ok,
          "gcp p50 " + fmt(*g.p50_ms) + " p95 " + fmt(*g.p95_ms) + " ms; azure stress/baseline p95 " + fmt(*ast) +
              "/" + fmt(*ab) + " = " + fmt(ratio) + "x; " + fmt(gcp.seconds, 0) + " s / " + fmt(azure.seconds, 0) + " s"};
}

Verdict desk_campaign() {
  const auto out = work_dir() / "campaign";
  fs::remove_all(out);
  std::ostringstream log;
  cli::RunOverrides o;
  o.desk_scale = true;
  o.out_dir = out;
  const auto t0 = Clock::now();
  if (cli::cmd_run(two_profiles("http"), o, log) != cli::kOk) return {false, "run failed: " + log.str()};
  if (cli::cmd_report(out / "raw", out, {}, log) != cli::kOk) return {false, "report failed: " + log.str()};
  const double secs = seconds_since(t0);

  int missing = 0;
  for (const char* f : {"tables/response_times.csv", "tables/p95_scaling.csv", "tables/throughput.csv",
                        "tables/costs.csv", "tables/error_rates.csv", "figures/p95_by_load.svg",
                        "figures/tps_by_load.svg", "figures/cost_by_load.svg", "figures/error_by_load.svg", "manifest.json"})
    missing += !fs::exists(out / f);
  if (missing) return {false, std::to_string(missing) + " output files missing"};

  // Every value drawn in a figure must equal the matching CSV cell verbatim.
  int values = 0, mismatched = 0;
  const std::pair<const char*, const char*> wide[] = {{"figures/p95_by_load.svg", "tables/p95_scaling.csv"},
                                                      {"figures/tps_by_load.svg", "tables/throughput.csv"},
                                                      {"figures/error_by_load.svg", "tables/error_rates.csv"}};
  for (const auto& [svg, table] : wide) {
    const auto rows = csv_rows(out / table);
    for (const auto& v : parse_svg_values(read_file(out / svg))) {
      ++values;
      const auto row = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r[0] == v.level; });
      const auto col = std::find(rows[0].begin(), rows[0].end(), v.target);
      if (row == rows.end() || col == rows[0].end() ||
          (*row)[static_cast<std::size_t>(col - rows[0].begin())] != v.text)
        ++mismatched;
    }
  }
  const auto cost_rows = csv_rows(out / "tables/costs.csv");
  for (const auto& v : parse_svg_values(read_file(out / "figures/cost_by_load.svg"))) {
    ++values;
    const auto row = std::find_if(cost_rows.begin(), cost_rows.end(),
                                  [&](const auto& r) { return r[0] == v.target && r[1] == v.level; });
    if (row == cost_rows.end() || row->back() != v.text) ++mismatched;
  }
  return {secs < kCampaignBudgetS && mismatched == 0 && values == 32,
          fmt(secs, 0) + " s; " + std::to_string(values) + " figure values, " + std::to_string(mismatched) +
              " differ from CSV"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"percentile oracle equivalence", percentile_oracle},
      {"mix convergence", mix_convergence},
      {"cost formula exactness", cost_exactness},
      {"latency delta 23.0", latency_delta},
      {"per-level cost deltas", cost_deltas_check},
      {"emulation fidelity", emulation_fidelity},
      {"error injection", error_injection},
      {"target consistency", target_consistency},
      {"determinism", determinism},
      {"desk campaign end to end", desk_campaign},
  };
  int failed = 0, n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << "criterion " << n << " " << (v.pass ? "PASS" : "FAIL") << ": " << name << " (" << v.detail << ")"
              << std::endl;
  }
  return failed ? 1 : 0;
}
