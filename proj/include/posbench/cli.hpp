#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "costs.hpp"
#include "digest.hpp"
#include "engine.hpp"
#include "http_transport.hpp"
#include "metrics.hpp"
#include "report.hpp"
#include "target.hpp"
#include "target_server.hpp"

namespace posbench::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kTargetUnreachable = 2,
  kConfigInvalid = 3,
  kEmptyRawDir = 4,
  kServeFailure = 5,  // port unavailable or unknown profile
  kMalformedUsage = 6,
};

struct RunOverrides {
  bool desk_scale = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
};

namespace detail {

inline std::string now_iso() { return posbench::detail::iso8601(posbench::detail::wall_now()); }

// Removes previous run files so a report never mixes two campaigns.
inline void clear_raw_dir(const std::filesystem::path& raw) {
  std::error_code ec;
  if (!std::filesystem::exists(raw, ec)) return;
  for (const auto& e : std::filesystem::directory_iterator(raw)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".csv" || ext == ".json")) std::filesystem::remove(e.path(), ec);
  }
}

struct TargetRuntime {
  const TargetConfig* config = nullptr;
  std::unique_ptr<EmulatedTarget> target;
  std::unique_ptr<TargetServer> server;
  Endpoint endpoint;
};

}  // namespace detail

// Executes every target's campaign (targets concurrently) and writes
// <out>/raw/<run_id>.{csv,json} plus <out>/raw/manifest.json.
inline int cmd_run(const CampaignConfig& input, const RunOverrides& overrides, std::ostream& log = std::cerr) {
  CampaignConfig cfg = overrides.desk_scale ? desk_scaled(input) : input;
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
  const auto raw = cfg.out_dir / "raw";
  const std::string started = detail::now_iso();

  CatalogIndex index(cfg.catalog);
  const std::string token = token_from_env();
  const std::string reset_fixture = nlohmann::json{{"count", cfg.product_count}}.dump();

  // Bring every target up and probe it before any load is generated.
  std::vector<detail::TargetRuntime> runtimes;
  for (const auto& t : cfg.targets) {
    detail::TargetRuntime rt;
    rt.config = &t;
    if (t.embedded()) {
      rt.target = std::make_unique<EmulatedTarget>(*t.resolved, cfg.catalog, default_fixture(cfg.product_count));
      if (t.mode == TargetMode::Http) {
        rt.target->set_token(token);
        rt.server = std::make_unique<TargetServer>(*rt.target);
        if (!rt.server->bind("127.0.0.1", 0)) {
          log << "error: cannot bind an embedded server for target " << t.label << '\n';
          return kTargetUnreachable;
        }
        rt.server->start();
        rt.endpoint = {rt.server->base_url(), token, reset_fixture};
      }
    } else {
      rt.endpoint = {t.base_url, token, reset_fixture};
    }
    if (!t.embedded() || t.mode == TargetMode::Http) {
      HttpTransport probe(rt.endpoint);
      if (!probe.probe()) {
        log << "error: target " << t.label << " (" << rt.endpoint.base_url << ") is unreachable\n";
        return kTargetUnreachable;
      }
    }
    runtimes.push_back(std::move(rt));
  }

  detail::clear_raw_dir(raw);
  std::filesystem::create_directories(raw);
  std::mutex io_mu;
  std::atomic<bool> unreachable{false};
  auto on_run = [&](const RunRecord& run) {
    std::lock_guard lock(io_mu);
    save_run(raw, run);
    log << "run " << run.run_id << ": " << run.results.size() << " requests\n";
  };

  std::vector<std::thread> workers;
  for (auto& rt : runtimes) {
    workers.emplace_back([&, rt = &rt] {
      RunSettings base;
      base.target_label = rt->config->label;
      base.platform = rt->config->platform;
      base.product_count = cfg.product_count;
      try {
        if (rt->config->embedded() && rt->config->mode == TargetMode::Simulated) {
          SimulationSettings sim;
          base.wall_anchor = sim.wall_anchor;
          const auto count = cfg.product_count;
          simulate_campaign(cfg.scenarios, index, cfg.mix, cfg.shape, *rt->target, cfg.seed, base, sim,
                            [count] { return default_fixture(count); }, on_run);
        } else {
          execute_campaign(cfg.scenarios, index, cfg.mix, cfg.shape, http_transport_factory(rt->endpoint), cfg.seed,
                           base, true, on_run);
        }
      } catch (const EngineError& e) {
        std::lock_guard lock(io_mu);
        log << "error: " << e.what() << '\n';
        if (e.kind() == EngineError::Kind::TargetUnreachable) unreachable = true;
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& rt : runtimes)
    if (rt.server) rt.server->stop();

  nlohmann::json manifest{{"tool", "posbench"},
                          {"version", kToolVersion},
                          {"config_digest", cfg.digest},
                          {"seed", cfg.seed},
                          {"prng", kPrngId},
                          {"desk_scale", overrides.desk_scale},
                          {"started_at", started},
                          {"finished_at", detail::now_iso()}};
  manifest["targets"] = nlohmann::json::array();
  for (const auto& t : cfg.targets)
    manifest["targets"].push_back({{"label", t.label},
                                   {"platform", t.platform},
                                   {"source", t.embedded() ? "profile:" + t.profile : t.base_url},
                                   {"mode", t.mode == TargetMode::Simulated ? "simulated" : "http"}});
  std::ofstream(raw / "manifest.json") << manifest.dump(2) << '\n';
  return unreachable ? kTargetUnreachable : kOk;
}

inline int cmd_run(const std::filesystem::path& config_path, const RunOverrides& overrides,
                   std::ostream& log = std::cerr) {
  try {
    return cmd_run(parse_config(config_path), overrides, log);
  } catch (const ConfigInvalid& e) {
    log << "config invalid: " << e.what() << '\n';
    return kConfigInvalid;
  }
}

struct LoadedCampaign {
  std::vector<RunRecord> runs;
  std::vector<std::string> files;  // raw CSV names, sorted
  std::size_t warnings = 0;
  std::string digest;
  std::vector<std::string> target_order;
  nlohmann::json run_manifest;
};

inline LoadedCampaign load_campaign(const std::filesystem::path& raw_dir, std::ostream& log) {
  LoadedCampaign c;
  std::vector<std::filesystem::path> csvs;
  std::error_code ec;
  if (std::filesystem::is_directory(raw_dir, ec))
    for (const auto& e : std::filesystem::directory_iterator(raw_dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());
  std::uint64_t h = fnv1a64("");
  for (const auto& p : csvs) {
    h = fnv1a64(p.filename().string(), h);
    h = fnv1a64(read_file(p), h);
    try {
      auto loaded = load_run(p);
      if (loaded.skipped_rows) log << "warning: " << p.filename().string() << ": skipped " << loaded.skipped_rows
                                   << " malformed row(s)\n";
      c.warnings += loaded.skipped_rows;
      c.runs.push_back(std::move(loaded.run));
      c.files.push_back(p.filename().string());
    } catch (const std::exception& e) {
      log << "warning: " << p.filename().string() << ": " << e.what() << '\n';
      ++c.warnings;
    }
  }
  c.digest = hex64(h);
  std::ifstream mf(raw_dir / "manifest.json");
  if (mf) {
    c.run_manifest = nlohmann::json::parse(mf, nullptr, false);
    if (c.run_manifest.is_object() && c.run_manifest.contains("targets"))
      for (const auto& t : c.run_manifest["targets"]) c.target_order.push_back(t.value("label", ""));
  }
  return c;
}

struct ReportOptions {
  std::optional<std::filesystem::path> pricing_path;
};

// Summaries, aggregates, cost estimates, tables, figures and a text summary.
inline int cmd_report(const std::filesystem::path& raw_dir, const std::filesystem::path& out_dir,
                      const ReportOptions& options = {}, std::ostream& log = std::cerr) {
  auto campaign = load_campaign(raw_dir, log);
  if (campaign.runs.empty()) {
    log << "error: no run CSVs in " << raw_dir.string() << '\n';
    return kEmptyRawDir;
  }
  PricingCatalog pricing = default_pricing();
  if (options.pricing_path) {
    try {
      pricing = load_pricing(*options.pricing_path, log);
    } catch (const CostError& e) {
      log << "error: " << e.what() << '\n';
      return kConfigInvalid;
    }
  }

  std::vector<MetricsSummary> summaries;
  std::map<std::pair<std::string, std::string>, std::vector<MetricsSummary>> groups;
  std::vector<std::string> seen_targets;
  for (const auto& run : campaign.runs) {
    try {
      auto s = summarize(run);
      summaries.push_back(s);
      groups[{s.scenario, s.target_label}].push_back(s);
      if (std::find(seen_targets.begin(), seen_targets.end(), s.target_label) == seen_targets.end())
        seen_targets.push_back(s.target_label);
    } catch (const MetricsError& e) {
      log << "warning: " << e.what() << '\n';
      ++campaign.warnings;
    }
  }

  ReportData data;
  for (const auto& t : campaign.target_order)
    if (std::find(seen_targets.begin(), seen_targets.end(), t) != seen_targets.end()) data.targets.push_back(t);
  std::sort(seen_targets.begin(), seen_targets.end());
  for (const auto& t : seen_targets)
    if (std::find(data.targets.begin(), data.targets.end(), t) == data.targets.end()) data.targets.push_back(t);

  for (const auto& [key, runs] : groups) {
    auto agg = aggregate(runs);
    // Cost per run at the mean steady-window usage of the repetitions.
    UsageRecord usage{agg.platform, std::llround(*agg.total_calls.mean), std::llround(*agg.egress_bytes.mean)};
    try {
      auto est = estimate_cost(usage, pricing);
      est.platform_label = agg.target_label;
      est.scenario = agg.scenario;
      data.costs.push_back(est);
    } catch (const CostError& e) {
      log << "warning: " << e.what() << '\n';
      ++campaign.warnings;
    }
    data.aggregates.push_back(std::move(agg));
  }

  std::vector<std::string> files;
  try {
    files = emit_tables(data, out_dir);
    for (auto kind : {FigureKind::P95, FigureKind::Tps, FigureKind::Cost, FigureKind::Error}) {
      emit_figure(kind, data, out_dir / "figures" / figure_file(kind));
      files.push_back(std::string("figures/") + figure_file(kind));
    }
    std::ostringstream runs_csv;
    write_summary_csv(runs_csv, summaries);
    write_text(out_dir / "run_summaries.csv", runs_csv.str());
    files.push_back("run_summaries.csv");
    write_text(out_dir / "summary.txt", summary_text(data));
    files.push_back("summary.txt");

    nlohmann::json manifest{{"tool", "posbench"},
                            {"version", kToolVersion},
                            {"files", files},
                            {"input_digest", campaign.digest},
                            {"input_files", campaign.files},
                            {"warnings", campaign.warnings}};
    if (campaign.run_manifest.is_object()) {
      for (const char* k : {"seed", "prng", "config_digest"})
        if (campaign.run_manifest.contains(k)) manifest[k] = campaign.run_manifest[k];
    }
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const ReportError& e) {
    log << "error: " << e.what() << '\n';
    return kUsage;
  }
  log << "report: " << files.size() << " files in " << out_dir.string() << ", " << campaign.warnings
      << " warning(s)\n";
  return kOk;
}

struct ServeOptions {
  std::string profile = "paper-gcp";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;  // empty disables the bearer check
};

// Runs the reference target until `stop` becomes true.
inline int cmd_serve(const ServeOptions& options, const std::atomic<bool>& stop, std::ostream& out = std::cout,
                     std::ostream& log = std::cerr, std::function<void(int port)> on_ready = {}) {
  EmulationProfile profile;
  try {
    profile = resolve_profile(options.profile);
  } catch (const ProfileError& e) {
    log << "error: " << e.what() << '\n';
    return kServeFailure;
  }
  EmulatedTarget target(profile);
  target.set_token(options.token);
  TargetServer server(target);
  if (!server.bind(options.host, options.port)) {
    log << "error: port " << options.port << " unavailable\n";
    return kServeFailure;
  }
  server.start();
  out << server.base_url() << std::endl;
  if (on_ready) on_ready(server.port());
  while (!stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  log << "stopped\n";
  return kOk;
}

namespace detail {

inline std::int64_t usage_integer(const nlohmann::json& e, const std::string& platform, const char* key) {
  const auto& v = e.at(key);
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::int64_t>();
  if (v.is_number_float() && v.get<double>() >= 0 && v.get<double>() == std::floor(v.get<double>()) &&
      v.get<double>() < 9.2e18)
    return static_cast<std::int64_t>(v.get<double>());
  throw CostError(CostError::Kind::MalformedPricing, platform + "." + key + ": expected a non-negative integer");
}

// {"<platform>": {"api_calls": n, "egress_bytes": n | "egress_gb": x, "scenario": s}}
inline std::vector<std::pair<UsageRecord, std::string>> usage_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& m) { throw CostError(CostError::Kind::MalformedPricing, m); };
  if (!j.is_object()) fail("usage must be a JSON object keyed by platform");
  std::vector<std::pair<UsageRecord, std::string>> out;
  for (const auto& [platform, e] : j.items()) {
    if (!e.is_object()) fail(platform + ": expected an object");
    for (const auto& [k, _] : e.items())
      if (k != "api_calls" && k != "egress_bytes" && k != "egress_gb" && k != "scenario") fail(platform + ": unknown key " + k);
    UsageRecord u;
    u.platform_label = platform;
    if (e.contains("api_calls")) u.api_calls = usage_integer(e, platform, "api_calls");
    if (e.contains("egress_bytes") && e.contains("egress_gb")) fail(platform + ": give egress_bytes or egress_gb, not both");
    if (e.contains("egress_bytes")) u.egress_bytes = usage_integer(e, platform, "egress_bytes");
    if (e.contains("egress_gb")) {
      const auto& g = e.at("egress_gb");
      Money gb;
      try {
        if (g.is_string()) gb = Money::parse(g.get<std::string>());
        else if (g.is_number()) gb = Money::from_double(g.get<double>());
        else fail(platform + ".egress_gb: not a number");
      } catch (const DecimalParseError& ex) {
        fail(platform + ".egress_gb: " + ex.what());
      }
      if (gb.is_negative()) fail(platform + ".egress_gb: negative");
      u.egress_bytes = static_cast<std::int64_t>(gb.units());  // nano-GB are bytes
    }
    std::string scenario = e.contains("scenario") && e.at("scenario").is_string() ? e.at("scenario").get<std::string>()
                                                                                  : std::string("usage");
    out.push_back({u, scenario});
  }
  return out;
}

}  // namespace detail

struct EstimateOptions {
  std::optional<std::filesystem::path> usage_path;
  std::optional<std::filesystem::path> raw_dir;
  std::optional<std::filesystem::path> pricing_path;
};

// Cost CSV on `out`. Explicit usage wins over raw data when both are given.
inline int cmd_estimate(const EstimateOptions& options, std::ostream& out = std::cout, std::ostream& log = std::cerr) {
  try {
    PricingCatalog pricing = options.pricing_path ? load_pricing(*options.pricing_path, log) : default_pricing();
    std::vector<CostEstimate> estimates;
    if (options.usage_path) {
      if (options.raw_dir) log << "warning: both usage and raw data given; using the usage file\n";
      std::ifstream in(*options.usage_path);
      if (!in) throw CostError(CostError::Kind::MalformedPricing, "cannot open " + options.usage_path->string());
      auto j = nlohmann::json::parse(in, nullptr, false);
      if (j.is_discarded()) throw CostError(CostError::Kind::MalformedPricing, "usage file is not valid JSON");
      auto usage = detail::usage_from_json(j);
      if (usage.empty())
        for (const auto& [platform, _] : pricing.platforms) usage.push_back({UsageRecord{platform, 0, 0}, "usage"});
      for (const auto& [u, scenario] : usage) {
        auto e = estimate_cost(u, pricing);
        e.scenario = scenario;
        estimates.push_back(e);
      }
    } else if (options.raw_dir) {
      auto campaign = load_campaign(*options.raw_dir, log);
      if (campaign.runs.empty()) {
        log << "error: no run CSVs in " << options.raw_dir->string() << '\n';
        return kEmptyRawDir;
      }
      // Steady-window totals summed over repetitions, per (platform, scenario).
      std::map<std::pair<std::string, std::string>, UsageRecord> totals;
      for (const auto& run : campaign.runs) {
        try {
          const auto s = summarize(run);
          auto& u = totals[{s.platform, s.scenario}];
          u.platform_label = s.platform;
          u.api_calls += s.total_calls;
          u.egress_bytes += s.egress_bytes;
        } catch (const MetricsError& e) {
          log << "warning: " << e.what() << '\n';
        }
      }
      for (const auto& [key, u] : totals) {
        auto e = estimate_cost(u, pricing);
        e.scenario = key.second;
        estimates.push_back(e);
      }
    } else {
      log << "error: estimate needs --usage or a raw directory\n";
      return kMalformedUsage;
    }
    write_cost_csv(out, estimates);
    return kOk;
  } catch (const CostError& e) {
    log << "error: " << e.what() << '\n';
    return kMalformedUsage;
  }
}

}  // namespace posbench::cli
