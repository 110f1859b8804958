#include <atomic>
#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "posbench/cli.hpp"

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  namespace cli = posbench::cli;

  CLI::App app{"POS cloud benchmarking harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::kToolVersion);

  auto* run = app.add_subcommand("run", "run a load campaign and record raw results");
  std::string config_path;
  std::string out_dir;
  bool desk_scale = false;
  std::optional<std::uint64_t> seed;
  run->add_option("--config", config_path, "campaign config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory (overrides out_dir)");
  run->add_flag("--desk-scale", desk_scale, "30 s steady state, 2 s rests, one repetition");
  run->add_option("--seed", seed, "campaign seed (overrides the config)");

  auto* report = app.add_subcommand("report", "build tables, figures and a summary from raw results");
  std::string raw_dir;
  std::string report_out;
  std::string pricing;
  report->add_option("raw_dir", raw_dir, "directory of raw run CSVs (default <out>/raw)");
  report->add_option("--out", report_out, "output directory")->default_val("out");
  report->add_option("--config", config_path, "campaign config; supplies out_dir and pricing");
  report->add_option("--pricing", pricing, "pricing catalog (JSON)");

  auto* serve = app.add_subcommand("serve", "run the reference POS target");
  cli::ServeOptions serve_opts;
  serve->add_option("--profile", serve_opts.profile, "profile name or JSON file")->default_val("paper-gcp");
  serve->add_option("--port", serve_opts.port, "TCP port (0 = any)")->default_val(8080);
  serve->add_option("--host", serve_opts.host, "bind address")->default_val("127.0.0.1");

  auto* estimate = app.add_subcommand("estimate", "estimate costs from usage or raw results");
  std::string usage_path;
  std::string estimate_raw;
  estimate->add_option("--usage", usage_path, "usage file (JSON)");
  estimate->add_option("--pricing", pricing, "pricing catalog (JSON)");
  estimate->add_option("raw_dir", estimate_raw, "directory of raw run CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsage;
  }

  if (*run) {
    cli::RunOverrides o;
    o.desk_scale = desk_scale;
    o.seed = seed;
    if (!out_dir.empty()) o.out_dir = out_dir;
    return cli::cmd_run(config_path, o);
  }
  if (*report) {
    std::filesystem::path out = report_out;
    cli::ReportOptions o;
    if (!config_path.empty()) {
      try {
        auto cfg = posbench::parse_config(config_path);
        if (report->count("--out") == 0) out = cfg.out_dir;
        o.pricing_path = cfg.pricing_path;
      } catch (const posbench::ConfigInvalid& e) {
        std::cerr << "config invalid: " << e.what() << '\n';
        return cli::kConfigInvalid;
      }
    }
    if (!pricing.empty()) o.pricing_path = pricing;
    return cli::cmd_report(raw_dir.empty() ? out / "raw" : std::filesystem::path(raw_dir), out, o);
  }
  if (*serve) {
    serve_opts.token = posbench::token_from_env();
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    return cli::cmd_serve(serve_opts, g_stop);
  }
  cli::EstimateOptions o;
  if (!usage_path.empty()) o.usage_path = usage_path;
  if (!estimate_raw.empty()) o.raw_dir = estimate_raw;
  if (!pricing.empty()) o.pricing_path = pricing;
  return cli::cmd_estimate(o);
}
