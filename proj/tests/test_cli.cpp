#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "posbench/cli.hpp"

using namespace posbench;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("posbench_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Two simulated targets with short scenarios; virtual time keeps this fast.
CampaignConfig small_config(const fs::path& out) {
  auto j = nlohmann::json::parse(R"({
    "targets": [{"label": "gcp", "profile": "paper-gcp", "mode": "simulated"},
                {"label": "azure", "profile": "paper-azure", "mode": "simulated"}],
    "scenarios": [{"name": "baseline", "concurrent_users": 4, "ramp_up_s": 2, "steady_s": 10, "repetitions": 2, "rest_between_runs_s": 1},
                  {"name": "stress", "concurrent_users": 20, "ramp_up_s": 2, "steady_s": 10, "repetitions": 2, "rest_between_runs_s": 1}],
    "product_count": 50
  })");
  auto c = parse_config_json(j);
  c.out_dir = out;
  return c;
}

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST(Cli, SimulatedRunThenReport) {
  const auto out = scratch("pipeline");
  std::ostringstream log;
  ASSERT_EQ(cli::cmd_run(small_config(out), {}, log), cli::kOk) << log.str();
  const auto raw = out / "raw";
  EXPECT_TRUE(fs::exists(raw / "manifest.json"));
  std::size_t csvs = 0;
  for (const auto& e : fs::directory_iterator(raw)) csvs += e.path().extension() == ".csv";
  EXPECT_EQ(csvs, 8u);  // 2 targets x 2 levels x 2 repetitions

  ASSERT_EQ(cli::cmd_report(raw, out, {}, log), cli::kOk) << log.str();
  for (const char* f : {"tables/response_times.csv", "tables/p95_scaling.csv", "tables/throughput.csv",
                        "tables/costs.csv", "tables/error_rates.csv", "figures/p95_by_load.svg",
                        "figures/tps_by_load.svg", "figures/cost_by_load.svg", "figures/error_by_load.svg", "summary.txt",
                        "run_summaries.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["seed"], 42);
  EXPECT_EQ(m["prng"], kPrngId);
  EXPECT_EQ(m["warnings"], 0);
  EXPECT_EQ(m["input_files"].size(), 8u);
  // Target order follows the config, not the alphabet.
  EXPECT_TRUE(slurp(out / "tables/p95_scaling.csv").starts_with("load_level,gcp,azure\n"));
}

TEST(Cli, SameSeedGivesIdenticalTables) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  std::ostringstream log;
  ASSERT_EQ(cli::cmd_run(small_config(a), {}, log), cli::kOk);
  ASSERT_EQ(cli::cmd_run(small_config(b), {}, log), cli::kOk);
  ASSERT_EQ(cli::cmd_report(a / "raw", a, {}, log), cli::kOk);
  ASSERT_EQ(cli::cmd_report(b / "raw", b, {}, log), cli::kOk);
  for (const auto& e : fs::directory_iterator(a / "tables"))
    EXPECT_EQ(slurp(e.path()), slurp(b / "tables" / e.path().filename())) << e.path();
  EXPECT_EQ(slurp(a / "figures/p95_by_load.svg"), slurp(b / "figures/p95_by_load.svg"));

  const auto c = scratch("det_c");
  cli::RunOverrides other;
  other.seed = 43;
  ASSERT_EQ(cli::cmd_run(small_config(c), other, log), cli::kOk);
  ASSERT_EQ(cli::cmd_report(c / "raw", c, {}, log), cli::kOk);
  EXPECT_NE(slurp(a / "tables/response_times.csv"), slurp(c / "tables/response_times.csv"));
}

TEST(Cli, CorruptRowCountsAsWarning) {
  const auto out = scratch("corrupt");
  std::ostringstream log;
  ASSERT_EQ(cli::cmd_run(small_config(out), {}, log), cli::kOk);
  fs::path victim;
  for (const auto& e : fs::directory_iterator(out / "raw"))
    if (e.path().extension() == ".csv") victim = e.path();
  std::ofstream(victim, std::ios::app) << "garbage,row\n";
  ASSERT_EQ(cli::cmd_report(out / "raw", out, {}, log), cli::kOk);
  EXPECT_EQ(nlohmann::json::parse(slurp(out / "manifest.json"))["warnings"], 1);
}

TEST(Cli, EmptyRawDirExits4) {
  const auto d = scratch("empty");
  std::ostringstream log;
  EXPECT_EQ(cli::cmd_report(d, d / "out", {}, log), cli::kEmptyRawDir);
  EXPECT_FALSE(fs::exists(d / "out"));
  cli::EstimateOptions o;
  o.raw_dir = d;
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_estimate(o, out, log), cli::kEmptyRawDir);
}

TEST(Cli, UnreachableTargetExits2BeforeWriting) {
  const auto d = scratch("unreachable");
  auto c = parse_config_json(nlohmann::json::parse(R"({"targets":[{"label":"x","base_url":"http://127.0.0.1:1"}]})"));
  c.out_dir = d / "out";
  std::ostringstream log;
  EXPECT_EQ(cli::cmd_run(c, {}, log), cli::kTargetUnreachable);
  EXPECT_FALSE(fs::exists(d / "out" / "raw"));
  EXPECT_NE(log.str().find("unreachable"), std::string::npos);
}

TEST(Cli, InvalidConfigExits3) {
  const auto d = scratch("badcfg");
  std::ofstream(d / "c.json") << R"({"targets":[{"label":"x","profile":"paper-gcp"}],"mix":{"transaction":1.5}})";
  std::ostringstream log;
  EXPECT_EQ(cli::cmd_run(d / "c.json", {}, log), cli::kConfigInvalid);
  EXPECT_NE(log.str().find("mix"), std::string::npos);
}

TEST(Estimate, UsageFileGivesExactTotal) {
  const auto d = scratch("estimate");
  std::ofstream(d / "u.json") << R"({"gcp":{"api_calls":1000000,"egress_bytes":1000000000}})";
  cli::EstimateOptions o;
  o.usage_path = d / "u.json";
  std::ostringstream out, log;
  ASSERT_EQ(cli::cmd_estimate(o, out, log), cli::kOk);
  const auto text = out.str();
  EXPECT_NE(text.find("\ngcp,usage,1000000,1.000000000,0.400000000,0.120000000,0.520000000\n"), std::string::npos) << text;

  std::ofstream(d / "g.json") << R"({"azure":{"api_calls":1000000,"egress_gb":1}})";
  o.usage_path = d / "g.json";
  std::ostringstream out2;
  ASSERT_EQ(cli::cmd_estimate(o, out2, log), cli::kOk);
  EXPECT_NE(out2.str().find(",0.390000000\n"), std::string::npos) << out2.str();
}

TEST(Estimate, EmptyUsageGivesZeroRows) {
  const auto d = scratch("estimate_empty");
  std::ofstream(d / "u.json") << "{}";
  cli::EstimateOptions o;
  o.usage_path = d / "u.json";
  std::ostringstream out, log;
  ASSERT_EQ(cli::cmd_estimate(o, out, log), cli::kOk);
  EXPECT_NE(out.str().find("gcp,usage,0,"), std::string::npos);
  EXPECT_NE(out.str().find("azure,usage,0,"), std::string::npos);
}

TEST(Estimate, UsageWinsOverRawDirWithWarning) {
  const auto d = scratch("estimate_both");
  std::ofstream(d / "u.json") << R"({"gcp":{"api_calls":10}})";
  cli::EstimateOptions o;
  o.usage_path = d / "u.json";
  o.raw_dir = d / "nowhere";
  std::ostringstream out, log;
  ASSERT_EQ(cli::cmd_estimate(o, out, log), cli::kOk);
  EXPECT_NE(log.str().find("warning"), std::string::npos);
  EXPECT_NE(out.str().find("gcp,usage,10,"), std::string::npos);
}

TEST(Estimate, MalformedUsageExits6) {
  const auto d = scratch("estimate_bad");
  cli::EstimateOptions o;
  std::ostringstream out, log;
  for (const char* body : {"[1,2]", R"({"gcp":{"api_calls":-5}})", R"({"gcp":{"calls":5}})", "{oops",
                           R"({"nowhere":{"api_calls":5}})"}) {
    std::ofstream(d / "u.json") << body;
    o.usage_path = d / "u.json";
    EXPECT_EQ(cli::cmd_estimate(o, out, log), cli::kMalformedUsage) << body;
  }
}

TEST(Serve, UnknownProfileExits5) {
  cli::ServeOptions o;
  o.profile = "nope";
  std::atomic<bool> stop{true};
  std::ostringstream out, log;
  EXPECT_EQ(cli::cmd_serve(o, stop, out, log), cli::kServeFailure);
}

TEST(Serve, AnswersHealthAndRejectsBusyPort) {
  std::atomic<bool> stop{false};
  std::atomic<int> port{0};
  std::ostringstream out, log;
  cli::ServeOptions o;
  o.port = 0;
  std::thread t([&] { cli::cmd_serve(o, stop, out, log, [&](int p) { port = p; }); });
  for (int i = 0; i < 200 && port == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  ASSERT_NE(port.load(), 0);
  httplib::Client client("127.0.0.1", port.load());
  const auto res = client.Get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);

  cli::ServeOptions clash;
  clash.port = port.load();
  std::atomic<bool> stop2{true};
  std::ostringstream out2, log2;
  EXPECT_EQ(cli::cmd_serve(clash, stop2, out2, log2), cli::kServeFailure);

  stop = true;
  t.join();
}
