#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "prng.hpp"
#include "target.hpp"
#include "workload.hpp"

namespace posbench {

struct LoadScenario {
  std::string name;
  std::int64_t concurrent_users = 1;
  double ramp_up_s = 60.0;
  double steady_s = 300.0;
  std::int64_t repetitions = 3;
  double rest_between_runs_s = 300.0;
  double request_timeout_ms = 10000.0;
  double think_time_ms = 0.0;

  double duration_s() const { return ramp_up_s + steady_s; }
  bool operator==(const LoadScenario&) const = default;
};

class EngineError : public std::runtime_error {
 public:
  enum class Kind { ScenarioInvalid, TargetUnreachable };
  EngineError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline void validate_scenario(const LoadScenario& s) {
  auto fail = [&](const std::string& m) {
    throw EngineError(EngineError::Kind::ScenarioInvalid, "scenario " + s.name + ": " + m);
  };
  if (s.name.empty()) fail("name must not be empty");
  if (s.concurrent_users < 1) fail("concurrent_users must be >= 1");
  if (!(s.ramp_up_s >= 0)) fail("ramp_up_s must be >= 0");
  if (!(s.steady_s > 0)) fail("steady_s must be > 0");
  if (s.repetitions < 1) fail("repetitions must be >= 1");
  if (!(s.rest_between_runs_s >= 0)) fail("rest_between_runs_s must be >= 0");
  if (!(s.request_timeout_ms > 0)) fail("request_timeout_ms must be > 0");
  if (!(s.think_time_ms >= 0)) fail("think_time_ms must be >= 0");
}

inline constexpr double kDefaultTimeoutMs = 10000.0;

// Baseline, Typical, Peak and Stress: 10/25/50/100 users, 60 s ramp,
// 300 s steady, three runs 300 s apart.
inline std::vector<LoadScenario> canonical_scenarios() {
  std::vector<LoadScenario> out;
  for (auto [name, users] : {std::pair{"baseline", 10}, {"typical", 25}, {"peak", 50}, {"stress", 100}})
    out.push_back({name, users, 60.0, 300.0, 3, 300.0, kDefaultTimeoutMs, 0.0});
  return out;
}

// ---------------------------------------------------------------------------
// Ramp schedule

// Users active at elapsed t: ceil(users * t / ramp) during the ramp,
// all users afterwards, none at t <= 0.
inline std::int64_t ramp_active_users(const LoadScenario& s, double t) {
  if (t <= 0.0) return 0;
  if (s.ramp_up_s <= 0.0 || t >= s.ramp_up_s) return s.concurrent_users;
  const double exact = static_cast<double>(s.concurrent_users) * t / s.ramp_up_s;
  // Guard against products like 10*30/60 landing a hair above an integer.
  const double rounded = std::round(exact);
  const auto n = std::abs(exact - rounded) < 1e-9 ? static_cast<std::int64_t>(rounded)
                                                  : static_cast<std::int64_t>(std::ceil(exact));
  return std::min(n, s.concurrent_users);
}

inline std::function<std::int64_t(double)> ramp_schedule(const LoadScenario& s) {
  return [s](double t) { return ramp_active_users(s, t); };
}

// Offset at which user `index` (0-based) begins: just after ramp * index / users.
inline double user_start_offset_s(const LoadScenario& s, std::int64_t index) {
  return s.ramp_up_s * static_cast<double>(index) / static_cast<double>(s.concurrent_users);
}

// ---------------------------------------------------------------------------
// Results

enum class Outcome { Success, HttpError, Timeout, TransportError };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::HttpError: return "http_error";
    case Outcome::Timeout: return "timeout";
    case Outcome::TransportError: return "transport_error";
  }
  return "?";
}

inline std::optional<Outcome> parse_outcome(std::string_view s) {
  for (auto o : {Outcome::Success, Outcome::HttpError, Outcome::Timeout, Outcome::TransportError})
    if (to_string(o) == s) return o;
  return std::nullopt;
}

// Timeout first, then transport failure, then status class. Redirects are errors.
inline Outcome classify_outcome(std::optional<int> status, bool transport_failure, double elapsed_ms,
                                double timeout_ms) {
  if (elapsed_ms >= timeout_ms) return Outcome::Timeout;
  if (transport_failure || !status) return Outcome::TransportError;
  if (*status >= 200 && *status <= 299) return Outcome::Success;
  return Outcome::HttpError;
}

struct RequestResult {
  std::string run_id;
  std::int64_t user_index = 0;
  std::string operation_name;
  OperationCategory category = OperationCategory::Transaction;
  double start_offset_ms = 0.0;
  double latency_ms = 0.0;
  Outcome outcome = Outcome::Success;
  std::optional<int> status_code;
  std::int64_t bytes_out = 0;
  std::int64_t bytes_in = 0;
};

struct RunRecord {
  std::string run_id;
  LoadScenario scenario;
  std::string target_label;
  std::string platform;  // pricing catalog key
  std::string mode = "http";
  std::uint64_t seed = 0;
  WallTime started_at{};
  std::vector<RequestResult> results;
  std::uint64_t issued = 0;  // independent count of requests sent
};

// ---------------------------------------------------------------------------
// Transport contract

struct TransportResponse {
  std::optional<int> status;
  std::string body;
  bool transport_failure = false;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResponse send(const RequestDescriptor& req, double timeout_ms) = 0;
  // Connectivity check issued before any virtual user starts.
  virtual bool probe() = 0;
  // Restores the target's initial state when supported; returns false otherwise.
  virtual bool reset() { return false; }
};

using TransportFactory = std::function<std::unique_ptr<Transport>()>;

// One virtual user's sampling and session state.
class VirtualUser {
 public:
  VirtualUser(const CatalogIndex& index, const WorkloadMix& mix, std::uint64_t seed, std::int64_t user_index,
              std::int64_t product_count)
      : index_(index), mix_(mix), rng_(seed, static_cast<std::uint64_t>(user_index)), user_index_(user_index) {
    session_.product_count = product_count;
  }

  RequestDescriptor next() {
    const auto& spec = sample_operation(index_, mix_, rng_);
    return build_request(spec, session_, rng_, index_);
  }

  void observe(const RequestDescriptor& req, std::optional<int> status, std::string_view body) {
    if (status) session_.observe(req, *status, body);
  }

  std::int64_t index() const { return user_index_; }

 private:
  const CatalogIndex& index_;
  const WorkloadMix& mix_;
  Rng rng_;
  SessionState session_;
  std::int64_t user_index_;
};

struct RunSettings {
  std::string run_id;
  std::string target_label;
  std::string platform;
  std::uint64_t seed = 0;
  std::optional<WallTime> wall_anchor;  // shape calendar origin; defaults to the run start
  std::int64_t product_count = 1000;
};

namespace detail {

inline RequestResult make_result(const RunSettings& s, std::int64_t user, const RequestDescriptor& req,
                                 double start_ms, double latency_ms, Outcome outcome, std::optional<int> status,
                                 std::size_t bytes_in) {
  RequestResult r;
  r.run_id = s.run_id;
  r.user_index = user;
  r.operation_name = req.operation;
  r.category = req.category;
  r.start_offset_ms = start_ms;
  r.latency_ms = latency_ms;
  r.outcome = outcome;
  if (outcome != Outcome::Timeout && outcome != Outcome::TransportError) r.status_code = status;
  r.bytes_out = static_cast<std::int64_t>(req.body.size());
  r.bytes_in = static_cast<std::int64_t>(bytes_in);
  return r;
}

inline void sort_results(std::vector<RequestResult>& results) {
  std::stable_sort(results.begin(), results.end(), [](const RequestResult& a, const RequestResult& b) {
    if (a.start_offset_ms != b.start_offset_ms) return a.start_offset_ms < b.start_offset_ms;
    return a.user_index < b.user_index;
  });
}

inline WallTime wall_now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

}  // namespace detail

// Closed-loop execution in real time: one thread per virtual user, each
// with its own transport, rng stream and session.
inline RunRecord run_scenario(const LoadScenario& scenario, const CatalogIndex& index, const WorkloadMix& mix,
                              const TrafficShape& shape, const TransportFactory& make_transport,
                              const RunSettings& settings) {
  validate_scenario(scenario);
  validate_mix(mix);
  validate_shape(shape);
  {
    auto probe = make_transport();
    if (!probe->probe())
      throw EngineError(EngineError::Kind::TargetUnreachable, "target " + settings.target_label + " unreachable");
  }

  RunRecord run;
  run.run_id = settings.run_id;
  run.scenario = scenario;
  run.target_label = settings.target_label;
  run.platform = settings.platform.empty() ? settings.target_label : settings.platform;
  run.seed = settings.seed;
  run.started_at = detail::wall_now();
  const WallTime anchor = settings.wall_anchor.value_or(run.started_at);

  const auto users = static_cast<std::size_t>(scenario.concurrent_users);
  std::vector<std::unique_ptr<Transport>> transports;
  transports.reserve(users);
  for (std::size_t i = 0; i < users; ++i) transports.push_back(make_transport());

  std::vector<std::vector<RequestResult>> per_user(users);
  std::atomic<std::uint64_t> issued{0};
  const auto start = std::chrono::steady_clock::now();
  const double end_s = scenario.duration_s();
  auto elapsed_s = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  std::vector<std::thread> threads;
  threads.reserve(users);
  for (std::size_t i = 0; i < users; ++i) {
    threads.emplace_back([&, i] {
      const auto user_index = static_cast<std::int64_t>(i);
      VirtualUser user(index, mix, settings.seed, user_index, settings.product_count);
      Transport& transport = *transports[i];
      auto& out = per_user[i];
      std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                std::chrono::duration<double>(user_start_offset_s(scenario, user_index))));
      while (true) {
        const auto t0 = std::chrono::steady_clock::now();
        const double start_s = std::chrono::duration<double>(t0 - start).count();
        if (start_s >= end_s) break;
        auto req = user.next();
        issued.fetch_add(1, std::memory_order_relaxed);
        auto resp = transport.send(req, scenario.request_timeout_ms);
        const double latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const auto outcome =
            classify_outcome(resp.status, resp.transport_failure, latency_ms, scenario.request_timeout_ms);
        out.push_back(detail::make_result(settings, user_index, req, start_s * 1000.0, latency_ms, outcome,
                                          resp.status, resp.body.size()));
        if (outcome != Outcome::Timeout) user.observe(req, resp.status, resp.body);
        if (scenario.think_time_ms > 0.0) {
          const double pause_ms = scenario.think_time_ms / shape_multiplier(shape, elapsed_s(), anchor);
          const double remaining_ms = (end_s - elapsed_s()) * 1000.0;
          if (remaining_ms > 0)
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(std::min(pause_ms, remaining_ms)));
        }
      }
    });
  }
  for (auto& t : threads) t.join();

  for (auto& v : per_user) std::move(v.begin(), v.end(), std::back_inserter(run.results));
  detail::sort_results(run.results);
  run.issued = issued.load();
  return run;
}

struct SimulationSettings {
  double network_ms = 1.0;  // fixed transfer time added to every emulated delay
  WallTime wall_anchor = WallTime{std::chrono::sys_days{std::chrono::year{2024} / 1 / 1}};
};

// Closed-loop execution in virtual time against an in-process emulated
// target: a discrete-event simulation with no wall-clock dependence.
// `clock_s` is the target's virtual clock at run start; returns the clock
// after the last response (or release) of the run.
inline RunRecord simulate_scenario(const LoadScenario& scenario, const CatalogIndex& index, const WorkloadMix& mix,
                                   const TrafficShape& shape, EmulatedTarget& target, const RunSettings& settings,
                                   const SimulationSettings& sim, double& clock_s) {
  validate_scenario(scenario);
  validate_mix(mix);
  validate_shape(shape);

  RunRecord run;
  run.run_id = settings.run_id;
  run.scenario = scenario;
  run.target_label = settings.target_label;
  run.platform = settings.platform.empty() ? settings.target_label : settings.platform;
  run.mode = "simulated";
  run.seed = settings.seed;
  const auto origin = clock_s;
  run.started_at = sim.wall_anchor + std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(origin * 1000.0)));
  const WallTime anchor = settings.wall_anchor.value_or(run.started_at);

  enum Kind { Release = 0, Arrival = 1 };
  struct Event {
    double t;
    int kind;
    std::int64_t user;
    bool operator>(const Event& o) const {
      if (t != o.t) return t > o.t;
      if (kind != o.kind) return kind > o.kind;
      return user > o.user;
    }
  };
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;

  std::vector<VirtualUser> users;
  users.reserve(static_cast<std::size_t>(scenario.concurrent_users));
  for (std::int64_t u = 0; u < scenario.concurrent_users; ++u) {
    users.emplace_back(index, mix, settings.seed, u, settings.product_count);
    events.push({user_start_offset_s(scenario, u), Arrival, u});
  }

  const double end_s = scenario.duration_s();
  const double timeout_s = scenario.request_timeout_ms / 1000.0;
  double last_t = 0.0;
  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    last_t = std::max(last_t, ev.t);
    if (ev.kind == Release) {
      target.end(origin + ev.t);
      continue;
    }
    if (ev.t >= end_s) continue;
    auto& user = users[static_cast<std::size_t>(ev.user)];
    auto req = user.next();
    ++run.issued;
    ServiceRequest sreq;
    sreq.method = req.method;
    const auto q = req.path.find('?');
    sreq.path = req.path.substr(0, q);
    sreq.body = req.body;
    sreq.now_ms = (run.started_at + std::chrono::milliseconds(std::llround(ev.t * 1000.0))).time_since_epoch().count();
    auto pending = target.begin(sreq, origin + ev.t);
    const double service_s = (pending.delay_ms + sim.network_ms) / 1000.0;
    if (pending.emulated) events.push({ev.t + service_s, Release, ev.user});

    double done_s = ev.t + service_s;
    std::optional<int> status = pending.response.status;
    std::size_t bytes_in = pending.response.body.size();
    double latency_ms = service_s * 1000.0;
    auto outcome = classify_outcome(status, false, latency_ms, scenario.request_timeout_ms);
    if (outcome == Outcome::Timeout) {
      done_s = ev.t + timeout_s;
      latency_ms = scenario.request_timeout_ms;
      bytes_in = 0;
    } else {
      user.observe(req, status, pending.response.body);
    }
    run.results.push_back(
        detail::make_result(settings, ev.user, req, ev.t * 1000.0, latency_ms, outcome, status, bytes_in));
    double next = done_s;
    if (scenario.think_time_ms > 0.0)
      next += scenario.think_time_ms / shape_multiplier(shape, done_s, anchor) / 1000.0;
    events.push({next, Arrival, ev.user});
  }
  clock_s = origin + std::max(last_t, end_s);
  detail::sort_results(run.results);
  return run;
}

// ---------------------------------------------------------------------------
// Campaigns

struct CampaignRecord {
  std::vector<RunRecord> runs;
};

inline std::string make_run_id(const std::string& label, const std::string& scenario, std::int64_t repetition) {
  return label + "-" + scenario + "-" + std::to_string(repetition);
}

// Executes every scenario `repetitions` times, resting between consecutive
// runs. Run seeds are seed + run ordinal. `on_run` sees each run as soon as
// it completes, so results persist even if a later run aborts.
template <typename RunFn, typename RestFn>
CampaignRecord execute_campaign(const std::vector<LoadScenario>& scenarios, std::uint64_t seed,
                                const std::string& target_label, RunFn&& run_one, RestFn&& rest,
                                const std::function<void(const RunRecord&)>& on_run = {}) {
  if (scenarios.empty()) throw EngineError(EngineError::Kind::ScenarioInvalid, "campaign has no scenarios");
  for (const auto& s : scenarios) validate_scenario(s);
  CampaignRecord campaign;
  std::uint64_t ordinal = 0;
  for (const auto& s : scenarios) {
    for (std::int64_t rep = 1; rep <= s.repetitions; ++rep) {
      if (ordinal > 0) rest(s.rest_between_runs_s);
      RunSettings settings;
      settings.run_id = make_run_id(target_label, s.name, rep);
      settings.target_label = target_label;
      settings.seed = seed + ordinal;
      RunRecord run = run_one(s, settings);
      if (on_run) on_run(run);
      campaign.runs.push_back(std::move(run));
      ++ordinal;
    }
  }
  return campaign;
}

// Real-time campaign against a transport (live URL or embedded server).
inline CampaignRecord execute_campaign(const std::vector<LoadScenario>& scenarios, const CatalogIndex& index,
                                       const WorkloadMix& mix, const TrafficShape& shape,
                                       const TransportFactory& make_transport, std::uint64_t seed,
                                       const RunSettings& base, bool reset_before_run = false,
                                       const std::function<void(const RunRecord&)>& on_run = {}) {
  return execute_campaign(
      scenarios, seed, base.target_label,
      [&](const LoadScenario& s, RunSettings settings) {
        settings.platform = base.platform;
        settings.wall_anchor = base.wall_anchor;
        settings.product_count = base.product_count;
        if (reset_before_run) make_transport()->reset();
        return run_scenario(s, index, mix, shape, make_transport, settings);
      },
      [](double seconds) { std::this_thread::sleep_for(std::chrono::duration<double>(seconds)); }, on_run);
}

// Virtual-time campaign; rests advance the virtual clock (and so can trigger
// cold starts).
inline CampaignRecord simulate_campaign(const std::vector<LoadScenario>& scenarios, const CatalogIndex& index,
                                        const WorkloadMix& mix, const TrafficShape& shape, EmulatedTarget& target,
                                        std::uint64_t seed, const RunSettings& base, const SimulationSettings& sim,
                                        const std::function<std::vector<Product>()>& fixture = {},
                                        const std::function<void(const RunRecord&)>& on_run = {}) {
  double clock_s = 0.0;
  return execute_campaign(
      scenarios, seed, base.target_label,
      [&](const LoadScenario& s, RunSettings settings) {
        settings.platform = base.platform;
        settings.wall_anchor = base.wall_anchor;
        settings.product_count = base.product_count;
        if (fixture) target.service().reset(fixture());
        return simulate_scenario(s, index, mix, shape, target, settings, sim, clock_s);
      },
      [&](double seconds) { clock_s += seconds; }, on_run);
}

// ---------------------------------------------------------------------------
// Persistence: <run_id>.csv with one row per result, <run_id>.json metadata.

inline constexpr const char* kRawCsvHeader =
    "run_id,scenario,target_label,user_index,operation,category,start_offset_ms,latency_ms,outcome,status_code,"
    "bytes_out,bytes_in";

namespace detail {
inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

inline std::string iso8601(WallTime t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld.%03ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()), static_cast<long>(hms.subseconds().count()));
  return buf;
}

inline std::optional<WallTime> parse_iso8601(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, ms = 0;
  const int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d.%dZ", &y, &mo, &d, &h, &mi, &sec, &ms);
  if (n < 6) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return WallTime{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{ms};
}
}  // namespace detail

inline void write_results_csv(std::ostream& os, const RunRecord& run) {
  os << kRawCsvHeader << '\n';
  for (const auto& r : run.results) {
    os << r.run_id << ',' << run.scenario.name << ',' << run.target_label << ',' << r.user_index << ','
       << r.operation_name << ',' << to_string(r.category) << ',' << detail::fixed(r.start_offset_ms, 3) << ','
       << detail::fixed(r.latency_ms, 3) << ',' << to_string(r.outcome) << ','
       << (r.status_code ? std::to_string(*r.status_code) : std::string()) << ',' << r.bytes_out << ','
       << r.bytes_in << '\n';
  }
}

inline nlohmann::json scenario_to_json(const LoadScenario& s) {
  return {{"name", s.name},
          {"concurrent_users", s.concurrent_users},
          {"ramp_up_s", s.ramp_up_s},
          {"steady_s", s.steady_s},
          {"repetitions", s.repetitions},
          {"rest_between_runs_s", s.rest_between_runs_s},
          {"request_timeout_ms", s.request_timeout_ms},
          {"think_time_ms", s.think_time_ms}};
}

inline nlohmann::json run_metadata(const RunRecord& run) {
  return {{"run_id", run.run_id},
          {"scenario", scenario_to_json(run.scenario)},
          {"target_label", run.target_label},
          {"platform", run.platform},
          {"mode", run.mode},
          {"seed", run.seed},
          {"prng", kPrngId},
          {"started_at", detail::iso8601(run.started_at)},
          {"issued", run.issued},
          {"result_count", run.results.size()}};
}

inline void save_run(const std::filesystem::path& dir, const RunRecord& run) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / (run.run_id + ".csv"));
    write_results_csv(out, run);
  }
  std::ofstream meta(dir / (run.run_id + ".json"));
  meta << run_metadata(run).dump(2) << '\n';
}

struct LoadedRun {
  RunRecord run;
  std::size_t skipped_rows = 0;
};

// Reads a run back; rows that do not parse are skipped and counted.
inline LoadedRun load_run(const std::filesystem::path& csv_path) {
  LoadedRun loaded;
  auto& run = loaded.run;
  auto meta_path = csv_path;
  meta_path.replace_extension(".json");
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw std::runtime_error("missing run metadata " + meta_path.string());
  const auto meta = nlohmann::json::parse(meta_in);
  const auto& sj = meta.at("scenario");
  run.run_id = meta.at("run_id").get<std::string>();
  run.scenario = {sj.at("name").get<std::string>(),
                  sj.at("concurrent_users").get<std::int64_t>(),
                  sj.at("ramp_up_s").get<double>(),
                  sj.at("steady_s").get<double>(),
                  sj.at("repetitions").get<std::int64_t>(),
                  sj.at("rest_between_runs_s").get<double>(),
                  sj.at("request_timeout_ms").get<double>(),
                  sj.at("think_time_ms").get<double>()};
  run.target_label = meta.at("target_label").get<std::string>();
  run.platform = meta.value("platform", run.target_label);
  run.mode = meta.value("mode", std::string("http"));
  run.seed = meta.value("seed", std::uint64_t{0});
  run.issued = meta.value("issued", std::uint64_t{0});
  if (auto t = detail::parse_iso8601(meta.value("started_at", std::string()))) run.started_at = *t;

  std::ifstream in(csv_path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    try {
      if (f.size() != 12) throw std::invalid_argument("field count");
      RequestResult r;
      r.run_id = f[0];
      r.user_index = std::stoll(f[3]);
      r.operation_name = f[4];
      auto cat = parse_category(f[5]);
      auto outcome = parse_outcome(f[8]);
      if (!cat || !outcome || r.run_id != run.run_id || f[1] != run.scenario.name || f[2] != run.target_label)
        throw std::invalid_argument("field value");
      r.category = *cat;
      std::size_t pos = 0;
      r.start_offset_ms = std::stod(f[6], &pos);
      if (pos != f[6].size()) throw std::invalid_argument("start_offset_ms");
      r.latency_ms = std::stod(f[7], &pos);
      if (pos != f[7].size() || r.latency_ms < 0) throw std::invalid_argument("latency_ms");
      r.outcome = *outcome;
      if (!f[9].empty()) r.status_code = std::stoi(f[9]);
      r.bytes_out = std::stoll(f[10]);
      r.bytes_in = std::stoll(f[11]);
      run.results.push_back(std::move(r));
    } catch (const std::exception&) {
      ++loaded.skipped_rows;
    }
  }
  return loaded;
}

}  // namespace posbench
