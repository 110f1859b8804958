#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "costs.hpp"
#include "digest.hpp"
#include "engine.hpp"
#include "target.hpp"
#include "workload.hpp"

namespace posbench {

class ConfigInvalid : public std::runtime_error {
 public:
  ConfigInvalid(std::string field, const std::string& reason)
      : std::runtime_error((field.empty() ? std::string("config") : field) + ": " + reason), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class TargetMode { Http, Simulated };

struct TargetConfig {
  std::string label;
  std::string base_url;  // live endpoint; empty when `profile` is used
  std::string profile;   // embedded target profile name or file
  TargetMode mode = TargetMode::Http;
  std::string platform;  // pricing key, defaults to the label
  std::optional<EmulationProfile> resolved;

  bool embedded() const { return base_url.empty(); }
};

struct CampaignConfig {
  std::vector<TargetConfig> targets;
  std::vector<LoadScenario> scenarios = canonical_scenarios();
  WorkloadMix mix;
  TrafficShape shape;
  std::vector<OperationSpec> catalog = default_catalog();
  std::optional<std::filesystem::path> catalog_path;
  std::optional<std::filesystem::path> pricing_path;
  PricingCatalog pricing = default_pricing();
  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "out";
  std::int64_t product_count = 1000;
  std::string digest;  // fingerprint of the source text
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> known) {
  std::set<std::string> k(known.begin(), known.end());
  for (const auto& [key, _] : j.items())
    if (!k.count(key)) throw ConfigInvalid(where.empty() ? key : where + "." + key, "unknown key");
}

inline const nlohmann::json& expect(const nlohmann::json& j, const std::string& field, nlohmann::json::value_t type) {
  auto ok = j.type() == type || (type == nlohmann::json::value_t::number_float && j.is_number()) ||
            (type == nlohmann::json::value_t::number_unsigned && j.is_number_integer() && j.get<std::int64_t>() >= 0);
  if (!ok) {
    const char* name = "a value";
    switch (type) {
      case nlohmann::json::value_t::string: name = "a string"; break;
      case nlohmann::json::value_t::number_float: name = "a number"; break;
      case nlohmann::json::value_t::number_integer: name = "an integer"; break;
      case nlohmann::json::value_t::number_unsigned: name = "a non-negative integer"; break;
      case nlohmann::json::value_t::array: name = "an array"; break;
      case nlohmann::json::value_t::object: name = "an object"; break;
      default: break;
    }
    throw ConfigInvalid(field, std::string("expected ") + name);
  }
  return j;
}

inline std::string get_string(const nlohmann::json& j, const std::string& field) {
  return expect(j, field, nlohmann::json::value_t::string).get<std::string>();
}
inline double get_number(const nlohmann::json& j, const std::string& field) {
  return expect(j, field, nlohmann::json::value_t::number_float).get<double>();
}
inline std::int64_t get_integer(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigInvalid(field, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::filesystem::path resolve_path(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

inline TargetConfig parse_target(const nlohmann::json& j, const std::string& at) {
  expect(j, at, nlohmann::json::value_t::object);
  reject_unknown(j, at, {"label", "base_url", "profile", "mode", "platform"});
  TargetConfig t;
  if (!j.contains("label")) throw ConfigInvalid(at + ".label", "required");
  t.label = get_string(j.at("label"), at + ".label");
  if (t.label.empty() || t.label.find_first_of(",/\\ ") != std::string::npos)
    throw ConfigInvalid(at + ".label", "must be non-empty without commas, slashes or spaces");
  const bool has_url = j.contains("base_url"), has_profile = j.contains("profile");
  if (has_url == has_profile) throw ConfigInvalid(at, "exactly one of base_url or profile is required");
  if (has_url) {
    t.base_url = get_string(j.at("base_url"), at + ".base_url");
    if (!t.base_url.starts_with("http://") && !t.base_url.starts_with("https://"))
      throw ConfigInvalid(at + ".base_url", "must start with http:// or https://");
  } else {
    t.profile = get_string(j.at("profile"), at + ".profile");
  }
  if (j.contains("mode")) {
    const auto m = get_string(j.at("mode"), at + ".mode");
    if (m == "http") t.mode = TargetMode::Http;
    else if (m == "simulated") t.mode = TargetMode::Simulated;
    else throw ConfigInvalid(at + ".mode", "must be \"http\" or \"simulated\"");
    if (has_url && t.mode == TargetMode::Simulated)
      throw ConfigInvalid(at + ".mode", "simulated mode needs an embedded profile");
  }
  t.platform = j.contains("platform") ? get_string(j.at("platform"), at + ".platform") : t.label;
  return t;
}

inline LoadScenario parse_scenario(const nlohmann::json& j, const std::string& at) {
  expect(j, at, nlohmann::json::value_t::object);
  reject_unknown(j, at,
                 {"name", "concurrent_users", "ramp_up_s", "steady_s", "repetitions", "rest_between_runs_s",
                  "request_timeout_ms", "think_time_ms"});
  if (!j.contains("name")) throw ConfigInvalid(at + ".name", "required");
  if (!j.contains("concurrent_users")) throw ConfigInvalid(at + ".concurrent_users", "required");
  LoadScenario s;
  s.name = get_string(j.at("name"), at + ".name");
  s.concurrent_users = get_integer(j.at("concurrent_users"), at + ".concurrent_users");
  if (j.contains("ramp_up_s")) s.ramp_up_s = get_number(j.at("ramp_up_s"), at + ".ramp_up_s");
  if (j.contains("steady_s")) s.steady_s = get_number(j.at("steady_s"), at + ".steady_s");
  if (j.contains("repetitions")) s.repetitions = get_integer(j.at("repetitions"), at + ".repetitions");
  if (j.contains("rest_between_runs_s"))
    s.rest_between_runs_s = get_number(j.at("rest_between_runs_s"), at + ".rest_between_runs_s");
  if (j.contains("request_timeout_ms"))
    s.request_timeout_ms = get_number(j.at("request_timeout_ms"), at + ".request_timeout_ms");
  if (j.contains("think_time_ms")) s.think_time_ms = get_number(j.at("think_time_ms"), at + ".think_time_ms");
  try {
    validate_scenario(s);
  } catch (const EngineError& e) {
    throw ConfigInvalid(at, e.what());
  }
  return s;
}

template <std::size_t N>
inline void parse_multipliers(const nlohmann::json& j, const std::string& at, std::array<double, N>& out) {
  expect(j, at, nlohmann::json::value_t::array);
  if (j.size() != N) throw ConfigInvalid(at, "expected " + std::to_string(N) + " entries");
  for (std::size_t i = 0; i < N; ++i) out[i] = get_number(j[i], at + "[" + std::to_string(i) + "]");
}

}  // namespace detail

// Parses and validates a campaign config. Relative paths resolve against
// `base_dir`. Every error names the offending field.
inline CampaignConfig parse_config_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using detail::get_integer;
  using detail::get_number;
  using detail::get_string;
  detail::expect(j, "", nlohmann::json::value_t::object);
  detail::reject_unknown(j, "",
                         {"targets", "scenarios", "mix", "shape", "catalog", "pricing", "seed", "out_dir",
                          "product_count"});
  CampaignConfig c;

  if (!j.contains("targets")) throw ConfigInvalid("targets", "required");
  const auto& tj = detail::expect(j.at("targets"), "targets", nlohmann::json::value_t::array);
  if (tj.empty()) throw ConfigInvalid("targets", "at least one target is required");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < tj.size(); ++i) {
    const auto at = "targets[" + std::to_string(i) + "]";
    auto t = detail::parse_target(tj[i], at);
    if (!labels.insert(t.label).second) throw ConfigInvalid(at + ".label", "duplicate label '" + t.label + "'");
    if (t.embedded()) {
      try {
        t.resolved = named_profile(t.profile);
        if (!t.resolved) t.resolved = resolve_profile(detail::resolve_path(t.profile, base_dir).string());
      } catch (const ProfileError& e) {
        throw ConfigInvalid(at + ".profile", e.what());
      }
    }
    c.targets.push_back(std::move(t));
  }

  if (j.contains("scenarios")) {
    const auto& sj = detail::expect(j.at("scenarios"), "scenarios", nlohmann::json::value_t::array);
    if (sj.empty()) throw ConfigInvalid("scenarios", "at least one scenario is required");
    c.scenarios.clear();
    std::set<std::string> names;
    for (std::size_t i = 0; i < sj.size(); ++i) {
      const auto at = "scenarios[" + std::to_string(i) + "]";
      auto s = detail::parse_scenario(sj[i], at);
      if (!names.insert(s.name).second) throw ConfigInvalid(at + ".name", "duplicate scenario '" + s.name + "'");
      c.scenarios.push_back(std::move(s));
    }
  }

  if (j.contains("mix")) {
    const auto& mj = detail::expect(j.at("mix"), "mix", nlohmann::json::value_t::object);
    detail::reject_unknown(mj, "mix", {"transaction", "inventory", "analytics"});
    if (mj.contains("transaction")) c.mix.transaction_weight = get_number(mj.at("transaction"), "mix.transaction");
    if (mj.contains("inventory")) c.mix.inventory_weight = get_number(mj.at("inventory"), "mix.inventory");
    if (mj.contains("analytics")) c.mix.analytics_weight = get_number(mj.at("analytics"), "mix.analytics");
    try {
      validate_mix(c.mix);
    } catch (const WorkloadError& e) {
      throw ConfigInvalid("mix", e.what());
    }
  }

  if (j.contains("shape")) {
    const auto& sj = detail::expect(j.at("shape"), "shape", nlohmann::json::value_t::object);
    detail::reject_unknown(sj, "shape", {"hourly", "weekday", "seasonal"});
    if (sj.contains("hourly")) detail::parse_multipliers(sj.at("hourly"), "shape.hourly", c.shape.hourly_multipliers);
    if (sj.contains("weekday"))
      detail::parse_multipliers(sj.at("weekday"), "shape.weekday", c.shape.weekday_multipliers);
    if (sj.contains("seasonal")) c.shape.seasonal_multiplier = get_number(sj.at("seasonal"), "shape.seasonal");
    try {
      validate_shape(c.shape);
    } catch (const WorkloadError& e) {
      throw ConfigInvalid("shape", e.what());
    }
  }

  if (j.contains("catalog")) {
    c.catalog_path = detail::resolve_path(get_string(j.at("catalog"), "catalog"), base_dir);
    try {
      c.catalog = load_catalog(*c.catalog_path);
    } catch (const WorkloadError& e) {
      throw ConfigInvalid("catalog", e.what());
    }
  }

  if (j.contains("pricing")) {
    c.pricing_path = detail::resolve_path(get_string(j.at("pricing"), "pricing"), base_dir);
    try {
      std::ostringstream notice;
      c.pricing = load_pricing(*c.pricing_path, notice);
    } catch (const CostError& e) {
      throw ConfigInvalid("pricing", e.what());
    }
  }

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() >= 0))
      throw ConfigInvalid("seed", "expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("out_dir")) c.out_dir = detail::resolve_path(get_string(j.at("out_dir"), "out_dir"), base_dir);
  if (j.contains("product_count")) {
    c.product_count = get_integer(j.at("product_count"), "product_count");
    if (c.product_count < 1) throw ConfigInvalid("product_count", "must be >= 1");
  }
  c.digest = hex64(fnv1a64(j.dump()));
  return c;
}

inline CampaignConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigInvalid("", "cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigInvalid("", path.string() + " is not valid JSON");
  auto c = parse_config_json(j, path.parent_path());
  c.digest = hex64(fnv1a64(text));
  return c;
}

// Shortened durations for quick runs; user counts and the mix are untouched.
inline CampaignConfig desk_scaled(CampaignConfig c) {
  for (auto& s : c.scenarios) {
    s.steady_s = 30.0;
    s.rest_between_runs_s = 2.0;
    s.repetitions = 1;
  }
  return c;
}

}  // namespace posbench
