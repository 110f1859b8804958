#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "decimal.hpp"
#include "metrics.hpp"

namespace posbench {

class CostError : public std::runtime_error {
 public:
  enum class Kind { UnknownPlatform, MalformedPricing, InsufficientEstimates };
  CostError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::int64_t kBytesPerGb = 1'000'000'000;  // decimal gigabyte

struct PlatformPricing {
  Money per_call_usd;
  Money per_gb_egress_usd;
  std::string currency = "USD";
  // Reserved for compute-time and storage components; parsed, not priced.
  std::optional<Money> per_vcpu_second_usd;
  std::optional<Money> per_gb_month_storage_usd;
};

struct PricingCatalog {
  std::map<std::string, PlatformPricing> platforms;

  const PlatformPricing* find(const std::string& platform) const {
    auto it = platforms.find(platform);
    return it == platforms.end() ? nullptr : &it->second;
  }
};

// Public list prices: per call and per decimal GB of egress.
inline PricingCatalog default_pricing() {
  PricingCatalog c;
  c.platforms["gcp"] = {Money::parse("0.0000004"), Money::parse("0.12"), "USD", std::nullopt, std::nullopt};
  c.platforms["azure"] = {Money::parse("0.0000002"), Money::parse("0.19"), "USD", std::nullopt, std::nullopt};
  return c;
}

struct UsageRecord {
  std::string platform_label;
  std::int64_t api_calls = 0;
  std::int64_t egress_bytes = 0;
};

inline UsageRecord usage_from(const MetricsSummary& s) { return {s.platform, s.total_calls, s.egress_bytes}; }

struct CostEstimate {
  std::string platform_label;
  std::string scenario;
  std::int64_t api_calls = 0;
  std::int64_t egress_bytes = 0;
  CostAmount call_cost_usd;
  CostAmount egress_cost_usd;
  CostAmount total_usd;
};

// call = calls × per-call rate; egress = bytes / 1e9 × per-GB rate. Exact.
inline CostEstimate estimate_cost(const UsageRecord& usage, const PricingCatalog& pricing) {
  const auto* rates = pricing.find(usage.platform_label);
  if (!rates) throw CostError(CostError::Kind::UnknownPlatform, "no pricing for platform '" + usage.platform_label + "'");
  if (usage.api_calls < 0 || usage.egress_bytes < 0)
    throw CostError(CostError::Kind::MalformedPricing, "usage must be non-negative");
  CostEstimate e;
  e.platform_label = usage.platform_label;
  e.api_calls = usage.api_calls;
  e.egress_bytes = usage.egress_bytes;
  e.call_cost_usd = rates->per_call_usd.rescale<CostAmount::scale>() * usage.api_calls;
  // nano-USD per 1e9 bytes == 1e-18 USD per byte.
  static_assert(CostAmount::scale - Money::scale == 9);
  e.egress_cost_usd = CostAmount::from_units(rates->per_gb_egress_usd.units() * usage.egress_bytes);
  e.total_usd = e.call_cost_usd + e.egress_cost_usd;
  return e;
}

inline PricingCatalog pricing_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& m) { throw CostError(CostError::Kind::MalformedPricing, m); };
  if (!j.is_object()) fail("pricing catalog must be a JSON object");
  PricingCatalog c;
  auto money = [&](const nlohmann::json& e, const std::string& platform, const char* key) -> Money {
    if (!e.contains(key)) fail(platform + ": missing field " + key);
    const auto& v = e.at(key);
    Money m;
    try {
      if (v.is_string()) m = Money::parse(v.get<std::string>());
      else if (v.is_number_integer()) m = Money::from_integer(v.get<std::int64_t>());
      else if (v.is_number()) m = Money::from_double(v.get<double>());
      else fail(platform + "." + key + ": not a number");
    } catch (const DecimalParseError& ex) {
      fail(platform + "." + key + ": " + ex.what());
    }
    if (m.is_negative()) fail(platform + "." + key + ": negative rate");
    return m;
  };
  for (const auto& [platform, e] : j.items()) {
    if (!e.is_object()) fail(platform + ": expected an object");
    PlatformPricing p;
    p.per_call_usd = money(e, platform, "per_call_usd");
    p.per_gb_egress_usd = money(e, platform, "per_gb_egress_usd");
    p.currency = e.value("currency", std::string("USD"));
    if (p.currency != "USD") fail(platform + ": only USD pricing is supported");
    if (e.contains("per_vcpu_second_usd")) p.per_vcpu_second_usd = money(e, platform, "per_vcpu_second_usd");
    if (e.contains("per_gb_month_storage_usd"))
      p.per_gb_month_storage_usd = money(e, platform, "per_gb_month_storage_usd");
    c.platforms[platform] = std::move(p);
  }
  return c;
}

// Missing file: embedded defaults, with a notice on `log`.
inline PricingCatalog load_pricing(const std::filesystem::path& path, std::ostream& log = std::cerr) {
  std::ifstream in(path);
  if (!in) {
    log << "notice: pricing file " << path.string() << " not found, using built-in list prices\n";
    return default_pricing();
  }
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw CostError(CostError::Kind::MalformedPricing, path.string() + " is not valid JSON");
  return pricing_from_json(j);
}

struct CostComparisonRow {
  std::string platform_label;
  std::string scenario;
  CostAmount total_usd;
  // 100 × (total − cheapest) / cheapest; absent when the cheapest total is zero
  // and this one is not.
  std::optional<double> delta_vs_cheapest_pct;
};

// Rows sorted ascending by total; the first row is the cheapest.
inline std::vector<CostComparisonRow> compare_costs(std::span<const CostEstimate> estimates) {
  if (estimates.size() < 2)
    throw CostError(CostError::Kind::InsufficientEstimates, "cost comparison needs at least two estimates");
  std::vector<CostComparisonRow> rows;
  for (const auto& e : estimates) rows.push_back({e.platform_label, e.scenario, e.total_usd, std::nullopt});
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.total_usd < b.total_usd; });
  const double cheapest = rows.front().total_usd.to_double();
  for (auto& r : rows) {
    if (r.total_usd == rows.front().total_usd) {
      r.delta_vs_cheapest_pct = 0.0;
    } else if (cheapest != 0.0) {
      r.delta_vs_cheapest_pct = -relative_difference(cheapest, r.total_usd.to_double());
    }
  }
  return rows;
}

inline std::string format_usd(const CostAmount& v) { return v.rescale<Money::scale>().to_string(); }

inline std::string format_gb(std::int64_t bytes) {
  return Decimal<9>::from_units(bytes).to_string();  // bytes are nano-GB
}

inline constexpr const char* kCostCsvHeader =
    "platform,scenario,api_calls,egress_gb,call_cost_usd,egress_cost_usd,total_usd";

inline std::string cost_csv_row(const CostEstimate& e) {
  return e.platform_label + ',' + e.scenario + ',' + std::to_string(e.api_calls) + ',' + format_gb(e.egress_bytes) +
         ',' + format_usd(e.call_cost_usd) + ',' + format_usd(e.egress_cost_usd) + ',' + format_usd(e.total_usd);
}

inline void write_cost_csv(std::ostream& os, std::span<const CostEstimate> estimates) {
  os << kCostCsvHeader << '\n';
  for (const auto& e : estimates) os << cost_csv_row(e) << '\n';
}

}  // namespace posbench
