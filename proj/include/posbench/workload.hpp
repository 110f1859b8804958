#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prng.hpp"

namespace posbench {

enum class OperationCategory { Transaction, Inventory, Analytics };

inline constexpr std::array<OperationCategory, 3> kCategoryOrder = {
    OperationCategory::Transaction, OperationCategory::Inventory, OperationCategory::Analytics};

inline std::string_view to_string(OperationCategory c) {
  switch (c) {
    case OperationCategory::Transaction: return "transaction";
    case OperationCategory::Inventory: return "inventory";
    case OperationCategory::Analytics: return "analytics";
  }
  return "?";
}

inline std::optional<OperationCategory> parse_category(std::string_view s) {
  for (auto c : kCategoryOrder)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

class WorkloadError : public std::runtime_error {
 public:
  enum class Kind { MixInvalid, EmptyCategory, UnresolvablePlaceholder, CatalogInvalid, ShapeInvalid };
  WorkloadError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct OperationSpec {
  std::string name;
  OperationCategory category = OperationCategory::Transaction;
  std::string method = "GET";
  std::string path_template;
  std::uint64_t payload_bytes = 0;
  std::uint64_t expected_response_bytes = 0;
  double intra_category_weight = 1.0;

  bool operator==(const OperationSpec&) const = default;
};

struct WorkloadMix {
  double transaction_weight = 0.60;
  double inventory_weight = 0.30;
  double analytics_weight = 0.10;

  double weight(OperationCategory c) const {
    switch (c) {
      case OperationCategory::Transaction: return transaction_weight;
      case OperationCategory::Inventory: return inventory_weight;
      case OperationCategory::Analytics: return analytics_weight;
    }
    return 0.0;
  }
};

inline constexpr double kMixTolerance = 1e-9;

// Throws WorkloadError(MixInvalid) naming the offending values.
inline void validate_mix(const WorkloadMix& mix) {
  const double w[] = {mix.transaction_weight, mix.inventory_weight, mix.analytics_weight};
  const double sum = w[0] + w[1] + w[2];
  bool ok = std::abs(sum - 1.0) <= kMixTolerance;
  for (double x : w) ok = ok && std::isfinite(x) && x >= 0.0 && x <= 1.0;
  if (!ok) {
    std::ostringstream os;
    os << "mix weights (" << w[0] << ", " << w[1] << ", " << w[2] << ") must each lie in [0,1] and sum to 1 (sum="
       << sum << ")";
    throw WorkloadError(WorkloadError::Kind::MixInvalid, os.str());
  }
}

inline bool is_valid_mix(const WorkloadMix& mix) {
  try {
    validate_mix(mix);
    return true;
  } catch (const WorkloadError&) {
    return false;
  }
}

// Cumulative walk over (transaction, inventory, analytics); u in [0,1).
inline OperationCategory sample_category(const WorkloadMix& mix, double u) {
  double acc = 0.0;
  for (auto c : kCategoryOrder) {
    acc += mix.weight(c);
    if (u < acc) return c;
  }
  // u landed in floating-point slack above the last boundary.
  for (auto it = kCategoryOrder.rbegin(); it != kCategoryOrder.rend(); ++it)
    if (mix.weight(*it) > 0.0) return *it;
  return OperationCategory::Transaction;
}

// ---------------------------------------------------------------------------
// Traffic shape

struct TrafficShape {
  std::array<double, 24> hourly_multipliers;
  std::array<double, 7> weekday_multipliers;  // index 0 = Monday
  double seasonal_multiplier = 1.0;

  TrafficShape() {
    hourly_multipliers.fill(1.0);
    weekday_multipliers.fill(1.0);
  }
  static TrafficShape identity() { return {}; }
};

inline void validate_shape(const TrafficShape& s) {
  auto bad = [](double v) { return !(std::isfinite(v) && v > 0.0); };
  for (double v : s.hourly_multipliers)
    if (bad(v)) throw WorkloadError(WorkloadError::Kind::ShapeInvalid, "hourly multipliers must be > 0");
  for (double v : s.weekday_multipliers)
    if (bad(v)) throw WorkloadError(WorkloadError::Kind::ShapeInvalid, "weekday multipliers must be > 0");
  if (bad(s.seasonal_multiplier))
    throw WorkloadError(WorkloadError::Kind::ShapeInvalid, "seasonal multiplier must be > 0");
}

using WallTime = std::chrono::sys_time<std::chrono::milliseconds>;

// Multiplier in effect at wall_anchor + timestamp_s (UTC calendar).
inline double shape_multiplier(const TrafficShape& shape, double timestamp_s, WallTime wall_anchor) {
  using namespace std::chrono;
  const auto t = wall_anchor + duration_cast<milliseconds>(duration<double>(timestamp_s));
  const auto day = floor<days>(t);
  const auto hour = static_cast<std::size_t>(duration_cast<hours>(t - day).count());
  const auto weekday_index = weekday{day}.iso_encoding() - 1;
  return shape.hourly_multipliers[hour] * shape.weekday_multipliers[weekday_index] * shape.seasonal_multiplier;
}

// ---------------------------------------------------------------------------
// Catalog

inline std::vector<OperationSpec> default_catalog() {
  using C = OperationCategory;
  return {
      {"create_sale", C::Transaction, "POST", "/sales", 512, 128, 1.0},
      {"add_item", C::Transaction, "POST", "/sales/{sale_id}/items", 512, 256, 1.0},
      {"apply_discount", C::Transaction, "POST", "/sales/{sale_id}/discount", 512, 256, 1.0},
      {"process_payment", C::Transaction, "POST", "/sales/{sale_id}/payment", 512, 256, 1.0},
      {"get_receipt", C::Transaction, "GET", "/sales/{sale_id}/receipt", 0, 512, 1.0},
      {"product_detail", C::Inventory, "GET", "/products/{product_id}", 0, 256, 1.0},
      {"price_check", C::Inventory, "GET", "/products/{product_id}/price", 0, 128, 1.0},
      {"stock_update", C::Inventory, "PUT", "/products/{product_id}/stock", 512, 128, 1.0},
      {"availability", C::Inventory, "GET", "/products/{product_id}/availability", 0, 128, 1.0},
      {"sales_summary", C::Analytics, "GET", "/reports/sales-summary", 0, 2048, 1.0},
      {"inventory_report", C::Analytics, "GET", "/reports/inventory", 0, 2048, 1.0},
      {"employee_metrics", C::Analytics, "GET", "/reports/employee-metrics", 0, 2048, 1.0},
  };
}

inline void to_json(nlohmann::json& j, const OperationSpec& s) {
  j = nlohmann::json{{"name", s.name},
                     {"category", std::string(to_string(s.category))},
                     {"method", s.method},
                     {"path_template", s.path_template},
                     {"payload_bytes", s.payload_bytes},
                     {"expected_response_bytes", s.expected_response_bytes},
                     {"intra_category_weight", s.intra_category_weight}};
}

inline void validate_catalog(std::span<const OperationSpec> catalog) {
  auto fail = [](const std::string& m) { throw WorkloadError(WorkloadError::Kind::CatalogInvalid, m); };
  for (const auto& s : catalog) {
    if (s.name.empty()) fail("operation with empty name");
    if (s.method != "GET" && s.method != "POST" && s.method != "PUT" && s.method != "DELETE")
      fail(s.name + ": unsupported method " + s.method);
    if (s.method == "GET" && s.payload_bytes != 0) fail(s.name + ": GET operations carry no payload");
    if (!(s.intra_category_weight > 0.0) || !std::isfinite(s.intra_category_weight))
      fail(s.name + ": intra_category_weight must be > 0");
    if (s.path_template.empty() || s.path_template.front() != '/') fail(s.name + ": path must start with '/'");
  }
  for (std::size_t i = 0; i < catalog.size(); ++i)
    for (std::size_t j = i + 1; j < catalog.size(); ++j)
      if (catalog[i].name == catalog[j].name) fail("duplicate operation name " + catalog[i].name);
}

inline std::vector<OperationSpec> catalog_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& m) { throw WorkloadError(WorkloadError::Kind::CatalogInvalid, m); };
  if (!j.is_array()) fail("catalog must be a JSON array");
  std::vector<OperationSpec> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    const std::string where = "catalog[" + std::to_string(i) + "]";
    try {
      OperationSpec s;
      s.name = e.at("name").get<std::string>();
      auto cat = parse_category(e.at("category").get<std::string>());
      if (!cat) fail(where + ".category: unknown category");
      s.category = *cat;
      s.method = e.at("method").get<std::string>();
      s.path_template = e.at("path_template").get<std::string>();
      s.payload_bytes = e.value("payload_bytes", std::uint64_t{0});
      s.expected_response_bytes = e.value("expected_response_bytes", std::uint64_t{0});
      s.intra_category_weight = e.value("intra_category_weight", 1.0);
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& ex) {
      fail(where + ": " + ex.what());
    }
  }
  validate_catalog(out);
  return out;
}

inline std::vector<OperationSpec> load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw WorkloadError(WorkloadError::Kind::CatalogInvalid, "cannot open catalog " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& ex) {
    throw WorkloadError(WorkloadError::Kind::CatalogInvalid, "catalog parse error: " + std::string(ex.what()));
  }
  return catalog_from_json(j);
}

// Per-category views with cumulative intra-category weights.
class CatalogIndex {
 public:
  explicit CatalogIndex(std::vector<OperationSpec> catalog) : specs_(std::move(catalog)) {
    validate_catalog(specs_);
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      auto& bucket = buckets_[static_cast<std::size_t>(specs_[i].category)];
      bucket.total += specs_[i].intra_category_weight;
      bucket.members.push_back(i);
      bucket.cumulative.push_back(bucket.total);
    }
  }

  const std::vector<OperationSpec>& specs() const { return specs_; }

  bool has(OperationCategory c) const { return !buckets_[static_cast<std::size_t>(c)].members.empty(); }

  const OperationSpec& pick(OperationCategory c, double u) const {
    const auto& b = buckets_[static_cast<std::size_t>(c)];
    if (b.members.empty())
      throw WorkloadError(WorkloadError::Kind::EmptyCategory,
                          "no operations in category " + std::string(to_string(c)));
    const double target = u * b.total;
    for (std::size_t k = 0; k < b.members.size(); ++k)
      if (target < b.cumulative[k]) return specs_[b.members[k]];
    return specs_[b.members.back()];
  }

  const OperationSpec* find(std::string_view name) const {
    for (const auto& s : specs_)
      if (s.name == name) return &s;
    return nullptr;
  }

  // The operation substituted when a sale-scoped request has no sale to act on.
  const OperationSpec* sale_creation() const {
    for (const auto& s : specs_)
      if (s.method == "POST" && s.path_template == "/sales") return &s;
    return nullptr;
  }

 private:
  struct Bucket {
    std::vector<std::size_t> members;
    std::vector<double> cumulative;
    double total = 0.0;
  };
  std::vector<OperationSpec> specs_;
  std::array<Bucket, 3> buckets_;
};

// Draws two uniforms: one for the category, one within it.
inline const OperationSpec& sample_operation(const CatalogIndex& index, const WorkloadMix& mix, Rng& rng) {
  const double u_cat = rng.uniform();
  const double u_op = rng.uniform();
  return index.pick(sample_category(mix, u_cat), u_op);
}

// ---------------------------------------------------------------------------
// Requests

struct RequestDescriptor {
  std::string operation;  // operation actually issued
  std::string requested;  // operation sampled; differs when substituted
  OperationCategory category = OperationCategory::Transaction;
  std::string method;
  std::string path;
  std::string body;
  bool substituted = false;
};

// What a virtual user remembers between requests.
struct SessionState {
  std::optional<std::int64_t> open_sale;  // accepts items, discounts, payment
  std::optional<std::int64_t> last_sale;  // most recent sale, open or paid (receipts)
  std::int64_t product_count = 1000;
  std::optional<std::int64_t> focus_product;  // overrides the drawn product id

  void observe(const RequestDescriptor& req, int status, std::string_view body) {
    const bool ok = status >= 200 && status <= 299;
    if (req.method == "POST" && req.path == "/sales") {
      if (!ok) return;
      auto j = nlohmann::json::parse(body, nullptr, false);
      if (j.is_object() && j.contains("sale_id") && j["sale_id"].is_number_integer()) {
        open_sale = j["sale_id"].get<std::int64_t>();
        last_sale = open_sale;
      }
      return;
    }
    if (req.path.rfind("/sales/", 0) != 0) return;
    if (ok && req.path.ends_with("/payment")) {
      open_sale.reset();
    } else if (status == 409 && req.method != "GET") {
      // The sale was paid or is otherwise closed.
      open_sale.reset();
    } else if (status == 404) {
      open_sale.reset();
      last_sale.reset();
    }
  }
};

namespace detail {

inline std::string pad_body(std::string json, std::uint64_t payload_bytes) {
  if (payload_bytes == 0 && json == "{}") return {};
  // Trailing whitespace keeps the document valid JSON.
  if (json.size() < payload_bytes) json.append(payload_bytes - json.size(), ' ');
  return json;
}

}  // namespace detail

// Resolves placeholders from the session. Sale-scoped operations without a
// usable sale are replaced by the catalog's sale-creation operation.
inline RequestDescriptor build_request(const OperationSpec& spec, const SessionState& session, Rng& rng,
                                       const CatalogIndex& index) {
  // Fixed number of draws per call, whatever the operation, keeps streams aligned.
  auto product_id = rng.uniform_int(1, std::max<std::int64_t>(1, session.product_count));
  if (session.focus_product) product_id = *session.focus_product;
  const auto qty = rng.uniform_int(1, 3);
  const auto delta = rng.uniform_int(-2, 3);
  const auto discount_cents = rng.uniform_int(10, 100);

  const OperationSpec* chosen = &spec;
  bool substituted = false;
  const bool needs_sale = spec.path_template.find("{sale_id}") != std::string::npos;
  std::optional<std::int64_t> sale = spec.method == "GET" ? session.last_sale : session.open_sale;
  if (needs_sale && !sale) {
    chosen = index.sale_creation();
    if (chosen == nullptr)
      throw WorkloadError(WorkloadError::Kind::UnresolvablePlaceholder,
                          spec.name + ": no sale in session and the catalog has no POST /sales operation");
    substituted = true;
  }

  RequestDescriptor req;
  req.operation = chosen->name;
  req.requested = spec.name;
  req.category = chosen->category;
  req.method = chosen->method;
  req.substituted = substituted;

  std::string path = chosen->path_template;
  auto replace = [&path](std::string_view key, const std::string& value) {
    for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key, pos + value.size()))
      path.replace(pos, key.size(), value);
  };
  if (sale) replace("{sale_id}", std::to_string(*sale));
  replace("{product_id}", std::to_string(product_id));
  if (path.find('{') != std::string::npos)
    throw WorkloadError(WorkloadError::Kind::UnresolvablePlaceholder,
                        chosen->name + ": unresolved placeholder in " + path);
  req.path = std::move(path);

  nlohmann::json body = nlohmann::json::object();
  if (req.path.ends_with("/items")) {
    body = {{"product_id", product_id}, {"qty", qty}};
  } else if (req.path.ends_with("/discount")) {
    const auto cents = std::to_string(discount_cents);
    body = {{"amount_usd", cents.size() < 3 ? "0." + cents : cents.substr(0, cents.size() - 2) + "." +
                                                               cents.substr(cents.size() - 2)}};
  } else if (req.path.ends_with("/stock")) {
    body = {{"delta", delta}};
  }
  req.body = detail::pad_body(body.dump(), chosen->payload_bytes);
  return req;
}

}  // namespace posbench
