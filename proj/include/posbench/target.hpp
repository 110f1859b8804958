#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "decimal.hpp"
#include "prng.hpp"
#include "workload.hpp"

namespace posbench {

// ---------------------------------------------------------------------------
// Emulation profile

struct EmulationProfile {
  std::string name = "custom";
  double base_latency_ms = 0.0;
  double jitter_ms = 0.0;  // half-width of uniform jitter
  std::int64_t capacity = 1;
  double saturation_exponent = 1.0;
  double saturation_gain = 0.0;
  double cold_idle_threshold_s = 0.0;
  double cold_penalty_ms = 0.0;
  double error_rate = 0.0;
  std::uint64_t seed = 1;
};

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void validate_profile(const EmulationProfile& p) {
  auto fail = [&](const std::string& m) { throw ProfileError("profile " + p.name + ": " + m); };
  if (!(p.base_latency_ms >= 0)) fail("base_latency_ms must be >= 0");
  if (!(p.jitter_ms >= 0)) fail("jitter_ms must be >= 0");
  if (p.capacity < 1) fail("capacity must be >= 1");
  if (!(p.saturation_exponent >= 1)) fail("saturation_exponent must be >= 1");
  if (!(p.saturation_gain >= 0)) fail("saturation_gain must be >= 0");
  if (!(p.cold_idle_threshold_s >= 0)) fail("cold_idle_threshold_s must be >= 0");
  if (!(p.cold_penalty_ms >= 0)) fail("cold_penalty_ms must be >= 0");
  if (!(p.error_rate >= 0 && p.error_rate <= 1)) fail("error_rate must lie in [0,1]");
}

// Calibrated against the reference measurements: a serverless-like
// platform (flat p95 under load, cold starts after idle) and an always-on
// instance that saturates beyond ten concurrent requests.
inline std::optional<EmulationProfile> named_profile(std::string_view name) {
  if (name == "paper-gcp") return EmulationProfile{"paper-gcp", 153.83, 33.2, 50, 1.0, 0.12, 60.0, 800.0, 0.0, 11};
  if (name == "paper-azure")
    return EmulationProfile{"paper-azure", 192.19, 51.4, 10, 1.5, 0.46, 0.0, 0.0, 0.0, 23};
  if (name == "deterministic") return EmulationProfile{"deterministic", 5.0, 0.0, 1000, 1.0, 0.0, 0.0, 0.0, 0.0, 1};
  if (name == "instant") return EmulationProfile{"instant", 0.0, 0.0, 1000, 1.0, 0.0, 0.0, 0.0, 0.0, 1};
  return std::nullopt;
}

inline void to_json(nlohmann::json& j, const EmulationProfile& p) {
  j = nlohmann::json{{"name", p.name},
                     {"base_latency_ms", p.base_latency_ms},
                     {"jitter_ms", p.jitter_ms},
                     {"capacity", p.capacity},
                     {"saturation_exponent", p.saturation_exponent},
                     {"saturation_gain", p.saturation_gain},
                     {"cold_idle_threshold_s", p.cold_idle_threshold_s},
                     {"cold_penalty_ms", p.cold_penalty_ms},
                     {"error_rate", p.error_rate},
                     {"seed", p.seed}};
}

inline EmulationProfile profile_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ProfileError("profile must be a JSON object");
  EmulationProfile p;
  try {
    p.name = j.value("name", std::string("custom"));
    p.base_latency_ms = j.value("base_latency_ms", 0.0);
    p.jitter_ms = j.value("jitter_ms", 0.0);
    p.capacity = j.value("capacity", std::int64_t{1});
    p.saturation_exponent = j.value("saturation_exponent", 1.0);
    p.saturation_gain = j.value("saturation_gain", 0.0);
    p.cold_idle_threshold_s = j.value("cold_idle_threshold_s", 0.0);
    p.cold_penalty_ms = j.value("cold_penalty_ms", 0.0);
    p.error_rate = j.value("error_rate", 0.0);
    p.seed = j.value("seed", std::uint64_t{1});
  } catch (const nlohmann::json::exception& ex) {
    throw ProfileError(std::string("profile: ") + ex.what());
  }
  validate_profile(p);
  return p;
}

// A profile name, or a path to a JSON profile file.
inline EmulationProfile resolve_profile(const std::string& name_or_path) {
  if (auto p = named_profile(name_or_path)) return *p;
  std::ifstream in(name_or_path);
  if (!in) throw ProfileError("unknown profile '" + name_or_path + "'");
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ProfileError("profile file " + name_or_path + " is not valid JSON");
  return profile_from_json(j);
}

// Deterministic part of the injected delay at `in_flight` concurrent requests.
inline double saturation_delay_ms(const EmulationProfile& p, std::int64_t in_flight) {
  const double over = std::max(0.0, static_cast<double>(in_flight - p.capacity) / static_cast<double>(p.capacity));
  const double factor = over > 0.0 ? p.saturation_gain * std::pow(over, p.saturation_exponent) : 0.0;
  return p.base_latency_ms * (1.0 + factor);
}

// Always consumes exactly one draw from rng.
inline double inject_latency(const EmulationProfile& p, std::int64_t in_flight, double idle_gap_s, Rng& rng) {
  const double u = rng.uniform();
  double d = saturation_delay_ms(p, in_flight) + (2.0 * u - 1.0) * p.jitter_ms;
  d = std::max(0.0, d);
  if (p.cold_penalty_ms > 0.0 && idle_gap_s > p.cold_idle_threshold_s) d += p.cold_penalty_ms;
  return d;
}

// Always consumes exactly one draw from rng.
inline bool inject_error(const EmulationProfile& p, Rng& rng) { return rng.uniform() < p.error_rate; }

// Shared in-flight counter and cold-start clock for one service instance.
// Times are seconds on any monotone clock chosen by the caller.
class EmulationModel {
 public:
  struct Admission {
    double delay_ms = 0.0;
    bool fail = false;
    bool cold = false;
    std::int64_t in_flight = 0;
  };

  explicit EmulationModel(EmulationProfile profile, double now_s = 0.0)
      : profile_(std::move(profile)), rng_(profile_.seed, 0x7a26e7), last_idle_start_s_(now_s) {}

  const EmulationProfile& profile() const { return profile_; }

  Admission admit(double now_s) {
    std::lock_guard lock(mu_);
    Admission a;
    a.in_flight = ++in_flight_;
    const double idle_gap = a.in_flight == 1 ? now_s - last_idle_start_s_ : 0.0;
    a.cold = profile_.cold_penalty_ms > 0.0 && idle_gap > profile_.cold_idle_threshold_s;
    a.delay_ms = inject_latency(profile_, a.in_flight, idle_gap, rng_);
    a.fail = inject_error(profile_, rng_);
    return a;
  }

  void release(double now_s) {
    std::lock_guard lock(mu_);
    if (--in_flight_ == 0) last_idle_start_s_ = now_s;
  }

  std::int64_t in_flight() const {
    std::lock_guard lock(mu_);
    return in_flight_;
  }

 private:
  EmulationProfile profile_;
  mutable std::mutex mu_;
  Rng rng_;
  std::int64_t in_flight_ = 0;
  double last_idle_start_s_;
};

// ---------------------------------------------------------------------------
// POS state

struct Product {
  std::int64_t id = 0;
  std::string name;
  Money unit_price;
  std::int64_t stock = 0;
};

inline std::vector<Product> default_fixture(std::int64_t count = 1000, std::int64_t stock = 10000) {
  std::vector<Product> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t id = 1; id <= count; ++id)
    out.push_back({id, "product-" + std::to_string(id), Money::from_units((100 + (id % 50) * 25) * Money::one / 100),
                   stock});
  return out;
}

struct LineItem {
  std::int64_t product_id = 0;
  std::int64_t quantity = 0;
  Money unit_price;
};

struct SaleDiscount {
  std::string label;
  Money amount;
};

enum class SaleStatus { Open, Paid };

struct SaleSession {
  std::int64_t sale_id = 0;
  std::vector<LineItem> items;
  std::vector<SaleDiscount> discounts;
  SaleStatus status = SaleStatus::Open;
  Money receipt_total;
  std::optional<std::int64_t> paid_at_ms;

  Money subtotal() const {
    Money s;
    for (const auto& li : items) s += li.unit_price * li.quantity;
    return s;
  }
  Money discount_total() const {
    Money s;
    for (const auto& d : discounts) s += d.amount;
    return s;
  }
  // Σ(quantity × unit_price) − Σ(discounts), floored at zero.
  Money recompute_total() const { return std::max(Money{}, subtotal() - discount_total()); }
};

inline constexpr int kRegisterCount = 8;

struct ServiceRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::int64_t now_ms = 0;  // service clock, used for payment timestamps
};

struct ServiceResponse {
  int status = 200;
  std::string body;
  std::string operation;  // catalog operation served, empty for admin/health/unknown
};

// In-memory POS service implementing the operation catalog routes. Thread
// safe: each product and sale is serialized by its own mutex, the entity
// maps by a shared mutex that only reset and sale creation take exclusively.
class TargetService {
 public:
  explicit TargetService(std::vector<Product> fixture = default_fixture(),
                         std::span<const OperationSpec> catalog = {}) {
    for (const auto& s : catalog) expected_bytes_[s.name] = s.expected_response_bytes;
    reset(std::move(fixture));
  }

  void set_padding(bool enabled) { padding_ = enabled; }
  void set_allow_upsert(bool enabled) { allow_upsert_ = enabled; }

  void reset(std::vector<Product> fixture) {
    std::unique_lock lock(map_mu_);
    products_.clear();
    sales_.clear();
    next_sale_id_ = 1;
    for (auto& p : fixture) {
      auto slot = std::make_unique<ProductSlot>();
      slot->product = std::move(p);
      products_[slot->product.id] = std::move(slot);
    }
  }

  ServiceResponse handle(const ServiceRequest& req) {
    auto segs = split_path(req.path);
    ServiceResponse resp = route(req, segs);
    if (padding_ && !resp.operation.empty() && resp.status >= 200 && resp.status < 300) {
      auto it = expected_bytes_.find(resp.operation);
      if (it != expected_bytes_.end() && resp.body.size() < it->second) resp.body.append(it->second - resp.body.size(), ' ');
    }
    return resp;
  }

  // Identifies the catalog operation a request targets without executing it.
  static std::string operation_for(std::string_view method, std::string_view path) {
    auto segs = split_path(path);
    const auto n = segs.size();
    if (n == 1 && segs[0] == "sales" && method == "POST") return "create_sale";
    if (n == 3 && segs[0] == "sales") {
      if (segs[2] == "items" && method == "POST") return "add_item";
      if (segs[2] == "discount" && method == "POST") return "apply_discount";
      if (segs[2] == "payment" && method == "POST") return "process_payment";
      if (segs[2] == "receipt" && method == "GET") return "get_receipt";
    }
    if (n >= 2 && segs[0] == "products") {
      if (n == 2 && method == "GET") return "product_detail";
      if (n == 3 && segs[2] == "price" && method == "GET") return "price_check";
      if (n == 3 && segs[2] == "stock" && method == "PUT") return "stock_update";
      if (n == 3 && segs[2] == "availability" && method == "GET") return "availability";
    }
    if (n == 2 && segs[0] == "reports" && method == "GET") {
      if (segs[1] == "sales-summary") return "sales_summary";
      if (segs[1] == "inventory") return "inventory_report";
      if (segs[1] == "employee-metrics") return "employee_metrics";
    }
    return {};
  }

  // Direct accessors (tests, admin).
  std::optional<std::int64_t> stock_of(std::int64_t product_id) const {
    std::shared_lock lock(map_mu_);
    auto it = products_.find(product_id);
    if (it == products_.end()) return std::nullopt;
    std::lock_guard pl(it->second->mu);
    return it->second->product.stock;
  }

  std::optional<SaleSession> sale(std::int64_t sale_id) const {
    std::shared_lock lock(map_mu_);
    auto it = sales_.find(sale_id);
    if (it == sales_.end()) return std::nullopt;
    std::lock_guard sl(it->second->mu);
    return it->second->sale;
  }

  static ServiceResponse error(int status, std::string_view code, std::string_view message) {
    return {status, nlohmann::json{{"code", code}, {"message", message}}.dump(), {}};
  }

  static std::vector<Product> fixture_from_json(const nlohmann::json& j) {
    if (j.is_null() || (j.is_object() && j.empty())) return default_fixture();
    if (!j.is_object()) throw std::invalid_argument("fixture must be an object");
    if (j.contains("products")) {
      std::vector<Product> out;
      for (const auto& e : j.at("products")) {
        Product p;
        p.id = e.at("id").get<std::int64_t>();
        p.name = e.value("name", "product-" + std::to_string(p.id));
        p.unit_price = money_from_json(e.at("unit_price_usd"));
        p.stock = e.at("stock").get<std::int64_t>();
        if (p.stock < 0 || p.unit_price.is_negative()) throw std::invalid_argument("negative stock or price");
        out.push_back(std::move(p));
      }
      return out;
    }
    const auto count = j.value("count", std::int64_t{1000});
    const auto stock = j.value("stock", std::int64_t{10000});
    if (count < 0 || stock < 0) throw std::invalid_argument("negative count or stock");
    return default_fixture(count, stock);
  }

  static Money money_from_json(const nlohmann::json& v) {
    if (v.is_string()) return Money::parse(v.get<std::string>());
    if (v.is_number_integer()) return Money::from_integer(v.get<std::int64_t>());
    if (v.is_number()) return Money::from_double(v.get<double>());
    throw std::invalid_argument("amount must be a number or decimal string");
  }

  static std::string money_text(Money m) { return m.to_trimmed_string(2); }

 private:
  struct ProductSlot {
    mutable std::mutex mu;
    Product product;
  };
  struct SaleSlot {
    mutable std::mutex mu;
    SaleSession sale;
  };

  static std::vector<std::string_view> split_path(std::string_view path) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < path.size()) {
      while (i < path.size() && path[i] == '/') ++i;
      const auto j = path.find('/', i);
      const auto end = j == std::string_view::npos ? path.size() : j;
      if (end > i) out.push_back(path.substr(i, end - i));
      i = end;
    }
    return out;
  }

  static std::optional<std::int64_t> parse_id(std::string_view s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
  }

  static nlohmann::json parse_body(std::string_view body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) {
      if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return nlohmann::json::object();
      return nullptr;
    }
    return j;
  }

  static ServiceResponse ok(nlohmann::json body, std::string op, int status = 200) {
    return {status, body.dump(), std::move(op)};
  }

  ServiceResponse route(const ServiceRequest& req, const std::vector<std::string_view>& segs) {
    const std::string op = operation_for(req.method, req.path);
    const auto n = segs.size();
    if (op == "create_sale") return create_sale();
    if (n >= 2 && (segs[0] == "sales" || segs[0] == "products")) {
      const auto id = parse_id(segs[1]);
      if (!id) return error(404, segs[0] == "sales" ? "sale_not_found" : "product_not_found", "malformed id");
      if (op == "add_item") return add_item(*id, req.body);
      if (op == "apply_discount") return apply_discount(*id, req.body);
      if (op == "process_payment") return process_payment(*id, req.now_ms);
      if (op == "get_receipt") return get_receipt(*id);
      if (op == "product_detail") return product_detail(*id);
      if (op == "price_check") return price_check(*id);
      if (op == "stock_update") return stock_update(*id, req.body);
      if (op == "availability") return availability(*id);
    }
    if (op == "sales_summary") return sales_summary(req.query);
    if (op == "inventory_report") return inventory_report();
    if (op == "employee_metrics") return employee_metrics();
    return error(404, "route_not_found", std::string(req.method) + " " + req.path);
  }

  ServiceResponse create_sale() {
    std::unique_lock lock(map_mu_);
    const auto id = next_sale_id_++;
    auto slot = std::make_unique<SaleSlot>();
    slot->sale.sale_id = id;
    sales_[id] = std::move(slot);
    return ok({{"sale_id", id}, {"status", "open"}}, "create_sale", 201);
  }

  // Caller holds map_mu_ (shared).
  SaleSlot* find_sale(std::int64_t id) {
    auto it = sales_.find(id);
    return it == sales_.end() ? nullptr : it->second.get();
  }
  ProductSlot* find_product(std::int64_t id) {
    auto it = products_.find(id);
    return it == products_.end() ? nullptr : it->second.get();
  }

  static nlohmann::json sale_json(const SaleSession& s) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& li : s.items)
      items.push_back({{"product_id", li.product_id}, {"qty", li.quantity}, {"unit_price_usd", money_text(li.unit_price)}});
    nlohmann::json discounts = nlohmann::json::array();
    for (const auto& d : s.discounts) discounts.push_back({{"label", d.label}, {"amount_usd", money_text(d.amount)}});
    return {{"sale_id", s.sale_id},
            {"status", s.status == SaleStatus::Open ? "open" : "paid"},
            {"items", items},
            {"discounts", discounts},
            {"subtotal_usd", money_text(s.subtotal())},
            {"discount_usd", money_text(s.discount_total())},
            {"total_usd", money_text(s.receipt_total)}};
  }

  ServiceResponse add_item(std::int64_t sale_id, std::string_view body) {
    const auto j = parse_body(body);
    if (!j.is_object() || !j.contains("product_id") || !j["product_id"].is_number_integer() || !j.contains("qty") ||
        !j["qty"].is_number_integer() || j["qty"].get<std::int64_t>() <= 0)
      return error(400, "bad_request", "expected {product_id, qty > 0}");
    const auto product_id = j["product_id"].get<std::int64_t>();
    const auto qty = j["qty"].get<std::int64_t>();
    std::shared_lock lock(map_mu_);
    SaleSlot* sale = find_sale(sale_id);
    if (!sale) return error(404, "sale_not_found", "unknown sale " + std::to_string(sale_id));
    ProductSlot* prod = find_product(product_id);
    if (!prod) return error(404, "product_not_found", "unknown product " + std::to_string(product_id));
    // Lock order: sale before product.
    std::lock_guard sl(sale->mu);
    if (sale->sale.status == SaleStatus::Paid) return error(409, "sale_already_paid", "sale is closed");
    std::lock_guard pl(prod->mu);
    if (prod->product.stock < qty) return error(409, "insufficient_stock", "not enough stock");
    prod->product.stock -= qty;
    sale->sale.items.push_back({product_id, qty, prod->product.unit_price});
    sale->sale.receipt_total = sale->sale.recompute_total();
    return ok(sale_json(sale->sale), "add_item");
  }

  ServiceResponse apply_discount(std::int64_t sale_id, std::string_view body) {
    const auto j = parse_body(body);
    Money amount;
    try {
      if (!j.is_object() || !j.contains("amount_usd")) throw std::invalid_argument("missing");
      amount = money_from_json(j["amount_usd"]);
    } catch (const std::exception&) {
      return error(400, "bad_request", "expected {amount_usd}");
    }
    if (amount.is_negative() || amount.is_zero()) return error(400, "bad_request", "discount must be positive");
    std::shared_lock lock(map_mu_);
    SaleSlot* sale = find_sale(sale_id);
    if (!sale) return error(404, "sale_not_found", "unknown sale " + std::to_string(sale_id));
    std::lock_guard sl(sale->mu);
    if (sale->sale.status == SaleStatus::Paid) return error(409, "sale_already_paid", "sale is closed");
    sale->sale.discounts.push_back({j.value("label", std::string("discount")), amount});
    sale->sale.receipt_total = sale->sale.recompute_total();
    return ok(sale_json(sale->sale), "apply_discount");
  }

  ServiceResponse process_payment(std::int64_t sale_id, std::int64_t now_ms) {
    std::shared_lock lock(map_mu_);
    SaleSlot* sale = find_sale(sale_id);
    if (!sale) return error(404, "sale_not_found", "unknown sale " + std::to_string(sale_id));
    std::lock_guard sl(sale->mu);
    if (sale->sale.status == SaleStatus::Paid) return error(409, "sale_already_paid", "sale already paid");
    sale->sale.status = SaleStatus::Paid;
    sale->sale.paid_at_ms = now_ms;
    return ok(sale_json(sale->sale), "process_payment");
  }

  ServiceResponse get_receipt(std::int64_t sale_id) {
    std::shared_lock lock(map_mu_);
    SaleSlot* sale = find_sale(sale_id);
    if (!sale) return error(404, "sale_not_found", "unknown sale " + std::to_string(sale_id));
    std::lock_guard sl(sale->mu);
    return ok(sale_json(sale->sale), "get_receipt");
  }

  template <typename Fn>
  ServiceResponse with_product(std::int64_t id, Fn&& fn) {
    std::shared_lock lock(map_mu_);
    ProductSlot* prod = find_product(id);
    if (!prod) return error(404, "product_not_found", "unknown product " + std::to_string(id));
    std::lock_guard pl(prod->mu);
    return fn(prod->product);
  }

  ServiceResponse product_detail(std::int64_t id) {
    return with_product(id, [](const Product& p) {
      return ok({{"id", p.id}, {"name", p.name}, {"unit_price_usd", money_text(p.unit_price)}, {"stock", p.stock}},
                "product_detail");
    });
  }

  ServiceResponse price_check(std::int64_t id) {
    return with_product(
        id, [](const Product& p) { return ok({{"id", p.id}, {"unit_price_usd", money_text(p.unit_price)}}, "price_check"); });
  }

  ServiceResponse availability(std::int64_t id) {
    return with_product(id, [](const Product& p) {
      return ok({{"id", p.id}, {"available", p.stock > 0}, {"stock", p.stock}}, "availability");
    });
  }

  ServiceResponse stock_update(std::int64_t id, std::string_view body) {
    const auto j = parse_body(body);
    if (!j.is_object() || !j.contains("delta") || !j["delta"].is_number_integer())
      return error(400, "bad_request", "expected {delta}");
    const auto delta = j["delta"].get<std::int64_t>();
    {
      std::shared_lock lock(map_mu_);
      if (ProductSlot* prod = find_product(id)) {
        std::lock_guard pl(prod->mu);
        if (prod->product.stock + delta < 0) return error(409, "insufficient_stock", "stock would go negative");
        prod->product.stock += delta;
        return ok({{"id", id}, {"stock", prod->product.stock}}, "stock_update");
      }
    }
    if (!allow_upsert_ || !j.value("upsert", false))
      return error(404, "product_not_found", "unknown product " + std::to_string(id));
    if (delta < 0) return error(409, "insufficient_stock", "stock would go negative");
    std::unique_lock lock(map_mu_);
    auto& slot = products_[id];
    if (!slot) {
      slot = std::make_unique<ProductSlot>();
      slot->product = {id, "product-" + std::to_string(id), Money{}, 0};
    }
    slot->product.stock += delta;
    return ok({{"id", id}, {"stock", slot->product.stock}}, "stock_update");
  }

  ServiceResponse sales_summary(const std::map<std::string, std::string>& query) {
    std::int64_t from = std::numeric_limits<std::int64_t>::min();
    std::int64_t to = std::numeric_limits<std::int64_t>::max();
    for (auto [key, target] : {std::pair{"from", &from}, std::pair{"to", &to}}) {
      auto it = query.find(key);
      if (it == query.end()) continue;
      auto v = parse_id(it->second);
      if (!v) return error(400, "bad_window", std::string("malformed '") + key + "'");
      *target = *v;
    }
    if (from > to) return error(400, "bad_window", "'from' after 'to'");
    std::int64_t count = 0;
    Money revenue;
    std::shared_lock lock(map_mu_);
    for (const auto& [id, slot] : sales_) {
      std::lock_guard sl(slot->mu);
      const auto& s = slot->sale;
      if (s.status == SaleStatus::Paid && *s.paid_at_ms >= from && *s.paid_at_ms <= to) {
        ++count;
        revenue += s.receipt_total;
      }
    }
    return ok({{"count", count}, {"revenue_usd", money_text(revenue)}}, "sales_summary");
  }

  ServiceResponse inventory_report() {
    nlohmann::json rows = nlohmann::json::array();
    std::shared_lock lock(map_mu_);
    std::vector<std::int64_t> ids;
    ids.reserve(products_.size());
    for (const auto& [id, slot] : products_) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (auto id : ids) {
      const auto& slot = products_.at(id);
      std::lock_guard pl(slot->mu);
      rows.push_back({{"id", id}, {"stock", slot->product.stock}});
    }
    return ok({{"count", rows.size()}, {"products", rows}}, "inventory_report");
  }

  ServiceResponse employee_metrics() {
    std::array<std::int64_t, kRegisterCount> paid{};
    std::array<std::int64_t, kRegisterCount> opened{};
    std::shared_lock lock(map_mu_);
    for (const auto& [id, slot] : sales_) {
      std::lock_guard sl(slot->mu);
      const auto reg = static_cast<std::size_t>(id % kRegisterCount);
      ++opened[reg];
      if (slot->sale.status == SaleStatus::Paid) ++paid[reg];
    }
    nlohmann::json regs = nlohmann::json::array();
    for (std::size_t r = 0; r < kRegisterCount; ++r)
      regs.push_back({{"register", r}, {"sales_opened", opened[r]}, {"sales_paid", paid[r]}});
    return ok({{"registers", regs}}, "employee_metrics");
  }

  mutable std::shared_mutex map_mu_;
  std::unordered_map<std::int64_t, std::unique_ptr<ProductSlot>> products_;
  std::map<std::int64_t, std::unique_ptr<SaleSlot>> sales_;
  std::int64_t next_sale_id_ = 1;
  std::unordered_map<std::string, std::uint64_t> expected_bytes_;
  bool padding_ = true;
  bool allow_upsert_ = false;
};

// The service as seen from outside: business routes go through the
// emulation model (latency, error injection, cold start); /healthz and
// /admin/reset are exempt. Callers own the waiting, which lets the HTTP
// server sleep in real time and the simulator advance virtual time.
class EmulatedTarget {
 public:
  struct Pending {
    ServiceResponse response;
    double delay_ms = 0.0;
    bool emulated = false;  // false for exempt routes; then no end() call is due
    bool cold = false;
  };

  explicit EmulatedTarget(EmulationProfile profile, std::vector<OperationSpec> catalog = default_catalog(),
                          std::vector<Product> fixture = default_fixture(), double now_s = 0.0)
      : model_(std::move(profile), now_s), service_(std::move(fixture), catalog), catalog_(std::move(catalog)) {
    validate_profile(model_.profile());
  }

  void set_token(std::string token) { token_ = std::move(token); }
  const std::string& token() const { return token_; }

  TargetService& service() { return service_; }
  EmulationModel& model() { return model_; }
  const EmulationProfile& profile() const { return model_.profile(); }

  // `authorization` is the raw Authorization header value, if any.
  Pending begin(const ServiceRequest& req, double now_s, std::string_view authorization = {}) {
    Pending p;
    if (req.path == "/healthz" && req.method == "GET") {
      p.response = {200, R"({"status":"ok"})", {}};
      return p;
    }
    if (!token_.empty() && authorization != "Bearer " + token_) {
      p.response = TargetService::error(401, "unauthorized", "missing or invalid bearer token");
      return p;
    }
    if (req.path == "/admin/reset" && req.method == "POST") {
      p.response = admin_reset(req.body);
      return p;
    }
    const auto admission = model_.admit(now_s);
    p.emulated = true;
    p.delay_ms = admission.delay_ms;
    p.cold = admission.cold;
    if (admission.fail) {
      p.response = TargetService::error(500, "injected_failure", "emulated platform error");
      p.response.operation = TargetService::operation_for(req.method, req.path);
    } else {
      p.response = service_.handle(req);
    }
    return p;
  }

  void end(double now_s) { model_.release(now_s); }

 private:
  ServiceResponse admin_reset(std::string_view body) {
    nlohmann::json j = nlohmann::json::object();
    if (body.find_first_not_of(" \t\r\n") != std::string_view::npos) {
      j = nlohmann::json::parse(body, nullptr, false);
      if (j.is_discarded()) return TargetService::error(400, "bad_request", "fixture is not valid JSON");
    }
    try {
      auto fixture = TargetService::fixture_from_json(j);
      const auto n = fixture.size();
      service_.reset(std::move(fixture));
      return {200, nlohmann::json{{"status", "reset"}, {"products", n}}.dump(), {}};
    } catch (const std::exception& ex) {
      return TargetService::error(400, "bad_request", ex.what());
    }
  }

  EmulationModel model_;
  TargetService service_;
  std::vector<OperationSpec> catalog_;
  std::string token_;
};

}  // namespace posbench
