#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>

#include "engine.hpp"

namespace posbench {

// Endpoint descriptor: base URL plus an optional bearer token.
struct Endpoint {
  std::string base_url;
  std::string token;
  std::string reset_fixture = "{}";  // body for POST /admin/reset
};

// Reads the bearer token from the named environment variable, if set.
inline std::string token_from_env(const char* variable = "POSBENCH_TOKEN") {
  const char* v = std::getenv(variable);
  return v ? std::string(v) : std::string();
}

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(Endpoint endpoint) : endpoint_(std::move(endpoint)), client_(endpoint_.base_url) {
    client_.set_keep_alive(true);
    client_.set_tcp_nodelay(true);  // small request bodies otherwise stall on delayed ACKs
    client_.set_follow_location(false);
    if (!endpoint_.token.empty()) client_.set_bearer_token_auth(endpoint_.token);
  }

  TransportResponse send(const RequestDescriptor& req, double timeout_ms) override {
    set_timeout(timeout_ms);
    httplib::Result res;
    const char* type = "application/json";
    if (req.method == "GET") {
      res = client_.Get(req.path);
    } else if (req.method == "POST") {
      res = client_.Post(req.path, req.body, type);
    } else if (req.method == "PUT") {
      res = client_.Put(req.path, req.body, type);
    } else if (req.method == "DELETE") {
      res = client_.Delete(req.path, req.body, type);
    } else {
      return {std::nullopt, {}, true, "unsupported method " + req.method};
    }
    if (!res) return {std::nullopt, {}, true, httplib::to_string(res.error())};
    return {res->status, std::move(res->body), false, {}};
  }

  bool probe() override {
    set_timeout(5000.0);
    auto res = client_.Get("/healthz");
    return res && res->status >= 200 && res->status < 300;
  }

  bool reset() override {
    set_timeout(30000.0);
    auto res = client_.Post("/admin/reset", endpoint_.reset_fixture, "application/json");
    return res && res->status == 200;
  }

 private:
  void set_timeout(double timeout_ms) {
    const auto usec = static_cast<long>(timeout_ms * 1000.0);
    client_.set_connection_timeout(usec / 1000000, usec % 1000000);
    client_.set_read_timeout(usec / 1000000, usec % 1000000);
    client_.set_write_timeout(usec / 1000000, usec % 1000000);
  }

  Endpoint endpoint_;
  httplib::Client client_;
};

inline TransportFactory http_transport_factory(Endpoint endpoint) {
  return [endpoint = std::move(endpoint)] { return std::make_unique<HttpTransport>(endpoint); };
}

}  // namespace posbench
