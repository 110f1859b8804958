#pragma once

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>

#include "target.hpp"

namespace posbench {

// Serves an EmulatedTarget over HTTP/1.1. Injected delays are real sleeps,
// so the worker pool must hold at least one thread per concurrent client.
class TargetServer {
 public:
  explicit TargetServer(EmulatedTarget& target, std::size_t worker_threads = 256)
      : target_(target), origin_(std::chrono::steady_clock::now()) {
    server_.new_task_queue = [worker_threads] { return new httplib::ThreadPool(worker_threads); };
    server_.set_keep_alive_max_count(1000000);
    server_.set_keep_alive_timeout(30);
    server_.set_tcp_nodelay(true);
    // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    auto handler = [this](const httplib::Request& req, httplib::Response& res) { serve(req, res); };
    server_.Get(".*", handler);
    server_.Post(".*", handler);
    server_.Put(".*", handler);
    server_.Delete(".*", handler);
  }

  TargetServer(const TargetServer&) = delete;
  TargetServer& operator=(const TargetServer&) = delete;
  ~TargetServer() { stop(); }

  // Binds host:port (port 0 picks an ephemeral port); returns false if taken.
  bool bind(const std::string& host, int port) {
    host_ = host;
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
      return port_ > 0;
    }
    if (!server_.bind_to_port(host, port)) return false;
    port_ = port;
    return true;
  }

  void start() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  // Blocks the caller until stop() is invoked from elsewhere.
  void run() { server_.listen_after_bind(); }

  void stop() {
    if (server_.is_running()) server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }
  std::string base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

 private:
  double now_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }

  void serve(const httplib::Request& req, httplib::Response& res) {
    ServiceRequest sreq;
    sreq.method = req.method;
    sreq.path = req.path;
    for (const auto& [k, v] : req.params) sreq.query[k] = v;
    sreq.body = req.body;
    sreq.now_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
    auto pending = target_.begin(sreq, now_s(), req.get_header_value("Authorization"));
    if (pending.emulated) {
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(pending.delay_ms));
      target_.end(now_s());
    }
    res.status = pending.response.status;
    res.set_content(pending.response.body, "application/json");
  }

  EmulatedTarget& target_;
  httplib::Server server_;
  std::chrono::steady_clock::time_point origin_;
  std::thread thread_;
  std::string host_ = "127.0.0.1";
  int port_ = 0;
};

}  // namespace posbench
