#include "http_server.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include <httplib.h>

namespace irds::testing {

TestHttpServer::TestHttpServer() : server_(std::make_unique<httplib::Server>()) {
  server_->Get(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
    std::shared_ptr<std::string> body;
    Mode mode;
    bool drop = false;
    {
      std::lock_guard lock(mutex_);
      auto it = bodies_.find(req.path);
      mode = mode_;
      if (it == bodies_.end() || mode == Mode::not_found) {
        res.status = 404;
        return;
      }
      body = std::make_shared<std::string>(it->second);
      const bool dropping = mode == Mode::drop_with_range || mode == Mode::drop_without_range;
      if (req.method == "GET" && dropping && drops_left_ > 0) {
        --drops_left_;
        drop = true;
      }
    }
    if (req.method == "GET") {
      ++get_requests_;
      if (req.has_header("Range")) ++range_requests_;
    }
    if (mode == Mode::corrupt && !body->empty()) (*body)[body->size() / 2] ^= 0x5A;

    const bool ranges = mode != Mode::drop_without_range;
    std::size_t start = 0;
    if (ranges) {
      res.set_header("Accept-Ranges", "bytes");
      if (!req.ranges.empty() && req.ranges[0].first > 0) {
        start = static_cast<std::size_t>(req.ranges[0].first);
      }
    } else {
      // An explicit 200 keeps the server from honouring Range.
      res.status = 200;
    }
    const std::size_t limit = drop ? start + (body->size() - std::min(start, body->size())) / 2
                                   : body->size();
    res.set_content_provider(
        body->size(), "application/octet-stream",
        [this, body, limit](std::size_t offset, std::size_t length, httplib::DataSink& sink) {
          if (offset >= limit) return false;
          const auto n = std::min<std::size_t>({length, limit - offset, 8192});
          sink.write(body->data() + offset, n);
          bytes_sent_ += n;
          return true;
        });
  });

  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("test server cannot bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

TestHttpServer::~TestHttpServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void TestHttpServer::put(const std::string& path, std::string body) {
  std::lock_guard lock(mutex_);
  bodies_[path] = std::move(body);
}

void TestHttpServer::set_mode(Mode mode, int drops) {
  std::lock_guard lock(mutex_);
  mode_ = mode;
  drops_left_ = drops;
}

std::string TestHttpServer::base_url() const {
  return "http://127.0.0.1:" + std::to_string(port_);
}

void TestHttpServer::reset_counters() {
  bytes_sent_ = 0;
  get_requests_ = 0;
  range_requests_ = 0;
}

}  // namespace irds::testing
