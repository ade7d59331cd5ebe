#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace irds::testing {

/// Local HTTP server with scripted failure modes for download tests.
class TestHttpServer {
 public:
  enum class Mode {
    normal,
    /// Advertises Range support; the first `drops` responses stop mid-body.
    drop_with_range,
    /// Ignores Range headers; the first `drops` responses stop mid-body.
    drop_without_range,
    /// Serves the body with one byte flipped.
    corrupt,
    not_found,
  };

  TestHttpServer();
  ~TestHttpServer();
  TestHttpServer(const TestHttpServer&) = delete;
  TestHttpServer& operator=(const TestHttpServer&) = delete;

  /// Serves `body` at `path` (which starts with '/').
  void put(const std::string& path, std::string body);
  void set_mode(Mode mode, int drops = 1);

  std::string base_url() const;
  std::string url(const std::string& path) const { return base_url() + path; }

  std::uint64_t body_bytes_sent() const noexcept { return bytes_sent_.load(); }
  int get_requests() const noexcept { return get_requests_.load(); }
  int range_requests() const noexcept { return range_requests_.load(); }
  void reset_counters();

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;

  std::mutex mutex_;
  std::map<std::string, std::string> bodies_;
  Mode mode_ = Mode::normal;
  int drops_left_ = 0;

  std::atomic<std::uint64_t> bytes_sent_{0};
  std::atomic<int> get_requests_{0};
  std::atomic<int> range_requests_{0};
};

}  // namespace irds::testing
