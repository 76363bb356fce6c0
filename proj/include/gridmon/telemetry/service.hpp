#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gridmon/telemetry/message.hpp"
#include "gridmon/telemetry/registry.hpp"
#include "gridmon/telemetry/store.hpp"

namespace gridmon::telemetry {

struct BindError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ServiceStats {
  std::uint64_t accepted = 0;       // parsed and stored (deduplicated included)
  std::uint64_t rejected = 0;       // parse failures and store rejections
  std::uint64_t deduplicated = 0;   // accepted replays of an existing point
  std::map<std::string, std::int64_t> last_timestamp_ns;  // per device
};

/// TCP ingestion endpoint: one thread per connection, each request frame
/// runs parse -> augment -> append and is answered with a framed JSON
/// status. Malformed input is counted and answered, never fatal. The
/// kStatsTopic topic returns the current ServiceStats as JSON.
class IngestService {
 public:
  IngestService(std::string host, std::uint16_t port, DeviceRegistry registry,
                TimeSeriesStore& store);
  ~IngestService();
  IngestService(const IngestService&) = delete;
  IngestService& operator=(const IngestService&) = delete;

  void start();  // binds and begins accepting; BindError on failure
  void stop();   // closes the listener and every connection, joins threads

  std::uint16_t port() const { return port_; }  // actual port after start()
  ServiceStats stats() const;

  /// Receives one line per rejected message; unset means silent.
  void set_log(std::function<void(const std::string&)> sink);

 private:
  void accept_loop();
  void handle_connection(int fd);
  std::string handle_request(const WireMessage& msg);

  std::string host_;
  std::uint16_t port_;
  DeviceRegistry registry_;
  TimeSeriesStore& store_;
  std::function<void(const std::string&)> log_;

  int listen_fd_ = -1;
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
  std::set<int> conn_fds_;
  mutable std::mutex mu_;
  ServiceStats stats_;
  std::atomic<bool> running_{false};
};

}  // namespace gridmon::telemetry
