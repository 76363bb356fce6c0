#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridmon/telemetry/wire.hpp"

namespace gridmon::telemetry {

struct ClientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Blocking publisher over the framed protocol. publish() pipelines: a
/// reader thread drains responses while requests are still being written,
/// so large replays cannot deadlock on full socket buffers.
class PublishClient {
 public:
  PublishClient(const std::string& host, std::uint16_t port);
  ~PublishClient();
  PublishClient(const PublishClient&) = delete;
  PublishClient& operator=(const PublishClient&) = delete;

  /// One round trip; returns the response payload (JSON).
  std::string request(const WireMessage& msg);

  /// Sends every message, returns response payloads in request order.
  std::vector<std::string> publish(const std::vector<WireMessage>& msgs);

  void close();

 private:
  int fd_ = -1;
};

}  // namespace gridmon::telemetry
