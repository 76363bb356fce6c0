#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "gridmon/telemetry/message.hpp"

namespace gridmon::telemetry {

/// Frame layout on the stream:
///   u32be total_len | u16be topic_len | topic bytes | payload bytes
/// where total_len = 2 + topic_len + payload_len. Requests and responses use
/// the same framing; response payloads are JSON.
inline constexpr std::size_t kMaxFrameBytes = 1u << 20;

struct FramingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string encode_frame(const WireMessage& msg);

/// Decodes the bytes after the u32 length prefix.
WireMessage decode_frame_body(const std::string& body);

/// Topic reserved for the health/stats query; any payload.
inline constexpr const char* kStatsTopic = "$SYS/STATS";

}  // namespace gridmon::telemetry
