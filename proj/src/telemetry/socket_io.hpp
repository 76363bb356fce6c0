#pragma once

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <string>

#include "gridmon/telemetry/wire.hpp"

namespace gridmon::telemetry::detail {

/// False on a clean close before the first byte; throws mid-read.
inline bool read_exact(int fd, void* buf, std::size_t n) {
  auto* p = static_cast<char*>(buf);
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, p + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;
      throw FramingError("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw FramingError(std::string("recv failed: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

inline void write_all(int fd, const void* buf, std::size_t n) {
  const char* p = static_cast<const char*>(buf);
  std::size_t sent = 0;
  while (sent < n) {
    const ssize_t r = ::send(fd, p + sent, n - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw FramingError(std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(r);
  }
}

/// Nullopt on clean end-of-stream between frames.
inline std::optional<WireMessage> read_frame(int fd) {
  unsigned char len_buf[4];
  if (!read_exact(fd, len_buf, sizeof(len_buf))) return std::nullopt;
  const std::size_t total = (static_cast<std::size_t>(len_buf[0]) << 24) |
                            (static_cast<std::size_t>(len_buf[1]) << 16) |
                            (static_cast<std::size_t>(len_buf[2]) << 8) |
                            static_cast<std::size_t>(len_buf[3]);
  if (total < 2 || total > kMaxFrameBytes)
    throw FramingError("bad frame length " + std::to_string(total));
  std::string body(total, '\0');
  if (!read_exact(fd, body.data(), total))
    throw FramingError("connection closed mid-frame");
  return decode_frame_body(body);
}

inline void write_frame(int fd, const WireMessage& msg) {
  const std::string frame = encode_frame(msg);
  write_all(fd, frame.data(), frame.size());
}

}  // namespace gridmon::telemetry::detail
