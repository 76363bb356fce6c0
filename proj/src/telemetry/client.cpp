#include "gridmon/telemetry/client.hpp"

#include <netdb.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <exception>
#include <thread>

#include "socket_io.hpp"

namespace gridmon::telemetry {

PublishClient::PublishClient(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(port);
  const int rc = ::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res);
  if (rc != 0) throw ClientError("cannot resolve '" + host + "': " + gai_strerror(rc));
  std::string err = "no usable address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      err = std::strerror(errno);
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    err = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw ClientError("cannot connect to " + host + ":" + port_str + ": " + err);
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

PublishClient::~PublishClient() { close(); }

void PublishClient::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::string PublishClient::request(const WireMessage& msg) {
  if (fd_ < 0) throw ClientError("client is closed");
  detail::write_frame(fd_, msg);
  auto resp = detail::read_frame(fd_);
  if (!resp) throw ClientError("connection closed before the response arrived");
  return resp->payload;
}

std::vector<std::string> PublishClient::publish(const std::vector<WireMessage>& msgs) {
  if (fd_ < 0) throw ClientError("client is closed");
  std::vector<std::string> responses(msgs.size());
  std::exception_ptr reader_error;
  std::thread reader([&] {
    try {
      for (std::size_t i = 0; i < msgs.size(); ++i) {
        auto resp = detail::read_frame(fd_);
        if (!resp)
          throw ClientError("connection closed after " + std::to_string(i) + " responses");
        responses[i] = resp->payload;
      }
    } catch (...) {
      reader_error = std::current_exception();
    }
  });
  try {
    for (const auto& m : msgs) detail::write_frame(fd_, m);
  } catch (...) {
    ::shutdown(fd_, SHUT_RDWR);  // unblocks the reader
    reader.join();
    throw;
  }
  reader.join();
  if (reader_error) std::rethrow_exception(reader_error);
  return responses;
}

}  // namespace gridmon::telemetry
