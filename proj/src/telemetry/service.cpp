#include "gridmon/telemetry/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "gridmon/telemetry/message.hpp"
#include "gridmon/telemetry/wire.hpp"
#include "json.hpp"
#include "socket_io.hpp"

namespace gridmon::telemetry {

IngestService::IngestService(std::string host, std::uint16_t port, DeviceRegistry registry,
                             TimeSeriesStore& store)
    : host_(std::move(host)), port_(port), registry_(std::move(registry)), store_(store) {}

IngestService::~IngestService() { stop(); }

void IngestService::set_log(std::function<void(const std::string&)> sink) {
  log_ = std::move(sink);
}

void IngestService::start() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(port_);
  const int rc =
      ::getaddrinfo(host_.empty() ? nullptr : host_.c_str(), port_str.c_str(), &hints, &res);
  if (rc != 0)
    throw BindError("cannot resolve '" + host_ + "': " + gai_strerror(rc));
  int fd = -1;
  std::string err = "no usable address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      err = std::strerror(errno);
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) break;
    err = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw BindError("cannot bind " + host_ + ":" + port_str + ": " + err);

  sockaddr_storage sa{};
  socklen_t sl = sizeof(sa);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &sl) == 0) {
    if (sa.ss_family == AF_INET)
      port_ = ntohs(reinterpret_cast<sockaddr_in*>(&sa)->sin_port);
    else if (sa.ss_family == AF_INET6)
      port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&sa)->sin6_port);
  }
  listen_fd_ = fd;
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void IngestService::stop() {
  if (!running_.exchange(false)) {
    if (accept_thread_.joinable()) accept_thread_.join();
    return;
  }
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  {
    std::lock_guard lock(mu_);
    for (int fd : conn_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  for (auto& t : workers_)
    if (t.joinable()) t.join();
  workers_.clear();
  listen_fd_ = -1;
}

ServiceStats IngestService::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void IngestService::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listener closed by stop()
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    {
      std::lock_guard lock(mu_);
      conn_fds_.insert(fd);
    }
    workers_.emplace_back([this, fd] { handle_connection(fd); });
  }
}

void IngestService::handle_connection(int fd) {
  try {
    while (running_) {
      auto msg = detail::read_frame(fd);
      if (!msg) break;  // publisher hung up cleanly
      const std::string response = handle_request(*msg);
      detail::write_frame(fd, WireMessage{msg->topic, response});
    }
  } catch (const std::exception& e) {
    // Unframeable input tears down this connection only.
    std::lock_guard lock(mu_);
    ++stats_.rejected;
    if (log_) log_(std::string("connection dropped: ") + e.what());
  }
  ::close(fd);
  std::lock_guard lock(mu_);
  conn_fds_.erase(fd);
}

std::string IngestService::handle_request(const WireMessage& msg) {
  nlohmann::json resp;
  if (msg.topic == kStatsTopic) {
    const ServiceStats s = stats();
    resp["ok"] = true;
    resp["accepted"] = s.accepted;
    resp["rejected"] = s.rejected;
    resp["deduplicated"] = s.deduplicated;
    nlohmann::json last = nlohmann::json::object();
    for (const auto& [device, ts] : s.last_timestamp_ns) last[device] = ts;
    resp["last_timestamp_ns"] = std::move(last);
    return resp.dump();
  }

  auto reject = [&](const char* error, const std::string& detail) {
    {
      std::lock_guard lock(mu_);
      ++stats_.rejected;
    }
    if (log_) log_(std::string(error) + ": " + detail);
    resp["ok"] = false;
    resp["error"] = error;
    resp["detail"] = detail;
    return resp.dump();
  };

  try {
    const Measurement m = parse_sensor_message(msg);
    const TimeSeriesPoint point = augment(m, registry_);
    const bool stored = store_.append(point);
    std::lock_guard lock(mu_);
    ++stats_.accepted;
    if (!stored) ++stats_.deduplicated;
    auto it = stats_.last_timestamp_ns.find(m.device_id);
    if (it == stats_.last_timestamp_ns.end() || it->second < m.timestamp_ns)
      stats_.last_timestamp_ns[m.device_id] = m.timestamp_ns;
    resp["ok"] = true;
    resp["stored"] = stored;
    if (point.unknown_device) resp["warning"] = "device not in registry";
    return resp.dump();
  } catch (const ParseError& e) {
    return reject(parse_error_kind_name(e.kind), e.what());
  } catch (const OutOfOrderError& e) {
    return reject("out_of_order", e.what());
  } catch (const StoreError& e) {
    return reject("store", e.what());
  }
}

}  // namespace gridmon::telemetry
