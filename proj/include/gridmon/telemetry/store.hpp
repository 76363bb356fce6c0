#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridmon/measurement.hpp"
#include "gridmon/telemetry/registry.hpp"

namespace gridmon::telemetry {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A new timestamp older than one already stored for the same device.
struct OutOfOrderError : StoreError {
  OutOfOrderError(const std::string& device_id, std::int64_t timestamp_ns_,
                  std::int64_t newest_ns_);
  std::string device;
  std::int64_t timestamp_ns;
  std::int64_t newest_ns;
};

struct TimeSeriesPoint {
  std::string device;
  std::string phase;
  std::string location;
  std::string vendor;
  double value_v = 0.0;
  std::int64_t timestamp_ns = 0;
  bool unknown_device = false;  // set when the registry had no entry
};

/// Copies registry tags onto the measurement; unregistered devices get
/// "unknown" tags and a warning flag. Value and timestamp pass through
/// untouched.
TimeSeriesPoint augment(const Measurement& m, const DeviceRegistry& registry);

/// `voltage,device=<id>,phase=<p>,location=<l>,vendor=<v> value=<decimal> <unix_ns>`
std::string to_line(const TimeSeriesPoint& point);
TimeSeriesPoint parse_line(const std::string& line);

struct TagFilter {
  std::optional<std::string> device;
  std::optional<std::string> phase;
  std::optional<std::string> location;
  std::optional<std::string> vendor;
};

/// Append-only log of voltage points, one line each, with an in-memory index
/// rebuilt by scanning the log on open. Single writer, any number of
/// readers; a reader opens the same directory in ReadOnly mode and sees
/// every fully written line. A torn final line (interrupted write) is
/// dropped: the writer truncates it, a reader ignores it.
class TimeSeriesStore {
 public:
  enum class Mode { ReadWrite, ReadOnly };

  explicit TimeSeriesStore(const std::string& dir, Mode mode = Mode::ReadWrite);
  ~TimeSeriesStore();
  TimeSeriesStore(const TimeSeriesStore&) = delete;
  TimeSeriesStore& operator=(const TimeSeriesStore&) = delete;

  /// Returns false when (device, timestamp) is already stored: the point is
  /// dropped so replays are idempotent. A timestamp older than the device's
  /// newest that is NOT already stored throws OutOfOrderError. The line is
  /// flushed before append returns.
  bool append(const TimeSeriesPoint& point);

  /// Points matching every set filter tag with start_ns <= t < end_ns,
  /// ordered by (timestamp, device).
  std::vector<TimeSeriesPoint> query(const TagFilter& filter, std::int64_t start_ns,
                                     std::int64_t end_ns) const;

  std::size_t size() const;
  std::map<std::string, std::int64_t> last_timestamps() const;
  const std::string& log_path() const { return path_; }

 private:
  void load_log();

  mutable std::shared_mutex mu_;
  std::string path_;
  Mode mode_;
  std::FILE* out_ = nullptr;
  std::vector<TimeSeriesPoint> points_;
  std::map<std::string, std::set<std::int64_t>> seen_;
};

}  // namespace gridmon::telemetry
