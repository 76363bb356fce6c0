#include "gridmon/telemetry/store.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <tuple>

#include "gridmon/util.hpp"

namespace gridmon::telemetry {

OutOfOrderError::OutOfOrderError(const std::string& device_id, std::int64_t timestamp_ns_,
                                 std::int64_t newest_ns_)
    : StoreError("out-of-order timestamp for device " + device_id + ": " +
                 std::to_string(timestamp_ns_) + " ns is older than stored " +
                 std::to_string(newest_ns_) + " ns"),
      device(device_id),
      timestamp_ns(timestamp_ns_),
      newest_ns(newest_ns_) {}

TimeSeriesPoint augment(const Measurement& m, const DeviceRegistry& registry) {
  TimeSeriesPoint p;
  p.device = m.device_id;
  p.value_v = m.voltage_v;
  p.timestamp_ns = m.timestamp_ns;
  if (const DeviceInfo* info = registry.find(m.device_id)) {
    p.phase = info->phase;
    p.location = info->location;
    p.vendor = info->vendor;
  } else {
    p.phase = p.location = p.vendor = "unknown";
    p.unknown_device = true;
  }
  return p;
}

std::string to_line(const TimeSeriesPoint& point) {
  return "voltage,device=" + point.device + ",phase=" + point.phase +
         ",location=" + point.location + ",vendor=" + point.vendor +
         " value=" + format_double(point.value_v) + " " +
         std::to_string(point.timestamp_ns);
}

TimeSeriesPoint parse_line(const std::string& line) {
  const auto sp1 = line.find(' ');
  const auto sp2 = line.find(' ', sp1 == std::string::npos ? sp1 : sp1 + 1);
  if (sp1 == std::string::npos || sp2 == std::string::npos ||
      line.find(' ', sp2 + 1) != std::string::npos)
    throw StoreError("bad point line: " + line);
  const std::string head = line.substr(0, sp1);
  const std::string value_part = line.substr(sp1 + 1, sp2 - sp1 - 1);
  const std::string ts_part = line.substr(sp2 + 1);

  TimeSeriesPoint p;
  std::istringstream hs(head);
  std::string tok;
  if (!std::getline(hs, tok, ',') || tok != "voltage")
    throw StoreError("unknown series in line: " + line);
  while (std::getline(hs, tok, ',')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      throw StoreError("bad tag in line: " + line);
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (val.empty()) throw StoreError("empty tag value in line: " + line);
    if (key == "device") p.device = val;
    else if (key == "phase") p.phase = val;
    else if (key == "location") p.location = val;
    else if (key == "vendor") p.vendor = val;
    else throw StoreError("unknown tag '" + key + "' in line: " + line);
  }
  if (p.device.empty() || p.phase.empty() || p.location.empty() || p.vendor.empty())
    throw StoreError("incomplete tag set in line: " + line);
  if (value_part.rfind("value=", 0) != 0)
    throw StoreError("missing value field in line: " + line);
  try {
    std::size_t used = 0;
    const std::string num = value_part.substr(6);
    p.value_v = std::stod(num, &used);
    if (used != num.size()) throw std::invalid_argument(num);
    used = 0;
    p.timestamp_ns = std::stoll(ts_part, &used);
    if (used != ts_part.size()) throw std::invalid_argument(ts_part);
  } catch (const std::exception&) {
    throw StoreError("bad number in line: " + line);
  }
  p.unknown_device =
      p.phase == "unknown" && p.location == "unknown" && p.vendor == "unknown";
  return p;
}

TimeSeriesStore::TimeSeriesStore(const std::string& dir, Mode mode) : mode_(mode) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (mode_ == Mode::ReadWrite) {
    fs::create_directories(dir, ec);
    if (ec) throw StoreError("cannot create store directory " + dir + ": " + ec.message());
  } else if (!fs::is_directory(dir)) {
    throw StoreError("store directory does not exist: " + dir);
  }
  path_ = (fs::path(dir) / "points.lp").string();
  load_log();
  if (mode_ == Mode::ReadWrite) {
    out_ = std::fopen(path_.c_str(), "a");
    if (!out_) throw StoreError("cannot open " + path_ + ": " + std::strerror(errno));
  }
}

TimeSeriesStore::~TimeSeriesStore() {
  if (out_) std::fclose(out_);
}

void TimeSeriesStore::load_log() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // nothing stored yet
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::size_t pos = 0;
  std::size_t complete = 0;
  while (true) {
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) break;
    const std::string line = content.substr(pos, nl - pos);
    if (!line.empty()) {
      TimeSeriesPoint p = parse_line(line);
      seen_[p.device].insert(p.timestamp_ns);
      points_.push_back(std::move(p));
    }
    pos = nl + 1;
    complete = pos;
  }
  if (complete != content.size() && mode_ == Mode::ReadWrite) {
    // Torn final line from an interrupted write; drop it before appending.
    std::error_code ec;
    std::filesystem::resize_file(path_, complete, ec);
    if (ec) throw StoreError("cannot truncate torn line in " + path_ + ": " + ec.message());
  }
}

bool TimeSeriesStore::append(const TimeSeriesPoint& point) {
  if (mode_ == Mode::ReadOnly) throw StoreError("store opened read-only");
  for (const std::string* tag : {&point.device, &point.phase, &point.location, &point.vendor})
    if (!valid_tag_value(*tag))
      throw StoreError("tag value unusable in the line format: '" + *tag + "'");
  if (!std::isfinite(point.value_v)) throw StoreError("non-finite value");

  std::unique_lock lock(mu_);
  auto& stamps = seen_[point.device];
  if (stamps.count(point.timestamp_ns)) return false;
  if (!stamps.empty() && point.timestamp_ns < *stamps.rbegin())
    throw OutOfOrderError(point.device, point.timestamp_ns, *stamps.rbegin());
  const std::string line = to_line(point) + "\n";
  if (std::fwrite(line.data(), 1, line.size(), out_) != line.size() ||
      std::fflush(out_) != 0)
    throw StoreError("write to " + path_ + " failed: " + std::strerror(errno));
  stamps.insert(point.timestamp_ns);
  points_.push_back(point);
  return true;
}

std::vector<TimeSeriesPoint> TimeSeriesStore::query(const TagFilter& filter,
                                                    std::int64_t start_ns,
                                                    std::int64_t end_ns) const {
  if (start_ns > end_ns) throw std::invalid_argument("query range start after end");
  std::shared_lock lock(mu_);
  std::vector<TimeSeriesPoint> out;
  for (const auto& p : points_) {
    if (p.timestamp_ns < start_ns || p.timestamp_ns >= end_ns) continue;
    if (filter.device && p.device != *filter.device) continue;
    if (filter.phase && p.phase != *filter.phase) continue;
    if (filter.location && p.location != *filter.location) continue;
    if (filter.vendor && p.vendor != *filter.vendor) continue;
    out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(), [](const TimeSeriesPoint& a, const TimeSeriesPoint& b) {
    return std::tie(a.timestamp_ns, a.device) < std::tie(b.timestamp_ns, b.device);
  });
  return out;
}

std::size_t TimeSeriesStore::size() const {
  std::shared_lock lock(mu_);
  return points_.size();
}

std::map<std::string, std::int64_t> TimeSeriesStore::last_timestamps() const {
  std::shared_lock lock(mu_);
  std::map<std::string, std::int64_t> out;
  for (const auto& [device, stamps] : seen_)
    if (!stamps.empty()) out[device] = *stamps.rbegin();
  return out;
}

}  // namespace gridmon::telemetry
