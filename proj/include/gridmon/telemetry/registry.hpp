#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace gridmon::telemetry {

struct RegistryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DeviceInfo {
  std::string phase;     // L1 | L2 | L3
  std::string location;
  std::string vendor;
  std::string bus;       // grid node the device measures, "" if unmapped
};

/// Static metadata keyed by device id; the ingestion path copies these tags
/// onto every stored point.
class DeviceRegistry {
 public:
  void add(const std::string& device_id, DeviceInfo info);
  const DeviceInfo* find(const std::string& device_id) const;
  std::size_t size() const { return devices_.size(); }
  const std::map<std::string, DeviceInfo>& devices() const { return devices_; }

  /// JSON object: `{"<device_id>": {"phase": "L1", "location": ...,
  /// "vendor": ..., "bus"?: ...}, ...}`.
  static DeviceRegistry from_json(const std::string& text);
  static DeviceRegistry load(const std::string& path);

 private:
  std::map<std::string, DeviceInfo> devices_;
};

/// Tag values are embedded verbatim in the store's line format, so they may
/// not contain the characters that delimit it.
bool valid_tag_value(const std::string& value);

}  // namespace gridmon::telemetry
