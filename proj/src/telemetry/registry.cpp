#include "gridmon/telemetry/registry.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gridmon::telemetry {

bool valid_tag_value(const std::string& value) {
  if (value.empty()) return false;
  for (char c : value)
    if (c == ' ' || c == ',' || c == '=' || c == '\n' || c == '\r') return false;
  return true;
}

void DeviceRegistry::add(const std::string& device_id, DeviceInfo info) {
  if (!valid_tag_value(device_id))
    throw RegistryError("device id unusable as a tag value: '" + device_id + "'");
  if (info.phase != "L1" && info.phase != "L2" && info.phase != "L3")
    throw RegistryError(device_id + ": phase must be L1, L2 or L3, got '" + info.phase + "'");
  if (!valid_tag_value(info.location) || !valid_tag_value(info.vendor))
    throw RegistryError(device_id + ": location and vendor must be usable tag values");
  if (!devices_.emplace(device_id, std::move(info)).second)
    throw RegistryError("duplicate device id: " + device_id);
}

const DeviceInfo* DeviceRegistry::find(const std::string& device_id) const {
  auto it = devices_.find(device_id);
  return it == devices_.end() ? nullptr : &it->second;
}

DeviceRegistry DeviceRegistry::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw RegistryError(std::string("registry is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw RegistryError("registry must be a JSON object");
  DeviceRegistry reg;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const auto& entry = it.value();
    if (!entry.is_object())
      throw RegistryError(it.key() + ": registry entry must be an object");
    DeviceInfo info;
    try {
      info.phase = entry.at("phase").get<std::string>();
      info.location = entry.at("location").get<std::string>();
      info.vendor = entry.at("vendor").get<std::string>();
      info.bus = entry.value("bus", std::string{});
    } catch (const nlohmann::json::exception& e) {
      throw RegistryError(it.key() + ": " + e.what());
    }
    reg.add(it.key(), std::move(info));
  }
  return reg;
}

DeviceRegistry DeviceRegistry::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RegistryError("cannot open registry: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace gridmon::telemetry
