#include "gridmon/telemetry/message.hpp"

#include "gridmon/util.hpp"
#include "json.hpp"

namespace gridmon::telemetry {

const char* parse_error_kind_name(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::MalformedTopic: return "malformed_topic";
    case ParseErrorKind::InvalidJson: return "invalid_json";
    case ParseErrorKind::MissingVoltage: return "missing_voltage";
    case ParseErrorKind::BadTimestamp: return "bad_timestamp";
  }
  return "unknown";
}

std::string sensor_topic(const std::string& device_id) {
  return "tele/" + device_id + "/SENSOR";
}

Measurement parse_sensor_message(const WireMessage& msg) {
  static const std::string prefix = "tele/";
  static const std::string suffix = "/SENSOR";
  const std::string& topic = msg.topic;
  if (topic.size() <= prefix.size() + suffix.size() ||
      topic.compare(0, prefix.size(), prefix) != 0 ||
      topic.compare(topic.size() - suffix.size(), suffix.size(), suffix) != 0)
    throw ParseError(ParseErrorKind::MalformedTopic,
                     "topic must be tele/<device_id>/SENSOR, got '" + topic + "'");
  const std::string device =
      topic.substr(prefix.size(), topic.size() - prefix.size() - suffix.size());
  if (device.empty() || device.find('/') != std::string::npos)
    throw ParseError(ParseErrorKind::MalformedTopic,
                     "bad device id in topic '" + topic + "'");

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(msg.payload);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseErrorKind::InvalidJson,
                     std::string("payload is not valid JSON: ") + e.what());
  }
  if (!doc.is_object())
    throw ParseError(ParseErrorKind::InvalidJson, "payload must be a JSON object");

  if (!doc.contains("ENERGY") || !doc.at("ENERGY").is_object() ||
      !doc.at("ENERGY").contains("Voltage") || !doc.at("ENERGY").at("Voltage").is_number())
    throw ParseError(ParseErrorKind::MissingVoltage, "payload lacks numeric ENERGY.Voltage");

  Measurement m;
  m.device_id = device;
  m.voltage_v = doc.at("ENERGY").at("Voltage").get<double>();
  if (!doc.contains("Time") || !doc.at("Time").is_string())
    throw ParseError(ParseErrorKind::BadTimestamp, "payload lacks a Time string");
  try {
    m.timestamp_ns = parse_iso8601_utc_ns(doc.at("Time").get<std::string>());
  } catch (const TimeParseError& e) {
    throw ParseError(ParseErrorKind::BadTimestamp, e.what());
  }
  const auto& energy = doc.at("ENERGY");
  if (energy.contains("Power") && energy.at("Power").is_number())
    m.power_w = energy.at("Power").get<double>();
  if (energy.contains("Current") && energy.at("Current").is_number())
    m.current_a = energy.at("Current").get<double>();
  return m;
}

WireMessage encode_sensor_message(const Measurement& m) {
  nlohmann::json energy;
  energy["Voltage"] = m.voltage_v;
  if (m.power_w) energy["Power"] = *m.power_w;
  if (m.current_a) energy["Current"] = *m.current_a;
  nlohmann::json doc;
  doc["Time"] = format_iso8601_utc(m.timestamp_ns);
  doc["ENERGY"] = std::move(energy);
  return {sensor_topic(m.device_id), doc.dump()};
}

}  // namespace gridmon::telemetry
