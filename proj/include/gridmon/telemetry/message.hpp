#pragma once

#include <stdexcept>
#include <string>

#include "gridmon/measurement.hpp"

namespace gridmon::telemetry {

/// One published datum: a topic string and a UTF-8 JSON payload.
struct WireMessage {
  std::string topic;
  std::string payload;
};

enum class ParseErrorKind {
  MalformedTopic,
  InvalidJson,
  MissingVoltage,
  BadTimestamp,
};

struct ParseError : std::runtime_error {
  ParseError(ParseErrorKind k, const std::string& what)
      : std::runtime_error(what), kind(k) {}
  ParseErrorKind kind;
};

const char* parse_error_kind_name(ParseErrorKind kind);

std::string sensor_topic(const std::string& device_id);

/// Topic `tele/<device_id>/SENSOR`; payload
/// `{"Time": "<ISO-8601>", "ENERGY": {"Voltage": <num>, "Power"?: <num>, "Current"?: <num>}}`.
/// Voltage and Time are mandatory; each failure mode raises its own
/// ParseErrorKind so the service can report rejection reasons precisely.
Measurement parse_sensor_message(const WireMessage& msg);

/// Inverse of parse_sensor_message on the mandatory fields. Timestamps are
/// carried at second resolution (device clocks tick in whole seconds), so
/// sub-second components are dropped on encode.
WireMessage encode_sensor_message(const Measurement& m);

}  // namespace gridmon::telemetry
