#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace gridmon {

struct Measurement {
  std::string device_id;
  std::int64_t timestamp_ns = 0;
  double voltage_v = 0.0;
  std::optional<double> power_w;
  std::optional<double> current_a;
};

}  // namespace gridmon
