#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gridmon {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

struct TimeParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// "YYYY-MM-DDTHH:MM:SS" (optional trailing 'Z'), interpreted as UTC.
/// Sub-second fields are not accepted; device clocks tick in whole seconds.
std::int64_t parse_iso8601_utc_ns(const std::string& text);
std::string format_iso8601_utc(std::int64_t timestamp_ns);

/// splitmix64; the standard way to stretch one seed into many.
std::uint64_t splitmix64(std::uint64_t& state);

/// Stateless per-event generator: mixes a stream seed with an event key
/// (e.g. a timestamp) so identical inputs always yield identical draws.
class EventRng {
 public:
  EventRng(std::uint64_t seed, std::uint64_t event_key);

  double uniform01();      // [0, 1)
  double normal(double sigma);

 private:
  std::uint64_t state_;
};

std::uint64_t fnv1a64(const std::string& s);

}  // namespace gridmon
