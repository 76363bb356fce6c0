#include "gridmon/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>

namespace gridmon {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

std::int64_t parse_iso8601_utc_ns(const std::string& text) {
  std::tm tm{};
  int y, mo, d, h, mi, s;
  char z = '\0';
  const int matched =
      std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &z);
  if (matched < 6 || (matched == 7 && z != 'Z'))
    throw TimeParseError("unparseable timestamp: " + text);
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60 ||
      h < 0 || mi < 0 || s < 0)
    throw TimeParseError("timestamp field out of range: " + text);
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = s;
  const time_t secs = timegm(&tm);
  if (secs == static_cast<time_t>(-1))
    throw TimeParseError("unparseable timestamp: " + text);
  return static_cast<std::int64_t>(secs) * 1000000000LL;
}

std::string format_iso8601_utc(std::int64_t timestamp_ns) {
  const time_t secs = static_cast<time_t>(timestamp_ns / 1000000000LL);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EventRng::EventRng(std::uint64_t seed, std::uint64_t event_key) {
  state_ = seed ^ (event_key * 0x9E3779B97F4A7C15ULL);
  // Burn a few rounds so nearby event keys decorrelate.
  splitmix64(state_);
  splitmix64(state_);
}

double EventRng::uniform01() {
  return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
}

double EventRng::normal(double sigma) {
  // Box-Muller; written out so the draw depends only on splitmix64 output,
  // not on a library distribution's implementation.
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return sigma * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace gridmon
