#include "gridmon/telemetry/wire.hpp"

namespace gridmon::telemetry {

std::string encode_frame(const WireMessage& msg) {
  if (msg.topic.size() > 0xFFFF) throw FramingError("topic longer than 64 KiB");
  const std::size_t total = 2 + msg.topic.size() + msg.payload.size();
  if (total > kMaxFrameBytes) throw FramingError("frame exceeds size limit");
  std::string out;
  out.reserve(4 + total);
  auto put8 = [&](std::size_t v) { out.push_back(static_cast<char>(v & 0xFF)); };
  put8(total >> 24);
  put8(total >> 16);
  put8(total >> 8);
  put8(total);
  put8(msg.topic.size() >> 8);
  put8(msg.topic.size());
  out += msg.topic;
  out += msg.payload;
  return out;
}

WireMessage decode_frame_body(const std::string& body) {
  if (body.size() < 2) throw FramingError("frame body shorter than the topic length field");
  const std::size_t topic_len = (static_cast<std::size_t>(static_cast<unsigned char>(body[0])) << 8) |
                                static_cast<unsigned char>(body[1]);
  if (2 + topic_len > body.size()) throw FramingError("topic length exceeds frame");
  WireMessage msg;
  msg.topic = body.substr(2, topic_len);
  msg.payload = body.substr(2 + topic_len);
  return msg;
}

}  // namespace gridmon::telemetry
