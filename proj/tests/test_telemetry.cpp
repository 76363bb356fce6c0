#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gridmon/telemetry/client.hpp"
#include "gridmon/telemetry/message.hpp"
#include "gridmon/telemetry/registry.hpp"
#include "gridmon/telemetry/service.hpp"
#include "gridmon/telemetry/store.hpp"
#include "gridmon/telemetry/wire.hpp"
#include "json.hpp"

using namespace gridmon;
using namespace gridmon::telemetry;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gridmon-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

Measurement meas(const std::string& id, std::int64_t ts, double v) {
  Measurement m;
  m.device_id = id;
  m.timestamp_ns = ts;
  m.voltage_v = v;
  return m;
}

}  // namespace

TEST_CASE("sensor messages parse and re-encode") {
  WireMessage msg;
  msg.topic = "tele/plug-1/SENSOR";
  msg.payload = R"({"Time":"2023-01-01T00:10:00","ENERGY":{"Voltage":230.4,"Power":42.5}})";
  const Measurement m = parse_sensor_message(msg);
  CHECK(m.device_id == "plug-1");
  CHECK(m.voltage_v == 230.4);
  REQUIRE(m.power_w.has_value());
  CHECK(*m.power_w == 42.5);
  CHECK(!m.current_a.has_value());
  CHECK(m.timestamp_ns == 1672531800LL * 1000000000LL);

  const WireMessage back = encode_sensor_message(m);
  CHECK(back.topic == msg.topic);
  const Measurement again = parse_sensor_message(back);
  CHECK(again.timestamp_ns == m.timestamp_ns);
  CHECK(again.voltage_v == m.voltage_v);
}

TEST_CASE("each malformed input reports its own error kind") {
  auto kind_of = [](const std::string& topic, const std::string& payload) {
    try {
      parse_sensor_message({topic, payload});
    } catch (const ParseError& e) {
      return e.kind;
    }
    throw std::logic_error("expected a parse failure");
  };
  const char* good = R"({"Time":"2023-01-01T00:00:00","ENERGY":{"Voltage":230}})";
  CHECK(kind_of("tele/SENSOR", good) == ParseErrorKind::MalformedTopic);
  CHECK(kind_of("stat/p1/SENSOR", good) == ParseErrorKind::MalformedTopic);
  CHECK(kind_of("tele/a/b/SENSOR", good) == ParseErrorKind::MalformedTopic);
  CHECK(kind_of("tele/p1/SENSOR", "{nope") == ParseErrorKind::InvalidJson);
  CHECK(kind_of("tele/p1/SENSOR", R"({"Time":"2023-01-01T00:00:00"})") ==
        ParseErrorKind::MissingVoltage);
  CHECK(kind_of("tele/p1/SENSOR",
                R"({"Time":"2023-01-01T00:00:00","ENERGY":{"Voltage":"hi"}})") ==
        ParseErrorKind::MissingVoltage);
  CHECK(kind_of("tele/p1/SENSOR", R"({"Time":"yesterday","ENERGY":{"Voltage":230}})") ==
        ParseErrorKind::BadTimestamp);
  CHECK(kind_of("tele/p1/SENSOR", R"({"ENERGY":{"Voltage":230}})") ==
        ParseErrorKind::BadTimestamp);
  CHECK(std::string(parse_error_kind_name(ParseErrorKind::MalformedTopic)) ==
        "malformed_topic");
}

TEST_CASE("registry maps devices to tags and validates them") {
  const DeviceRegistry reg = DeviceRegistry::from_json(R"({
    "plug-1": {"phase": "L1", "location": "desk", "vendor": "nous"},
    "plug-2": {"phase": "L3", "location": "lab", "vendor": "shelly", "bus": "741"}
  })");
  REQUIRE(reg.find("plug-1") != nullptr);
  CHECK(reg.find("plug-1")->phase == "L1");
  CHECK(reg.find("plug-2")->bus == "741");
  CHECK(reg.find("ghost") == nullptr);

  DeviceRegistry bad;
  CHECK_THROWS(bad.add("x", {"L9", "desk", "nous", ""}));
  CHECK_THROWS(bad.add("x", {"L1", "has space", "nous", ""}));
  CHECK_THROWS(bad.add("x", {"L1", "desk", "a=b", ""}));
  bad.add("x", {"L1", "desk", "nous", ""});
  CHECK_THROWS(bad.add("x", {"L1", "desk", "nous", ""}));  // duplicate id
}

TEST_CASE("line protocol round-trips a point") {
  TimeSeriesPoint p;
  p.device = "plug-1";
  p.phase = "L2";
  p.location = "kitchen";
  p.vendor = "nous";
  p.value_v = 229.7;
  p.timestamp_ns = 1672531800123456789LL;
  const std::string line = to_line(p);
  CHECK(line ==
        "voltage,device=plug-1,phase=L2,location=kitchen,vendor=nous "
        "value=229.7 1672531800123456789");
  const TimeSeriesPoint q = parse_line(line);
  CHECK(q.device == p.device);
  CHECK(q.value_v == p.value_v);
  CHECK(q.timestamp_ns == p.timestamp_ns);
  CHECK(!q.unknown_device);
}

TEST_CASE("store appends, dedups and orders per device") {
  TempDir tmp;
  TimeSeriesStore store(tmp.path.string());
  DeviceRegistry reg;
  reg.add("p1", {"L1", "desk", "nous", ""});

  CHECK(store.append(augment(meas("p1", 100, 230.0), reg)));
  CHECK(store.append(augment(meas("p1", 200, 230.1), reg)));
  CHECK(store.append(augment(meas("p2", 150, 229.0), reg)));  // unknown device ok
  CHECK(store.size() == 3);

  // Replay of an existing (device, timestamp) is absorbed silently.
  CHECK(!store.append(augment(meas("p1", 200, 230.1), reg)));
  CHECK(store.size() == 3);

  // A new-but-older timestamp is a protocol violation.
  CHECK_THROWS_AS(store.append(augment(meas("p1", 50, 231.0), reg)), OutOfOrderError);

  const auto all = store.query({}, 0, 1000);
  REQUIRE(all.size() == 3);
  CHECK(all[0].timestamp_ns == 100);
  CHECK(all[1].timestamp_ns == 150);
  CHECK(all[2].timestamp_ns == 200);
  CHECK(all[1].unknown_device);
  CHECK(all[1].phase == "unknown");

  TagFilter by_device;
  by_device.device = "p1";
  CHECK(store.query(by_device, 0, 1000).size() == 2);
  CHECK(store.query(by_device, 0, 200).size() == 1);  // end exclusive
  TagFilter by_vendor;
  by_vendor.vendor = "nous";
  CHECK(store.query(by_vendor, 0, 1000).size() == 2);
  CHECK_THROWS_AS(store.query({}, 10, 5), std::invalid_argument);
}

TEST_CASE("store reloads its log and ignores a torn tail") {
  TempDir tmp;
  {
    TimeSeriesStore store(tmp.path.string());
    DeviceRegistry reg;
    store.append(augment(meas("p1", 100, 230.0), reg));
    store.append(augment(meas("p1", 200, 230.2), reg));
  }
  // Simulate a crash mid-append.
  {
    std::ofstream f(tmp.path / "points.lp", std::ios::app | std::ios::binary);
    f << "voltage,device=p1,phase=unknown,location=unknown,vendor=unknown val";
  }
  {
    TimeSeriesStore ro(tmp.path.string(), TimeSeriesStore::Mode::ReadOnly);
    CHECK(ro.size() == 2);
    CHECK_THROWS_AS(ro.append(augment(meas("p1", 300, 230.0), {})),
                    StoreError);  // read-only
  }
  {
    TimeSeriesStore rw(tmp.path.string());  // truncates the torn tail
    CHECK(rw.size() == 2);
    CHECK(rw.append(augment(meas("p1", 300, 230.4), {})));
  }
  TimeSeriesStore again(tmp.path.string(), TimeSeriesStore::Mode::ReadOnly);
  CHECK(again.size() == 3);
  CHECK(again.last_timestamps().at("p1") == 300);
}

TEST_CASE("frames encode length-prefixed topic and payload") {
  const WireMessage msg{"tele/p1/SENSOR", "{\"x\":1}"};
  const std::string frame = encode_frame(msg);
  // u32 total, u16 topic length, then the bytes.
  REQUIRE(frame.size() == 4 + 2 + msg.topic.size() + msg.payload.size());
  CHECK(static_cast<unsigned char>(frame[3]) == 2 + msg.topic.size() + msg.payload.size());
  const WireMessage back = decode_frame_body(frame.substr(4));
  CHECK(back.topic == msg.topic);
  CHECK(back.payload == msg.payload);

  CHECK_THROWS_AS(encode_frame({std::string(70000, 't'), ""}), FramingError);
  CHECK_THROWS_AS(encode_frame({"t", std::string(kMaxFrameBytes, 'p')}), FramingError);
  CHECK_THROWS_AS(decode_frame_body("\xff"), FramingError);
}

TEST_CASE("service ingests, answers stats and survives malformed input") {
  TempDir tmp;
  TimeSeriesStore store(tmp.path.string());
  DeviceRegistry reg;
  reg.add("p1", {"L1", "desk", "nous", ""});
  IngestService service("127.0.0.1", 0, std::move(reg), store);
  service.start();
  REQUIRE(service.port() != 0);

  PublishClient client("127.0.0.1", service.port());
  const auto ok = nlohmann::json::parse(
      client.request(encode_sensor_message(meas("p1", 1000000000, 230.0))));
  CHECK(ok.at("ok") == true);
  CHECK(ok.at("stored") == true);

  // Same point again: accepted but flagged as a duplicate.
  const auto dup = nlohmann::json::parse(
      client.request(encode_sensor_message(meas("p1", 1000000000, 230.0))));
  CHECK(dup.at("ok") == true);
  CHECK(dup.at("stored") == false);

  const auto bad = nlohmann::json::parse(client.request({"tele/p1/SENSOR", "{oops"}));
  CHECK(bad.at("ok") == false);
  CHECK(bad.at("error") == "invalid_json");

  const auto worse = nlohmann::json::parse(
      client.request(encode_sensor_message(meas("p1", 500, 230.0))));
  CHECK(worse.at("ok") == false);
  CHECK(worse.at("error") == "out_of_order");

  // Batch publish keeps responses aligned with requests.
  std::vector<WireMessage> batch;
  for (int i = 2; i < 52; ++i)
    batch.push_back(encode_sensor_message(meas("p1", i * 1000000000LL, 230.0 + i * 0.01)));
  const auto responses = client.publish(batch);
  REQUIRE(responses.size() == batch.size());
  for (const auto& r : responses) CHECK(nlohmann::json::parse(r).at("ok") == true);

  const auto stats = nlohmann::json::parse(client.request({kStatsTopic, ""}));
  CHECK(stats.at("accepted") == 52);
  CHECK(stats.at("rejected") == 2);
  CHECK(stats.at("deduplicated") == 1);
  CHECK(stats.at("last_timestamp_ns").at("p1") == 51 * 1000000000LL);

  CHECK(store.size() == 51);
  service.stop();
}

TEST_CASE("service rejects a second listener on the same port") {
  TempDir tmp;
  TimeSeriesStore store(tmp.path.string());
  IngestService first("127.0.0.1", 0, {}, store);
  first.start();
  IngestService second("127.0.0.1", first.port(), {}, store);
  CHECK_THROWS_AS(second.start(), BindError);
  first.stop();
}
