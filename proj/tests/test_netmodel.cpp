#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <complex>
#include <set>

#include "gridmon/netmodel.hpp"

using namespace gridmon;

TEST_CASE("reference feeder has 37 buses in a valid radial tree") {
  const GridModel grid = build_ieee37();
  CHECK(grid.buses.size() == 37);
  CHECK(grid.lines.size() == 36);
  CHECK(grid.slack_bus() == "799");
  CHECK(validate(grid).empty());

  std::set<std::string> ids;
  for (const auto& b : grid.buses) ids.insert(b.id);
  CHECK(ids.size() == 37);
  CHECK(ids.count("775") == 1);  // transformer secondary is an ordinary bus
  CHECK(ids.count("701") == 1);  // regulator modeled as a line
}

TEST_CASE("every segment gets the configured length and cable") {
  LineParams params;
  params.r_ohm_per_km = 0.5;
  const GridModel grid = build_ieee37(25.0, params, 231.0);
  CHECK(grid.slack_voltage_v == 231.0);
  for (const auto& line : grid.lines) {
    CHECK(line.length_m == 25.0);
    CHECK(line.params.r_ohm_per_km == 0.5);
  }
}

TEST_CASE("path impedance accumulates hop by hop") {
  const GridModel grid = build_ieee37();  // 40 m spacing, 0.208 ohm/km
  const double hop_r = 0.208 * 0.040;
  CHECK(path_impedance(grid, "799") == std::complex<double>{0.0, 0.0});
  CHECK(path_impedance(grid, "701").real() == doctest::Approx(hop_r));
  // 741 sits 12 hops from the slack, 703 three hops.
  CHECK(path_impedance(grid, "741").real() == doctest::Approx(12 * hop_r));
  CHECK(path_impedance(grid, "703").real() == doctest::Approx(3 * hop_r));
  CHECK_THROWS_AS(path_impedance(grid, "nope"), UnknownBusError);
}

TEST_CASE("feeder index puts children after parents") {
  const GridModel grid = build_ieee37();
  const FeederIndex idx = FeederIndex::build(grid);
  REQUIRE(idx.bus_ids.size() == 37);
  CHECK(idx.bus_ids[0] == "799");
  CHECK(idx.parent[0] == -1);
  for (std::size_t i = 1; i < idx.bus_ids.size(); ++i) {
    CHECK(idx.parent[i] >= 0);
    CHECK(idx.parent[i] < static_cast<int>(i));
  }
  CHECK(idx.subtree(0).size() == 37);
}

TEST_CASE("validate reports duplicate ids, cycles and disconnection") {
  GridModel grid = build_ieee37();
  grid.buses.push_back({"741", BusKind::Load});
  CHECK(!validate(grid).empty());

  grid = build_ieee37();
  grid.lines.push_back({"741", "703", 40.0, {}});  // closes a loop
  CHECK(!validate(grid).empty());

  grid = build_ieee37();
  grid.buses.push_back({"island", BusKind::Load});
  CHECK(!validate(grid).empty());

  grid = build_ieee37();
  for (auto& bus : grid.buses) bus.kind = BusKind::Load;  // no slack left
  CHECK(!validate(grid).empty());
}

TEST_CASE("grid config parses overrides and rejects unknown keys") {
  const GridConfig cfg = parse_grid_config(
      "# cable data\n"
      "spacing_m = 30\n"
      "r_ohm_per_km = 0.3\n"
      "slack_voltage_v = 229\n");
  CHECK(cfg.spacing_m == 30.0);
  CHECK(cfg.params.r_ohm_per_km == 0.3);
  CHECK(cfg.params.x_ohm_per_km == 0.080);  // untouched default
  CHECK(cfg.slack_voltage_v == 229.0);
  CHECK_THROWS_AS(parse_grid_config("bogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_grid_config("spacing_m = fast\n"), ConfigError);
}
