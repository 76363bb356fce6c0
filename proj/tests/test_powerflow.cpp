#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gridmon/netmodel.hpp"
#include "gridmon/powerflow.hpp"
#include "gridmon/util.hpp"

using namespace gridmon;

namespace {

// Slack plus one load bus over a resistive line. R in ohms.
GridModel two_bus(double r_ohm) {
  GridModel g;
  g.buses = {{"src", BusKind::Slack}, {"load", BusKind::Load}};
  LineParams params;
  params.r_ohm_per_km = r_ohm * 10.0;  // 100 m of this cable = r_ohm
  params.x_ohm_per_km = 0.0;
  g.lines = {{"src", "load", 100.0, params}};
  return g;
}

}  // namespace

TEST_CASE("two-bus resistive case matches the quadratic closed form") {
  const GridModel g = two_bus(0.1);
  LoadSet loads;
  loads.set("load", 1000.0);
  const VoltageSolution sol = solve(g, loads);
  REQUIRE(sol.converged);
  // V^2 - V0*V + P*R = 0, physical root.
  const double expect = (230.0 + std::sqrt(230.0 * 230.0 - 4.0 * 0.1 * 1000.0)) / 2.0;
  CHECK(sol.at("load") == doctest::Approx(expect).epsilon(1e-9));
  CHECK(sol.at("src") == 230.0);  // slack pinned exactly

  const double i = 1000.0 / sol.at("load");
  CHECK(sol.total_loss_w == doctest::Approx(i * i * 0.1).epsilon(1e-6));
  CHECK(power_balance(g, loads, sol) < 1e-6);
}

TEST_CASE("zero load leaves every bus at the slack voltage") {
  const GridModel grid = build_ieee37();
  const VoltageSolution sol = solve(grid, LoadSet{});
  REQUIRE(sol.converged);
  for (const auto& kv : sol.voltage_v) CHECK(kv.second == 230.0);
  CHECK(sol.total_loss_w == 0.0);
}

TEST_CASE("loads only ever drop downstream voltages") {
  const GridModel grid = build_ieee37();
  LoadSet loads;
  loads.set("741", 5000.0);
  const VoltageSolution sol = solve(grid, loads);
  REQUIRE(sol.converged);
  for (const auto& kv : sol.voltage_v) CHECK(kv.second <= 230.0);
  // Deeper buses on the loaded path sag more.
  CHECK(sol.at("741") < sol.at("703"));
  CHECK(sol.at("703") < sol.at("701"));
  // A bus on a different branch only sags by the shared path.
  CHECK(sol.at("741") < sol.at("712"));
}

TEST_CASE("power balances on randomized load sets") {
  const GridModel grid = build_ieee37();
  EventRng rng(7, 0);
  for (int trial = 0; trial < 20; ++trial) {
    LoadSet loads;
    for (const auto& bus : grid.buses) {
      if (bus.kind == BusKind::Slack) continue;
      if (rng.uniform01() < 0.5) loads.set(bus.id, rng.uniform01() * 2000.0);
    }
    const VoltageSolution sol = solve(grid, loads);
    REQUIRE(sol.converged);
    const double scale = std::max(1.0, loads.total_w());
    CHECK(power_balance(grid, loads, sol) / scale < 1e-6);
  }
}

TEST_CASE("slack loads and unknown buses are rejected") {
  const GridModel grid = build_ieee37();
  LoadSet slack_load;
  slack_load.set("799", 10000.0);
  CHECK_THROWS_AS(solve(grid, slack_load), std::invalid_argument);

  LoadSet bad;
  bad.set("outer-space", 100.0);
  CHECK_THROWS_AS(solve(grid, bad), UnknownBusError);
}

TEST_CASE("collapsing voltage raises the infeasibility error") {
  const GridModel g = two_bus(0.1);
  LoadSet loads;
  loads.set("load", 200000.0);  // far past the nose of the PV curve
  CHECK_THROWS_AS(solve(g, loads), InfeasibleLoadError);
}

TEST_CASE("solution lookups fail loudly for unknown buses") {
  const GridModel g = two_bus(0.1);
  const VoltageSolution sol = solve(g, LoadSet{});
  CHECK_THROWS_AS(sol.at("missing"), UnknownBusError);
}
