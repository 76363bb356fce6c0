#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gridmon/analysis.hpp"
#include "gridmon/netmodel.hpp"
#include "gridmon/powerflow.hpp"

using namespace gridmon;
using namespace gridmon::analysis;

TEST_CASE("band check flags only buses strictly outside the band") {
  VoltageSolution sol;
  sol.voltage_v = {{"a", 230.0}, {"b", 207.0}, {"c", 206.99}, {"d", 253.01}};
  const auto violations = check_voltage_band(sol, BandSpec{});
  REQUIRE(violations.size() == 2);
  CHECK(violations[0].bus == "c");
  CHECK(violations[0].side == BandViolation::Side::Low);
  CHECK(violations[0].pu == doctest::Approx(206.99 / 230.0));
  CHECK(violations[1].bus == "d");
  CHECK(violations[1].side == BandViolation::Side::High);

  BandSpec bad;
  bad.lo_pu = 1.2;
  CHECK_THROWS_AS(check_voltage_band(sol, bad), std::invalid_argument);
}

TEST_CASE("a 200 V reading sits at 0.8696 per unit") {
  VoltageSolution sol;
  sol.voltage_v = {{"x", 200.0}};
  const auto v = check_voltage_band(sol, BandSpec{});
  REQUIRE(v.size() == 1);
  CHECK(std::abs(v[0].pu - 0.8696) < 5e-5);
}

TEST_CASE("zero error maps to zero equivalent load") {
  const GridModel grid = build_ieee37();
  CHECK(equivalent_uniform_load(grid, "741", 0.0) == 0.0);
  CHECK(equivalent_single_load(grid, "741", 0.0) == 0.0);
  const auto report = propagate(grid, "741", 0.0);
  CHECK(report.equivalent_single_w == 0.0);
  REQUIRE(report.delta_v.size() == 37);
  for (const auto& kv : report.delta_v) CHECK(kv.second == 0.0);
  CHECK_THROWS_AS(equivalent_single_load(grid, "741", -0.1), std::invalid_argument);
}

TEST_CASE("equivalent single load follows the first-order P*R law") {
  const GridModel grid = build_ieee37();
  const double v_err = 0.41;
  for (const char* node : {"741", "703"}) {
    const double p = equivalent_single_load(grid, node, v_err);
    const double r = path_impedance(grid, node).real();
    CHECK(p * r == doctest::Approx(v_err * 230.0).epsilon(0.10));
  }
  // The deeper bus needs less power for the same voltage error.
  CHECK(equivalent_single_load(grid, "703", v_err) >
        equivalent_single_load(grid, "741", v_err));
}

TEST_CASE("propagation deltas grow toward the fitted node") {
  const GridModel grid = build_ieee37();
  const auto report = propagate(grid, "741", 0.41);
  REQUIRE(report.delta_v.size() == 37);
  CHECK(report.delta_v.at("799") == 0.0);  // slack cannot move
  CHECK(report.delta_v.at("741") == doctest::Approx(0.41).epsilon(0.03));
  CHECK(report.delta_v.at("703") > 0.0);
  CHECK(report.delta_v.at("703") < report.delta_v.at("741"));

  const std::string csv = deltas_to_csv(report);
  CHECK(csv.rfind("node,delta_v\n", 0) == 0);
  CHECK(csv.find("741,") != std::string::npos);
}
