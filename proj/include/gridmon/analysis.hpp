#pragma once

#include <map>
#include <string>
#include <vector>

#include "gridmon/estimator.hpp"
#include "gridmon/netmodel.hpp"
#include "gridmon/powerflow.hpp"

namespace gridmon::analysis {

/// Compliance band in per-unit of nominal; boundaries are inclusive, so a
/// node sitting exactly on lo_pu or hi_pu complies.
struct BandSpec {
  double nominal_v = 230.0;
  double lo_pu = 0.9;
  double hi_pu = 1.1;
};

struct BandViolation {
  std::string bus;
  double pu = 0.0;
  enum class Side { Low, High };
  Side side = Side::Low;
};

std::vector<BandViolation> check_voltage_band(const VoltageSolution& solution,
                                              const BandSpec& band);

/// Translates a voltage measurement error at one node into the loads that
/// would cause the same drop: a load added at every non-slack bus, and a
/// load at the measured node alone. delta_v holds, per bus, how far the
/// fitted single-load solution sits below the zero-load voltage.
struct ErrorPropagationReport {
  std::string node;
  double v_err_v = 0.0;
  double equivalent_uniform_w = 0.0;  // watts added per non-slack bus
  double equivalent_single_w = 0.0;   // watts at the measured node
  std::map<std::string, double> delta_v;
};

double equivalent_uniform_load(const GridModel& grid, const std::string& node,
                               double v_err_v, const FitConfig& cfg = {});
double equivalent_single_load(const GridModel& grid, const std::string& node,
                              double v_err_v, const FitConfig& cfg = {});

ErrorPropagationReport propagate(const GridModel& grid, const std::string& node,
                                 double v_err_v, const FitConfig& cfg = {});

/// `node,delta_v` rows, buses in id order.
std::string deltas_to_csv(const ErrorPropagationReport& report);

}  // namespace gridmon::analysis
