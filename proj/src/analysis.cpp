#include "gridmon/analysis.hpp"

#include <stdexcept>

#include "gridmon/util.hpp"

namespace gridmon::analysis {

std::vector<BandViolation> check_voltage_band(const VoltageSolution& solution,
                                              const BandSpec& band) {
  if (!(band.nominal_v > 0) || !(0 < band.lo_pu && band.lo_pu < band.hi_pu))
    throw std::invalid_argument("band requires nominal > 0 and 0 < lo_pu < hi_pu");
  std::vector<BandViolation> out;
  for (const auto& [bus, volts] : solution.voltage_v) {
    const double pu = volts / band.nominal_v;
    if (pu < band.lo_pu)
      out.push_back({bus, pu, BandViolation::Side::Low});
    else if (pu > band.hi_pu)
      out.push_back({bus, pu, BandViolation::Side::High});
  }
  return out;
}

namespace {

void check_v_err(double v_err_v) {
  if (v_err_v < 0) throw std::invalid_argument("v_err must be >= 0");
}

}  // namespace

double equivalent_uniform_load(const GridModel& grid, const std::string& node,
                               double v_err_v, const FitConfig& cfg) {
  check_v_err(v_err_v);
  if (v_err_v == 0) return 0.0;
  return fit_uniform_loads(grid, grid.slack_voltage_v - v_err_v, node, cfg).fitted_load_w;
}

double equivalent_single_load(const GridModel& grid, const std::string& node,
                              double v_err_v, const FitConfig& cfg) {
  check_v_err(v_err_v);
  if (v_err_v == 0) return 0.0;
  return fit_single_load(grid, grid.slack_voltage_v - v_err_v, node, cfg).fitted_load_w;
}

ErrorPropagationReport propagate(const GridModel& grid, const std::string& node,
                                 double v_err_v, const FitConfig& cfg) {
  check_v_err(v_err_v);
  ErrorPropagationReport report;
  report.node = node;
  report.v_err_v = v_err_v;
  if (v_err_v == 0) {
    if (!grid.has_bus(node)) throw UnknownBusError(node);
    for (const auto& bus : grid.buses) report.delta_v[bus.id] = 0.0;
    return report;
  }
  const double measured = grid.slack_voltage_v - v_err_v;
  report.equivalent_uniform_w = fit_uniform_loads(grid, measured, node, cfg).fitted_load_w;
  const EstimationResult single = fit_single_load(grid, measured, node, cfg);
  report.equivalent_single_w = single.fitted_load_w;
  // Zero load leaves every bus at the slack voltage, so the zero-load
  // baseline is the slack voltage itself.
  for (const auto& [bus, volts] : single.solution.voltage_v)
    report.delta_v[bus] = grid.slack_voltage_v - volts;
  return report;
}

std::string deltas_to_csv(const ErrorPropagationReport& report) {
  std::string out = "node,delta_v\n";
  for (const auto& [bus, delta] : report.delta_v)
    out += bus + "," + format_double(delta) + "\n";
  return out;
}

}  // namespace gridmon::analysis
