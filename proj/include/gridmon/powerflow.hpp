#pragma once

#include <complex>
#include <map>
#include <stdexcept>
#include <string>

#include "gridmon/netmodel.hpp"

namespace gridmon {

/// Active power draw per bus label, watts. Buses not listed draw 0 W.
/// Loads are resistive (power factor 1); the slack bus carries no load.
class LoadSet {
 public:
  LoadSet() = default;
  explicit LoadSet(std::map<std::string, double> loads) : loads_(std::move(loads)) {}

  void set(const std::string& bus, double watts) { loads_[bus] = watts; }
  double at(const std::string& bus) const {
    auto it = loads_.find(bus);
    return it == loads_.end() ? 0.0 : it->second;
  }
  const std::map<std::string, double>& entries() const { return loads_; }
  double total_w() const {
    double t = 0;
    for (const auto& kv : loads_) t += kv.second;
    return t;
  }

 private:
  std::map<std::string, double> loads_;
};

struct VoltageSolution {
  std::map<std::string, double> voltage_v;  // bus -> |V| RMS
  std::map<std::string, std::complex<double>> phasor_v;  // slack angle = 0
  int iterations = 0;
  bool converged = false;
  double total_loss_w = 0.0;

  double at(const std::string& bus) const {
    auto it = voltage_v.find(bus);
    if (it == voltage_v.end()) throw UnknownBusError(bus);
    return it->second;
  }
};

struct SolveOptions {
  double eps_v = 1e-6;     // max voltage change per sweep to declare convergence
  int max_iter = 100;      // hitting this yields converged=false, not an error
  double v_floor_pu = 0.5; // below this the loading is declared infeasible
};

/// A bus magnitude dropped under the feasibility floor: the load set has no
/// physical steady state on this feeder.
struct InfeasibleLoadError : std::runtime_error {
  InfeasibleLoadError(const std::string& bus, double v, double floor)
      : std::runtime_error("infeasible load: |V(" + bus + ")| = " +
                           std::to_string(v) + " V under floor " +
                           std::to_string(floor) + " V"),
        bus(bus) {}
  std::string bus;
};

/// Backward/forward-sweep power flow on a radial feeder. Branch currents are
/// aggregated leaf-to-root from I = conj(S/V) per load, then voltages
/// propagated root-to-leaf as V_child = V_parent - Z * I_branch, iterated to
/// a fixed point. Pure function of its inputs.
VoltageSolution solve(const GridModel& grid, const LoadSet& loads,
                      const SolveOptions& opts = {});

/// |slack injection - sum(loads) - sum(line losses)| in watts, recomputed
/// from the solution phasors. Conservation check used by tests.
double power_balance(const GridModel& grid, const LoadSet& loads,
                     const VoltageSolution& solution);

}  // namespace gridmon
