#include "gridmon/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gridmon {

VoltageSolution solve(const GridModel& grid, const LoadSet& loads,
                      const SolveOptions& opts) {
  if (opts.eps_v <= 0) throw std::invalid_argument("eps_v must be > 0");
  const FeederIndex idx = FeederIndex::build(grid);
  const int n = static_cast<int>(idx.bus_ids.size());

  std::vector<double> power_w(n, 0.0);
  for (const auto& [bus, watts] : loads.entries()) {
    auto it = idx.index_of.find(bus);
    if (it == idx.index_of.end()) throw UnknownBusError(bus);
    if (it->second == 0 && watts != 0.0)
      throw std::invalid_argument("load on slack bus " + bus);
    if (!std::isfinite(watts))
      throw std::invalid_argument("non-finite load on bus " + bus);
    power_w[it->second] = watts;
  }

  const std::complex<double> v_slack{grid.slack_voltage_v, 0.0};
  const double v_floor = opts.v_floor_pu * grid.slack_voltage_v;
  std::vector<std::complex<double>> v(n, v_slack);
  std::vector<std::complex<double>> i_branch(n);  // current on line to parent

  VoltageSolution sol;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    // Backward sweep: injection currents, then accumulate leaf to root.
    for (int b = 0; b < n; ++b)
      i_branch[b] = power_w[b] != 0.0 ? power_w[b] / std::conj(v[b])
                                      : std::complex<double>{0.0, 0.0};
    for (int b = n - 1; b >= 1; --b) i_branch[idx.parent[b]] += i_branch[b];

    // Forward sweep: propagate voltage drops root to leaf.
    double max_change = 0.0;
    for (int b = 1; b < n; ++b) {
      const std::complex<double> v_new = v[idx.parent[b]] - idx.z_up[b] * i_branch[b];
      max_change = std::max(max_change, std::abs(v_new - v[b]));
      v[b] = v_new;
      if (!(std::abs(v_new) >= v_floor))  // also catches NaN
        throw InfeasibleLoadError(idx.bus_ids[b], std::abs(v_new), v_floor);
    }

    sol.iterations = iter;
    if (max_change < opts.eps_v) {
      sol.converged = true;
      break;
    }
  }

  for (int b = 0; b < n; ++b) {
    sol.phasor_v[idx.bus_ids[b]] = v[b];
    sol.voltage_v[idx.bus_ids[b]] = b == 0 ? grid.slack_voltage_v : std::abs(v[b]);
  }
  double loss = 0.0;
  for (int b = 1; b < n; ++b)
    loss += std::norm(i_branch[b]) * idx.r_up[b];
  sol.total_loss_w = loss;
  return sol;
}

double power_balance(const GridModel& grid, const LoadSet& loads,
                     const VoltageSolution& solution) {
  const FeederIndex idx = FeederIndex::build(grid);
  const int n = static_cast<int>(idx.bus_ids.size());

  // Branch currents recovered from the solution phasors alone.
  std::vector<std::complex<double>> i_branch(n);
  double loss_w = 0.0;
  double injection_w = 0.0;
  for (int b = 1; b < n; ++b) {
    const std::complex<double> vp = solution.phasor_v.at(idx.bus_ids[idx.parent[b]]);
    const std::complex<double> vc = solution.phasor_v.at(idx.bus_ids[b]);
    i_branch[b] = (vp - vc) / idx.z_up[b];
    loss_w += std::norm(i_branch[b]) * idx.r_up[b];
    if (idx.parent[b] == 0)
      injection_w += (solution.phasor_v.at(idx.bus_ids[0]) * std::conj(i_branch[b])).real();
  }
  return std::abs(injection_w - loads.total_w() - loss_w);
}

}  // namespace gridmon
