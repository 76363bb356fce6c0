#include "gridmon/estimator.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>

namespace gridmon {

namespace {

LoadSet make_loads(const GridModel& grid, FitMode mode, const std::string& at,
                   double load_w) {
  LoadSet loads;
  if (mode == FitMode::Single) {
    loads.set(at, load_w);
  } else {
    const std::string slack = grid.slack_bus();
    for (const auto& bus : grid.buses)
      if (bus.id != slack) loads.set(bus.id, load_w);
  }
  return loads;
}

EstimationResult fit(const GridModel& grid, double measured_v,
                     const std::string& at, const FitConfig& cfg, FitMode mode) {
  if (!grid.has_bus(at)) throw UnknownBusError(at);
  if (at == grid.slack_bus())
    throw std::invalid_argument("cannot fit at the slack bus");
  if (cfg.tol_v <= 0) throw std::invalid_argument("tol_v must be > 0");
  if (cfg.load_lo_w > cfg.load_hi_w)
    throw std::invalid_argument("load_lo_w must be <= load_hi_w");

  EstimationResult res;
  res.mode = mode;
  res.node = at;
  res.measured_v = measured_v;

  // Residual of a candidate load; positive means the simulated voltage is
  // still above the measurement (more load needed). A probe that collapses
  // the feeder below the solver floor counts as infinitely far below the
  // measurement: loading is monotone, so the candidate is simply too heavy.
  auto evaluate = [&](double load_w) -> std::pair<double, std::optional<VoltageSolution>> {
    ++res.outer_iterations;
    try {
      VoltageSolution sol = solve(grid, make_loads(grid, mode, at, load_w), cfg.solve);
      const double r = sol.at(at) - measured_v;
      return {r, std::move(sol)};
    } catch (const InfeasibleLoadError&) {
      return {-std::numeric_limits<double>::infinity(), std::nullopt};
    }
  };

  auto accept = [&](double load_w, double signed_residual,
                    std::optional<VoltageSolution> sol) {
    if (!sol) return;
    const double r = std::abs(signed_residual);
    if (res.accepted_residuals.empty() || r < res.accepted_residuals.back()) {
      res.accepted_residuals.push_back(r);
      res.fitted_load_w = load_w;
      res.residual_v = r;
      res.solution = std::move(*sol);
    }
  };

  // A plug reading above the transformer voltage cannot be explained by any
  // non-negative load; clamp to the most optimistic one instead of fitting
  // generation.
  if (measured_v > grid.slack_voltage_v) {
    auto [r, sol] = evaluate(std::max(0.0, cfg.load_lo_w));
    if (!sol) throw BoundExhaustedError("load_lo_w", measured_v, measured_v + r);
    accept(std::max(0.0, cfg.load_lo_w), r, std::move(sol));
    res.measurement_above_slack = true;
    res.converged = res.residual_v <= cfg.tol_v;
    return res;
  }

  double lo = cfg.load_lo_w;
  double hi = cfg.load_hi_w;

  auto [r_lo, sol_lo] = evaluate(lo);
  if (!sol_lo) throw BoundExhaustedError("load_lo_w", measured_v, measured_v + r_lo);
  accept(lo, r_lo, std::move(sol_lo));
  if (std::abs(r_lo) <= cfg.tol_v) {
    res.converged = true;
    return res;
  }
  if (r_lo < 0)  // even the lightest permitted loading undershoots the reading
    throw BoundExhaustedError("load_lo_w", measured_v, measured_v + r_lo);

  auto [r_hi, sol_hi] = evaluate(hi);
  accept(hi, r_hi, std::move(sol_hi));
  if (std::abs(r_hi) <= cfg.tol_v) {
    res.converged = true;
    return res;
  }
  if (r_hi > 0)  // heaviest permitted loading still reads too high
    throw BoundExhaustedError("load_hi_w", measured_v, measured_v + r_hi);

  while (res.outer_iterations < cfg.max_outer_iter) {
    const double mid = 0.5 * (lo + hi);
    auto [r, sol] = evaluate(mid);
    accept(mid, r, std::move(sol));
    if (std::abs(r) <= cfg.tol_v) {
      res.converged = true;
      return res;
    }
    (r > 0 ? lo : hi) = mid;
  }
  res.converged = res.residual_v <= cfg.tol_v;
  return res;
}

}  // namespace

EstimationResult fit_uniform_loads(const GridModel& grid, double measured_v,
                                   const std::string& at, const FitConfig& cfg) {
  return fit(grid, measured_v, at, cfg, FitMode::Uniform);
}

EstimationResult fit_single_load(const GridModel& grid, double measured_v,
                                 const std::string& at, const FitConfig& cfg) {
  return fit(grid, measured_v, at, cfg, FitMode::Single);
}

}  // namespace gridmon
