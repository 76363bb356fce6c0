#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gridmon/powerflow.hpp"

namespace gridmon {

struct FitConfig {
  double tol_v = 0.01;        // stop when |V(at) - measured| <= tol_v
  double load_lo_w = 0.0;     // per-node load bounds
  double load_hi_w = 50000.0;
  int max_outer_iter = 100;
  SolveOptions solve;
};

enum class FitMode { Uniform, Single };

struct EstimationResult {
  FitMode mode = FitMode::Uniform;
  std::string node;
  double measured_v = 0.0;
  double fitted_load_w = 0.0;  // per-node value (uniform) or single-node value
  VoltageSolution solution;    // final solve at fitted_load_w
  int outer_iterations = 0;    // power-flow solves performed by the search
  double residual_v = 0.0;     // |V(node) - measured_v| at fitted_load_w
  bool converged = false;      // residual_v <= tol_v
  bool measurement_above_slack = false;

  /// |V(node) - measured| of each search iterate that improved on all
  /// previous ones; strictly decreasing by construction of the search.
  std::vector<double> accepted_residuals;
};

/// The measured voltage cannot be reached inside [load_lo_w, load_hi_w];
/// `bound` names which bound binds ("load_lo_w" or "load_hi_w").
struct BoundExhaustedError : std::runtime_error {
  BoundExhaustedError(const std::string& bound, double measured_v, double reachable_v)
      : std::runtime_error("measured voltage " + std::to_string(measured_v) +
                           " V unreachable: " + bound + " binds (closest " +
                           std::to_string(reachable_v) + " V)"),
        bound(bound) {}
  std::string bound;
};

/// Finds the load L, applied at every non-slack bus, whose power-flow
/// solution reproduces the measured voltage at bus `at` within tol_v.
/// V(at) is strictly decreasing in L, so the search bisects on L.
EstimationResult fit_uniform_loads(const GridModel& grid, double measured_v,
                                   const std::string& at, const FitConfig& cfg = {});

/// As above, but the load is placed at bus `at` alone.
EstimationResult fit_single_load(const GridModel& grid, double measured_v,
                                 const std::string& at, const FitConfig& cfg = {});

}  // namespace gridmon
