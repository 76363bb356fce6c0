#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridmon/measurement.hpp"
#include "gridmon/powerflow.hpp"

namespace gridmon {

/// Sensor model of a pulse-width-metering smart plug. The metering IC emits
/// a pulse whose width in whole microseconds encodes the voltage, so the
/// device can only report multiples of pulse_step_v, rounded to one decimal.
struct PlugProfile {
  std::string device_id;
  double offset_v = 0.0;       // constant per-device bias
  double pulse_step_v = 0.28;  // volts per microsecond of pulse width
  double noise_sigma_v = 0.15; // Gaussian, applied before quantization
  double cadence_s = 10.0;
  double phase_s = 0.0;        // tick offset relative to scenario start
  std::uint64_t rng_seed = 0;
};

/// Calibrated power analyzer: reports the solver voltage exactly unless a
/// noise level is configured, one reading per minute by default.
struct ReferenceMeterProfile {
  std::string device_id;
  double cadence_s = 60.0;
  double phase_s = 0.0;
  double noise_sigma_v = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Integer-microsecond pulse-width quantization followed by the firmware's
/// one-decimal rounding (half away from zero).
double quantize(double v_true, double pulse_step_v);

/// One plug reading: bias, then noise, then quantization. Deterministic in
/// (profile.rng_seed, t); the same inputs always produce the same sample.
Measurement sample_plug(const PlugProfile& profile, double v_true, std::int64_t t_ns);

Measurement sample_reference(const ReferenceMeterProfile& profile, double v_true,
                             std::int64_t t_ns);

/// Seed a device draws when the scenario does not pin one explicitly.
/// Stable across runs: distinct ids get independent streams from one seed.
std::uint64_t derive_device_seed(std::uint64_t scenario_seed,
                                 const std::string& device_id);

/// Piecewise-constant load schedule: each step's LoadSet is active from
/// time_s (relative to scenario start) until the next step.
struct LoadTimeline {
  struct Step {
    double time_s = 0.0;
    LoadSet loads;
  };
  std::vector<Step> steps;  // ascending time_s; empty means zero load throughout

  const LoadSet& at(double time_s) const;

  /// CSV rows `time_s,bus,watts`; rows sharing a time_s form one step.
  static LoadTimeline from_csv(const std::string& text);
  std::string to_csv() const;
};

/// Mean-reverting random walk around base_w, one step per step_s, clamped
/// at 0 W. Drives desk-scale load fluctuation without a recorded profile.
struct RandomWalkSpec {
  double step_s = 600.0;
  double base_w = 300.0;
  double walk_w = 40.0;  // per-step Gaussian increment
  double revert = 0.95;  // pull toward base_w; keeps the walk bounded
  std::vector<std::string> buses;  // empty = every non-slack bus
};

LoadTimeline synth_random_walk(const GridModel& grid, std::uint64_t seed,
                               double duration_s, const RandomWalkSpec& spec = {});

struct Placement {
  std::string bus;
  PlugProfile plug;
};

struct ReferencePlacement {
  std::string bus;
  ReferenceMeterProfile meter;
};

struct Scenario {
  GridConfig grid;
  std::int64_t start_ns = 1672531200LL * 1000000000LL;  // 2023-01-01T00:00:00Z
  double duration_s = 3600.0;
  std::uint64_t seed = 0;
  std::vector<Placement> plugs;
  std::vector<ReferencePlacement> references;
  LoadTimeline timeline;

  /// JSON document; see README for the schema. `base_dir` resolves relative
  /// paths ("grid", "loads" file references).
  static Scenario from_json(const std::string& text, const std::string& base_dir = ".");
  static Scenario load(const std::string& path);
};

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ticks every device at its cadence over (start, start + duration], solves
/// the grid per timeline segment, and emits samples in timestamp order
/// (ties broken by device id). Throws ScenarioError naming the timestamp if
/// a segment's loading is infeasible.
std::vector<Measurement> run_scenario(const Scenario& scenario);

/// `timestamp,device,voltage` with nanosecond timestamps.
std::string measurements_to_csv(const std::vector<Measurement>& measurements);
std::vector<Measurement> measurements_from_csv(const std::string& text);

}  // namespace gridmon
