#pragma once

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmon {

/// Per-length conductor constants of a cable type.
struct LineParams {
  double r_ohm_per_km = 0.208;  // NAYY 4x150 SE
  double x_ohm_per_km = 0.080;
  double max_i_a = 270.0;  // ampacity, informational
};

enum class BusKind { Slack, Load };

struct Bus {
  std::string id;
  BusKind kind = BusKind::Load;
};

struct Line {
  std::string from_bus;
  std::string to_bus;
  double length_m = 0.0;
  LineParams params;

  /// Total series impedance of the segment in ohms.
  std::complex<double> impedance() const {
    const double km = length_m / 1000.0;
    return {params.r_ohm_per_km * km, params.x_ohm_per_km * km};
  }
};

/// Radial low-voltage feeder: a tree of buses rooted at the slack
/// (transformer) bus whose voltage is held constant.
struct GridModel {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  double slack_voltage_v = 230.0;  // per-phase RMS

  bool has_bus(const std::string& id) const;
  const Bus* find_bus(const std::string& id) const;
  std::string slack_bus() const;  // throws if none
};

struct GridViolation {
  std::string invariant;  // e.g. "radiality", "slack-uniqueness"
  std::string detail;
};

struct UnknownBusError : std::runtime_error {
  explicit UnknownBusError(const std::string& id)
      : std::runtime_error("unknown bus id: " + id) {}
};

/// Rooted-tree index over a validated GridModel. Bus 0 is the slack; the
/// order is breadth-first with children visited in id order, so downstream
/// buses always follow their parent.
struct FeederIndex {
  std::vector<std::string> bus_ids;        // BFS order, slack first
  std::map<std::string, int> index_of;     // id -> position in bus_ids
  std::vector<int> parent;                 // parent[i], -1 for slack
  std::vector<std::complex<double>> z_up;  // impedance of line to parent
  std::vector<double> r_up;                // Re(z_up), cached
  std::vector<std::vector<int>> children;

  static FeederIndex build(const GridModel& grid);  // throws on non-tree input

  /// Buses of the subtree rooted at `bus` (inclusive).
  std::vector<int> subtree(int bus) const;
};

/// The IEEE 37-node test feeder with every segment set to the same length
/// and cable type. The canonical adjacency is embedded as a constant table;
/// the substation node 799 is the slack, and the regulator (799-701) and
/// XFM-1 (709-775) segments are modeled as ordinary lines.
GridModel build_ieee37(double spacing_m = 40.0, const LineParams& params = {},
                       double slack_voltage_v = 230.0);

/// Series impedance summed along the unique slack->bus path. Slack -> 0.
std::complex<double> path_impedance(const GridModel& grid,
                                    const std::string& bus);

/// Empty iff all GridModel invariants hold. Violations are returned, never
/// thrown.
std::vector<GridViolation> validate(const GridModel& grid);

/// Key-value overrides for the reference configuration:
///   spacing_m, r_ohm_per_km, x_ohm_per_km, max_i_a, slack_voltage_v
struct GridConfig {
  double spacing_m = 40.0;
  LineParams params;
  double slack_voltage_v = 230.0;

  GridModel build() const { return build_ieee37(spacing_m, params, slack_voltage_v); }
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys are errors.
GridConfig parse_grid_config(const std::string& text);
GridConfig load_grid_config(const std::string& path);

}  // namespace gridmon
