#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "gridmon/analysis.hpp"
#include "gridmon/calib.hpp"
#include "gridmon/estimator.hpp"
#include "gridmon/netmodel.hpp"
#include "gridmon/plugsim.hpp"
#include "gridmon/powerflow.hpp"
#include "gridmon/telemetry/client.hpp"
#include "gridmon/telemetry/message.hpp"
#include "gridmon/telemetry/registry.hpp"
#include "gridmon/telemetry/service.hpp"
#include "gridmon/telemetry/store.hpp"
#include "gridmon/util.hpp"
#include "json.hpp"

namespace {

using namespace gridmon;

// Built-in scenario used when --scenario is "default" or omitted: two plugs
// with distinct offsets paired with exact reference meters on the same
// buses, one simulated day of fluctuating feeder load.
const char* kDefaultScenarioJson = R"json({
  "seed": 42,
  "start": "2023-01-01T00:00:00Z",
  "duration_s": 86400,
  "grid": {
    "spacing_m": 40,
    "r_ohm_per_km": 0.208,
    "x_ohm_per_km": 0.08,
    "max_i_a": 270,
    "slack_voltage_v": 230
  },
  "plugs": [
    {"device_id": "plug-741", "bus": "741", "offset_v": 3.65, "noise_sigma_v": 0.15,
     "pulse_step_v": 0.28, "cadence_s": 10, "phase_s": 3},
    {"device_id": "plug-703", "bus": "703", "offset_v": -1.25, "noise_sigma_v": 0.12,
     "pulse_step_v": 0.28, "cadence_s": 10, "phase_s": 3}
  ],
  "references": [
    {"device_id": "ref-741", "bus": "741", "cadence_s": 60},
    {"device_id": "ref-703", "bus": "703", "cadence_s": 60}
  ],
  "loads": {"random_walk": {"step_s": 600, "base_w": 300, "walk_w": 40, "revert": 0.95}}
})json";

// Loads reported for a hardware deployment on a comparable feeder, printed
// next to this toolkit's fitted equivalents so the two can be compared.
struct ComparisonLoads {
  double uniform_w;
  double single_w;
};
const std::map<std::string, ComparisonLoads> kComparisonLoads = {
    {"741", {1100.0, 26000.0}},
    {"703", {1200.0, 41000.0}},
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("short write to " + path);
}

std::string default_store_dir() {
  const char* env = std::getenv("GRIDMON_STORE");
  return env && *env ? env : "./store";
}

std::int64_t parse_time_arg(const std::string& text) {
  try {
    std::size_t used = 0;
    const long long ns = std::stoll(text, &used);
    if (used == text.size()) return ns;
  } catch (const std::exception&) {
  }
  return parse_iso8601_utc_ns(text);
}

std::pair<std::string, std::uint16_t> parse_host_port(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size())
    throw std::runtime_error("expected host:port, got '" + text + "'");
  const std::string host = text.substr(0, colon);
  const int port = std::stoi(text.substr(colon + 1));
  if (port < 0 || port > 65535) throw std::runtime_error("port out of range in '" + text + "'");
  return {host, static_cast<std::uint16_t>(port)};
}

// Overrides are spliced into the document before parsing: derived device
// seeds and generated load timelines depend on them, so patching the parsed
// Scenario afterwards would leave those stale.
Scenario load_scenario_arg(const std::string& src, double duration_override = 0,
                           const std::int64_t* seed_override = nullptr) {
  std::string text;
  std::string base_dir = ".";
  if (src.empty() || src == "default") {
    text = kDefaultScenarioJson;
  } else {
    text = read_file(src);
    base_dir = std::filesystem::path(src).parent_path().string();
    if (base_dir.empty()) base_dir = ".";
  }
  if (duration_override > 0 || seed_override) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (duration_override > 0) doc["duration_s"] = duration_override;
    if (seed_override) doc["seed"] = *seed_override;
    text = doc.dump();
  }
  return Scenario::from_json(text, base_dir);
}

GridModel load_grid_arg(const std::string& config_path) {
  if (config_path.empty()) return GridConfig{}.build();
  return load_grid_config(config_path).build();
}

calib::Series load_series_source(const std::string& src) {
  if (src.rfind("meas:", 0) == 0) {
    const std::string rest = src.substr(5);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size())
      throw std::runtime_error("measurement source must be meas:<csv>:<device>");
    const auto measurements = measurements_from_csv(read_file(rest.substr(0, colon)));
    return calib::Series::from_measurements(measurements, rest.substr(colon + 1));
  }
  if (src.rfind("store:", 0) == 0) {
    const std::string rest = src.substr(6);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size())
      throw std::runtime_error("store source must be store:<dir>:<device>");
    const std::string dir = rest.substr(0, colon);
    const std::string device = rest.substr(colon + 1);
    telemetry::TimeSeriesStore store(dir, telemetry::TimeSeriesStore::Mode::ReadOnly);
    telemetry::TagFilter filter;
    filter.device = device;
    calib::Series s;
    for (const auto& p :
         store.query(filter, std::numeric_limits<std::int64_t>::min(),
                     std::numeric_limits<std::int64_t>::max()))
      s.push_back(p.timestamp_ns, p.value_v);
    return s;
  }
  return calib::Series::from_csv(read_file(src));
}

LoadSet load_loadset_csv(const std::string& path) {
  LoadSet loads;
  std::istringstream in(read_file(path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("bus", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": expected bus,watts");
    try {
      loads.set(line.substr(0, comma), std::stod(line.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw std::runtime_error(path + " line " + std::to_string(lineno) +
                               ": bad watts value");
    }
  }
  return loads;
}

std::atomic<bool> g_shutdown{false};
void handle_signal(int) { g_shutdown = true; }

// ---- subcommand bodies ----------------------------------------------------

int cmd_grid_show(const std::string& config_path) {
  const GridConfig cfg =
      config_path.empty() ? GridConfig{} : load_grid_config(config_path);
  const GridModel grid = cfg.build();
  std::cout << "feeder: " << grid.buses.size() << " buses, " << grid.lines.size()
            << " lines, slack " << grid.slack_bus() << " at "
            << format_double(grid.slack_voltage_v) << " V\n";
  std::cout << "lines: spacing " << format_double(cfg.spacing_m) << " m, r "
            << format_double(cfg.params.r_ohm_per_km) << " ohm/km, x "
            << format_double(cfg.params.x_ohm_per_km) << " ohm/km, ampacity "
            << format_double(cfg.params.max_i_a) << " A\n";
  std::cout << "from,to,length_m\n";
  for (const auto& line : grid.lines)
    std::cout << line.from_bus << "," << line.to_bus << ","
              << format_double(line.length_m) << "\n";
  return 0;
}

int cmd_grid_validate(const std::string& config_path) {
  const GridModel grid = load_grid_arg(config_path);
  const auto violations = validate(grid);
  if (violations.empty()) {
    std::cout << "ok: " << grid.buses.size() << " buses, " << grid.lines.size()
              << " lines\n";
    return 0;
  }
  for (const auto& v : violations)
    std::cerr << "violation: " << v.invariant << ": " << v.detail << "\n";
  return 1;
}

int cmd_simulate(const std::string& scenario_src, double duration_override,
                 std::int64_t seed_override, bool seed_set, const std::string& out_path,
                 const std::string& publish_addr) {
  const Scenario sc = load_scenario_arg(scenario_src, duration_override,
                                        seed_set ? &seed_override : nullptr);
  const auto measurements = run_scenario(sc);

  if (!publish_addr.empty()) {
    const auto [host, port] = parse_host_port(publish_addr);
    telemetry::PublishClient client(host, port);
    std::vector<telemetry::WireMessage> frames;
    frames.reserve(measurements.size());
    for (const auto& m : measurements) frames.push_back(telemetry::encode_sensor_message(m));
    const auto responses = client.publish(frames);
    std::size_t ok = 0;
    for (const auto& r : responses) {
      const auto doc = nlohmann::json::parse(r, nullptr, false);
      if (!doc.is_discarded() && doc.value("ok", false)) ++ok;
    }
    std::cout << "published " << responses.size() << " measurements: " << ok
              << " accepted, " << (responses.size() - ok) << " rejected\n";
  }
  if (!out_path.empty()) {
    write_file(out_path, measurements_to_csv(measurements));
    std::cout << "wrote " << measurements.size() << " measurements to " << out_path << "\n";
  }
  if (publish_addr.empty() && out_path.empty())
    std::cout << measurements_to_csv(measurements);
  return 0;
}

int cmd_serve(const std::string& bind_addr, const std::string& registry_path,
              const std::string& store_dir) {
  const auto [host, port] = parse_host_port(bind_addr);
  telemetry::DeviceRegistry registry;
  if (!registry_path.empty()) registry = telemetry::DeviceRegistry::load(registry_path);
  telemetry::TimeSeriesStore store(store_dir);
  telemetry::IngestService service(host, port, std::move(registry), store);
  service.set_log([](const std::string& line) { std::cerr << "reject: " << line << "\n"; });
  service.start();
  std::cout << "listening on " << host << ":" << service.port() << ", store " << store_dir
            << " (" << store.size() << " points)\n"
            << std::flush;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_shutdown) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  const auto stats = service.stats();
  std::cout << "shutdown: accepted " << stats.accepted << ", rejected " << stats.rejected
            << ", deduplicated " << stats.deduplicated << "\n";
  return 0;
}

int cmd_query(const std::string& store_dir, const telemetry::TagFilter& filter,
              const std::string& from, const std::string& to, const std::string& format) {
  const std::int64_t start =
      from.empty() ? std::numeric_limits<std::int64_t>::min() : parse_time_arg(from);
  const std::int64_t end =
      to.empty() ? std::numeric_limits<std::int64_t>::max() : parse_time_arg(to);
  telemetry::TimeSeriesStore store(store_dir, telemetry::TimeSeriesStore::Mode::ReadOnly);
  const auto points = store.query(filter, start, end);
  if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : points) {
      nlohmann::json o;
      o["timestamp_ns"] = p.timestamp_ns;
      o["device"] = p.device;
      o["phase"] = p.phase;
      o["location"] = p.location;
      o["vendor"] = p.vendor;
      o["value"] = p.value_v;
      arr.push_back(std::move(o));
    }
    std::cout << arr.dump(2) << "\n";
  } else {
    std::cout << "timestamp,device,phase,location,vendor,value\n";
    for (const auto& p : points)
      std::cout << p.timestamp_ns << "," << p.device << "," << p.phase << "," << p.location
                << "," << p.vendor << "," << format_double(p.value_v) << "\n";
  }
  return 0;
}

struct MethodReport {
  calib::Method method;
  std::size_t n = 0;
  double offset_v = 0.0;
  double p95_v = 0.0;
  std::optional<calib::NormalityResult> normality;
};

std::vector<MethodReport> evaluate_methods(const calib::Series& plug,
                                           const calib::Series& ref) {
  std::vector<MethodReport> out;
  for (calib::Method method : calib::kAllMethods) {
    MethodReport r;
    r.method = method;
    const auto diffs = calib::paired_differences(plug, ref, method);
    r.n = diffs.size();
    if (!diffs.empty()) {
      r.offset_v = calib::estimate_offset(diffs);
      r.p95_v = calib::accuracy_p95(diffs);
      if (diffs.size() >= 8) {
        std::vector<double> values;
        values.reserve(diffs.size());
        for (const auto& d : diffs) values.push_back(d.diff_v);
        try {
          r.normality = calib::anderson_darling_normality(values);
        } catch (const calib::NormalityTestError&) {
          // zero-variance diffs carry no distribution to test
        }
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string diffs_to_csv(const std::vector<calib::DiffSample>& diffs) {
  std::string out = "timestamp,diff_v\n";
  for (const auto& d : diffs)
    out += std::to_string(d.timestamp_ns) + "," + format_double(d.diff_v) + "\n";
  return out;
}

std::string histogram_to_csv(const calib::Histogram& h) {
  std::string out = "bin_center,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out += format_double(h.center(i)) + "," + std::to_string(h.counts[i]) + "\n";
  return out;
}

int cmd_calibrate(const std::string& plug_src, const std::string& ref_src,
                  const std::string& method_name_arg, const std::string& report_dir) {
  const calib::Series plug = load_series_source(plug_src);
  const calib::Series ref = load_series_source(ref_src);

  std::vector<calib::Method> methods;
  if (method_name_arg == "all") {
    methods.assign(std::begin(calib::kAllMethods), std::end(calib::kAllMethods));
  } else {
    const auto m = calib::method_from_name(method_name_arg);
    if (!m)
      throw std::runtime_error("unknown method '" + method_name_arg +
                               "' (last, interp10s, trimmed1min, mean15min, all)");
    methods.push_back(*m);
  }

  if (!report_dir.empty()) std::filesystem::create_directories(report_dir);

  std::string summary = "method,n,offset_v,p95_v,a2_star,reject_normality\n";
  for (calib::Method method : methods) {
    const auto diffs = calib::paired_differences(plug, ref, method);
    std::string row = std::string(calib::method_name(method)) + "," +
                      std::to_string(diffs.size());
    if (!diffs.empty()) {
      row += "," + format_double(calib::estimate_offset(diffs));
      row += "," + format_double(calib::accuracy_p95(diffs));
      if (diffs.size() >= 8) {
        std::vector<double> values;
        for (const auto& d : diffs) values.push_back(d.diff_v);
        try {
          const auto ad = calib::anderson_darling_normality(values);
          row += "," + format_double(ad.a2_star) + "," + (ad.reject_at_5pct ? "true" : "false");
        } catch (const calib::NormalityTestError&) {
          row += ",,";
        }
      } else {
        row += ",,";
      }
    } else {
      row += ",,,,";
    }
    summary += row + "\n";
    if (!report_dir.empty()) {
      const std::string stem =
          (std::filesystem::path(report_dir) / calib::method_name(method)).string();
      write_file(stem + "_diffs.csv", diffs_to_csv(diffs));
      std::vector<double> values;
      for (const auto& d : diffs) values.push_back(d.diff_v);
      write_file(stem + "_diff_histogram.csv",
                 histogram_to_csv(calib::histogram(values, 0.1)));
    }
  }
  if (!report_dir.empty())
    write_file((std::filesystem::path(report_dir) / "summary.csv").string(), summary);
  std::cout << summary;
  return 0;
}

int cmd_estimate(const std::string& config_path, const std::string& mode,
                 const std::string& node, double voltage, const FitConfig& cfg,
                 const std::string& format) {
  const GridModel grid = load_grid_arg(config_path);
  const EstimationResult result = mode == "single"
                                      ? fit_single_load(grid, voltage, node, cfg)
                                      : fit_uniform_loads(grid, voltage, node, cfg);
  if (format == "csv") {
    std::cout << "mode,node,measured_v,fitted_load_w,residual_v,outer_iterations,"
                 "converged,measurement_above_slack\n";
    std::cout << mode << "," << node << "," << format_double(result.measured_v) << ","
              << format_double(result.fitted_load_w) << ","
              << format_double(result.residual_v) << "," << result.outer_iterations << ","
              << (result.converged ? "true" : "false") << ","
              << (result.measurement_above_slack ? "true" : "false") << "\n";
  } else {
    nlohmann::json o;
    o["mode"] = mode;
    o["node"] = node;
    o["measured_v"] = result.measured_v;
    o["fitted_load_w"] = result.fitted_load_w;
    o["residual_v"] = result.residual_v;
    o["outer_iterations"] = result.outer_iterations;
    o["converged"] = result.converged;
    o["measurement_above_slack"] = result.measurement_above_slack;
    std::cout << o.dump(2) << "\n";
  }
  return 0;
}

int cmd_analyze_propagate(const std::string& config_path, const std::string& node,
                          double v_err, const std::string& out_path) {
  const GridModel grid = load_grid_arg(config_path);
  const auto report = analysis::propagate(grid, node, v_err);
  std::cout << "node,v_err_v,equivalent_uniform_w,equivalent_single_w\n";
  std::cout << report.node << "," << format_double(report.v_err_v) << ","
            << format_double(report.equivalent_uniform_w) << ","
            << format_double(report.equivalent_single_w) << "\n";
  if (!out_path.empty()) write_file(out_path, analysis::deltas_to_csv(report));
  return 0;
}

int cmd_analyze_band(const std::string& config_path, const std::string& loads_path,
                     double nominal, double lo_pu, double hi_pu) {
  const GridModel grid = load_grid_arg(config_path);
  LoadSet loads;
  if (!loads_path.empty()) loads = load_loadset_csv(loads_path);
  const VoltageSolution solution = solve(grid, loads);
  analysis::BandSpec band;
  band.nominal_v = nominal;
  band.lo_pu = lo_pu;
  band.hi_pu = hi_pu;
  const auto violations = analysis::check_voltage_band(solution, band);
  std::cout << "node,pu,side\n";
  for (const auto& v : violations)
    std::cout << v.bus << "," << format_double(v.pu) << ","
              << (v.side == analysis::BandViolation::Side::Low ? "low" : "high") << "\n";
  std::cerr << violations.size() << " violation(s)\n";
  return 0;
}

int cmd_report(const std::string& scenario_src, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const Scenario sc = load_scenario_arg(scenario_src);
  const GridModel grid = sc.grid.build();
  const auto measurements = run_scenario(sc);
  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / "measurements.csv").string(),
             measurements_to_csv(measurements));

  struct PairedDevice {
    std::string device;
    std::string bus;
    calib::Series plug;
    calib::Series ref;
    std::vector<MethodReport> methods;
  };
  std::vector<PairedDevice> paired;
  for (const auto& placement : sc.plugs) {
    const ReferencePlacement* ref = nullptr;
    for (const auto& r : sc.references)
      if (r.bus == placement.bus) {
        ref = &r;
        break;
      }
    if (!ref) {
      std::cerr << "note: no reference meter on bus " << placement.bus << "; skipping "
                << placement.plug.device_id << "\n";
      continue;
    }
    PairedDevice p;
    p.device = placement.plug.device_id;
    p.bus = placement.bus;
    p.plug = calib::Series::from_measurements(measurements, placement.plug.device_id);
    p.ref = calib::Series::from_measurements(measurements, ref->meter.device_id);
    p.methods = evaluate_methods(p.plug, p.ref);
    paired.push_back(std::move(p));
  }
  if (paired.empty()) throw std::runtime_error("scenario has no plug/reference pair on a shared bus");

  // Accuracy table: rows per device, one p95 column per processing method.
  std::string accuracy = "device";
  for (calib::Method m : calib::kAllMethods) accuracy += std::string(",") + calib::method_name(m);
  accuracy += "\n";
  std::string offsets = "device,method,n,offset_v\n";
  std::string normality = "device,method,n,a2_star,reject_at_5pct\n";
  std::string correlation = "device,n,corr_time_of_day,corr_ref_voltage\n";
  for (const auto& p : paired) {
    accuracy += p.device;
    for (const auto& r : p.methods)
      accuracy += "," + (r.n ? format_double(r.p95_v) : std::string());
    accuracy += "\n";
    for (const auto& r : p.methods) {
      offsets += p.device + "," + calib::method_name(r.method) + "," + std::to_string(r.n) +
                 "," + (r.n ? format_double(r.offset_v) : std::string()) + "\n";
      normality += p.device + "," + calib::method_name(r.method) + "," + std::to_string(r.n);
      if (r.normality)
        normality += "," + format_double(r.normality->a2_star) + "," +
                     (r.normality->reject_at_5pct ? "true" : "false");
      else
        normality += ",,";
      normality += "\n";
    }

    const auto diffs = calib::paired_differences(p.plug, p.ref, calib::Method::Interp10s);
    std::map<std::int64_t, double> ref_at;
    for (const auto& s : p.ref.samples()) ref_at[s.timestamp_ns] = s.volts;
    std::vector<double> diff_values, time_of_day, ref_voltage;
    for (const auto& d : diffs) {
      diff_values.push_back(d.diff_v);
      time_of_day.push_back(
          static_cast<double>((d.timestamp_ns / 1000000000LL) % 86400LL));
      ref_voltage.push_back(ref_at.at(d.timestamp_ns));
    }
    if (diff_values.size() >= 2)
      correlation += p.device + "," + std::to_string(diff_values.size()) + "," +
                     format_double(calib::pearson_correlation(diff_values, time_of_day)) +
                     "," +
                     format_double(calib::pearson_correlation(diff_values, ref_voltage)) +
                     "\n";

    write_file((fs::path(out_dir) / ("diff_histogram_" + p.device + ".csv")).string(),
               histogram_to_csv(calib::histogram(diff_values, 0.1)));
    std::vector<double> plug_values;
    for (const auto& s : p.plug.samples()) plug_values.push_back(s.volts);
    write_file((fs::path(out_dir) / ("voltage_histogram_" + p.device + ".csv")).string(),
               histogram_to_csv(calib::histogram(plug_values, 0.1)));
  }
  write_file((fs::path(out_dir) / "accuracy.csv").string(), accuracy);
  write_file((fs::path(out_dir) / "offset.csv").string(), offsets);
  write_file((fs::path(out_dir) / "normality.csv").string(), normality);
  write_file((fs::path(out_dir) / "correlation.csv").string(), correlation);

  // Error propagation at each plug's bus, using that device's interp10s p95
  // as the voltage error fed into the equivalent-load fits.
  std::string propagation =
      "node,v_err_v,equivalent_uniform_w,equivalent_single_w,"
      "comparison_uniform_w,comparison_single_w\n";
  for (const auto& p : paired) {
    double v_err = 0.0;
    for (const auto& r : p.methods)
      if (r.method == calib::Method::Interp10s && r.n) v_err = r.p95_v;
    const auto report = analysis::propagate(grid, p.bus, v_err);
    propagation += p.bus + "," + format_double(report.v_err_v) + "," +
                   format_double(report.equivalent_uniform_w) + "," +
                   format_double(report.equivalent_single_w);
    const auto cmp = kComparisonLoads.find(p.bus);
    if (cmp != kComparisonLoads.end())
      propagation += "," + format_double(cmp->second.uniform_w) + "," +
                     format_double(cmp->second.single_w);
    else
      propagation += ",,";
    propagation += "\n";
    write_file((fs::path(out_dir) / ("propagation_deltas_" + p.bus + ".csv")).string(),
               analysis::deltas_to_csv(report));
  }
  write_file((fs::path(out_dir) / "propagation_summary.csv").string(), propagation);

  std::cout << "report written to " << out_dir << "\n" << accuracy;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smart-plug distribution feeder monitoring toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "inspect or validate the feeder model");
  grid_cmd->require_subcommand(1);
  std::string grid_config;
  grid_cmd->add_option("--config", grid_config, "grid config file (key=value lines)");
  auto* grid_show = grid_cmd->add_subcommand("show", "print buses, lines and parameters");
  grid_show->callback([&] { exit_code = cmd_grid_show(grid_config); });
  auto* grid_validate = grid_cmd->add_subcommand("validate", "check model invariants");
  grid_validate->callback([&] { exit_code = cmd_grid_validate(grid_config); });

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a scenario and emit measurements");
  std::string sim_scenario = "default", sim_out, sim_publish;
  double sim_duration = 0;
  std::int64_t sim_seed = 0;
  sim->add_option("--scenario", sim_scenario, "scenario JSON path or 'default'");
  sim->add_option("--duration", sim_duration, "override duration (seconds)");
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "override scenario seed");
  sim->add_option("--out", sim_out, "write measurement CSV here");
  sim->add_option("--publish", sim_publish, "publish to a running service (host:port)");
  sim->callback([&] {
    exit_code = cmd_simulate(sim_scenario, sim_duration, sim_seed,
                             sim_seed_opt->count() > 0, sim_out, sim_publish);
  });

  // serve
  auto* serve = app.add_subcommand("serve", "run the telemetry ingestion service");
  std::string serve_bind = "127.0.0.1:7071", serve_registry,
              serve_store = default_store_dir();
  serve->add_option("--bind", serve_bind, "listen address (host:port)");
  serve->add_option("--registry", serve_registry, "device registry JSON");
  serve->add_option("--store", serve_store, "store directory ($GRIDMON_STORE)");
  serve->callback([&] { exit_code = cmd_serve(serve_bind, serve_registry, serve_store); });

  // query
  auto* query = app.add_subcommand("query", "read points back from a store");
  std::string q_store = default_store_dir(), q_device, q_phase, q_location, q_vendor,
              q_from, q_to, q_format = "csv";
  query->add_option("--store", q_store, "store directory ($GRIDMON_STORE)");
  query->add_option("--device", q_device, "filter by device id");
  query->add_option("--phase", q_phase, "filter by phase tag");
  query->add_option("--location", q_location, "filter by location tag");
  query->add_option("--vendor", q_vendor, "filter by vendor tag");
  query->add_option("--from", q_from, "range start (ISO-8601 or ns)");
  query->add_option("--to", q_to, "range end, exclusive (ISO-8601 or ns)");
  query->add_option("--format", q_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  query->callback([&] {
    telemetry::TagFilter filter;
    if (!q_device.empty()) filter.device = q_device;
    if (!q_phase.empty()) filter.phase = q_phase;
    if (!q_location.empty()) filter.location = q_location;
    if (!q_vendor.empty()) filter.vendor = q_vendor;
    exit_code = cmd_query(q_store, filter, q_from, q_to, q_format);
  });

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "compare a plug series against a reference");
  std::string cal_plug, cal_ref, cal_method = "all", cal_report;
  cal->add_option("--plug", cal_plug,
                  "series CSV, meas:<csv>:<device>, or store:<dir>:<device>")
      ->required();
  cal->add_option("--ref", cal_ref,
                  "series CSV, meas:<csv>:<device>, or store:<dir>:<device>")
      ->required();
  cal->add_option("--method", cal_method, "last|interp10s|trimmed1min|mean15min|all");
  cal->add_option("--report", cal_report, "directory for diff/histogram CSVs");
  cal->callback([&] { exit_code = cmd_calibrate(cal_plug, cal_ref, cal_method, cal_report); });

  // estimate
  auto* est = app.add_subcommand("estimate", "fit loads that explain a measured voltage");
  std::string est_config, est_mode, est_node, est_format = "json";
  double est_voltage = 0;
  FitConfig est_cfg;
  est->add_option("--config", est_config, "grid config file");
  est->add_option("--mode", est_mode, "uniform or single")
      ->required()
      ->check(CLI::IsMember({"uniform", "single"}));
  est->add_option("--node", est_node, "bus carrying the measurement")->required();
  est->add_option("--voltage", est_voltage, "measured voltage (V)")->required();
  est->add_option("--tol", est_cfg.tol_v, "voltage tolerance (V)");
  est->add_option("--lo", est_cfg.load_lo_w, "lower load bound (W)");
  est->add_option("--hi", est_cfg.load_hi_w, "upper load bound (W)");
  est->add_option("--format", est_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  est->callback([&] {
    exit_code = cmd_estimate(est_config, est_mode, est_node, est_voltage, est_cfg, est_format);
  });

  // analyze
  auto* analyze = app.add_subcommand("analyze", "error propagation and band compliance");
  analyze->require_subcommand(1);
  std::string an_config;
  analyze->add_option("--config", an_config, "grid config file");
  auto* prop = analyze->add_subcommand("propagate", "equivalent loads for a voltage error");
  std::string prop_node, prop_out;
  double prop_verr = 0;
  prop->add_option("--node", prop_node, "measured bus")->required();
  prop->add_option("--verr", prop_verr, "voltage error (V)")->required();
  prop->add_option("--out", prop_out, "write per-node voltage deltas CSV here");
  prop->callback([&] { exit_code = cmd_analyze_propagate(an_config, prop_node, prop_verr, prop_out); });
  auto* band = analyze->add_subcommand("band", "check solved voltages against a p.u. band");
  std::string band_loads;
  double band_nominal = 230.0, band_lo = 0.9, band_hi = 1.1;
  band->add_option("--loads", band_loads, "load set CSV (bus,watts); default zero load");
  band->add_option("--nominal", band_nominal, "nominal voltage (V)");
  band->add_option("--lo", band_lo, "lower per-unit bound");
  band->add_option("--hi", band_hi, "upper per-unit bound");
  band->callback([&] {
    exit_code = cmd_analyze_band(an_config, band_loads, band_nominal, band_lo, band_hi);
  });

  // report
  auto* rep = app.add_subcommand("report", "full pipeline: simulate, calibrate, propagate");
  std::string rep_scenario = "default", rep_out = "report";
  rep->add_option("--scenario", rep_scenario, "scenario JSON path or 'default'");
  rep->add_option("--out", rep_out, "output directory");
  rep->callback([&] { exit_code = cmd_report(rep_scenario, rep_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
