#include "gridmon/plugsim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gridmon/util.hpp"
#include "json.hpp"

namespace gridmon {

double quantize(double v_true, double pulse_step_v) {
  if (pulse_step_v <= 0) throw std::invalid_argument("pulse_step_v must be > 0");
  const long long pulse_us = std::llround(v_true / pulse_step_v);
  const double decoded = static_cast<double>(pulse_us) * pulse_step_v;
  return std::round(decoded * 10.0) / 10.0;  // firmware prints one decimal
}

Measurement sample_plug(const PlugProfile& profile, double v_true, std::int64_t t_ns) {
  double v = v_true + profile.offset_v;
  if (profile.noise_sigma_v > 0) {
    EventRng rng(profile.rng_seed, static_cast<std::uint64_t>(t_ns));
    v += rng.normal(profile.noise_sigma_v);
  }
  return Measurement{profile.device_id, t_ns, quantize(v, profile.pulse_step_v), {}, {}};
}

Measurement sample_reference(const ReferenceMeterProfile& profile, double v_true,
                             std::int64_t t_ns) {
  double v = v_true;
  if (profile.noise_sigma_v > 0) {
    EventRng rng(profile.rng_seed, static_cast<std::uint64_t>(t_ns));
    v += rng.normal(profile.noise_sigma_v);
  }
  return Measurement{profile.device_id, t_ns, v, {}, {}};
}

const LoadSet& LoadTimeline::at(double time_s) const {
  static const LoadSet kEmpty;
  const LoadSet* active = &kEmpty;
  for (const auto& step : steps) {
    if (step.time_s > time_s) break;
    active = &step.loads;
  }
  return *active;
}

LoadTimeline LoadTimeline::from_csv(const std::string& text) {
  LoadTimeline timeline;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("time_s", 0) == 0) continue;
    std::istringstream row(line);
    std::string time_field, bus, watts_field;
    if (!std::getline(row, time_field, ',') || !std::getline(row, bus, ',') ||
        !std::getline(row, watts_field))
      throw ScenarioError("timeline line " + std::to_string(lineno) +
                          ": expected time_s,bus,watts");
    double time_s, watts;
    try {
      time_s = std::stod(time_field);
      watts = std::stod(watts_field);
    } catch (const std::exception&) {
      throw ScenarioError("timeline line " + std::to_string(lineno) + ": bad number");
    }
    if (!timeline.steps.empty() && time_s < timeline.steps.back().time_s)
      throw ScenarioError("timeline line " + std::to_string(lineno) +
                          ": time_s not ascending");
    if (timeline.steps.empty() || timeline.steps.back().time_s != time_s)
      timeline.steps.push_back({time_s, LoadSet{}});
    timeline.steps.back().loads.set(bus, watts);
  }
  return timeline;
}

std::string LoadTimeline::to_csv() const {
  std::string out = "time_s,bus,watts\n";
  for (const auto& step : steps)
    for (const auto& [bus, watts] : step.loads.entries())
      out += format_double(step.time_s) + "," + bus + "," + format_double(watts) + "\n";
  return out;
}

LoadTimeline synth_random_walk(const GridModel& grid, std::uint64_t seed,
                               double duration_s, const RandomWalkSpec& spec) {
  if (spec.step_s <= 0) throw ScenarioError("random_walk step_s must be > 0");
  if (spec.revert < 0 || spec.revert > 1)
    throw ScenarioError("random_walk revert must be in [0, 1]");
  std::vector<std::string> buses = spec.buses;
  if (buses.empty()) {
    for (const auto& b : grid.buses)
      if (b.kind != BusKind::Slack) buses.push_back(b.id);
  } else {
    for (const auto& b : buses)
      if (!grid.has_bus(b)) throw UnknownBusError(b);
  }
  LoadTimeline timeline;
  std::map<std::string, double> walk;
  for (int k = 0; static_cast<double>(k) * spec.step_s < duration_s; ++k) {
    LoadTimeline::Step step;
    step.time_s = static_cast<double>(k) * spec.step_s;
    for (const auto& bus : buses) {
      EventRng rng(seed ^ fnv1a64(bus), static_cast<std::uint64_t>(k));
      double& w = walk[bus];
      w = spec.revert * w + rng.normal(spec.walk_w);
      step.loads.set(bus, std::max(0.0, spec.base_w + w));
    }
    timeline.steps.push_back(std::move(step));
  }
  return timeline;
}

namespace {

const LoadSet* timeline_step_or_null(const LoadTimeline& timeline, double time_s,
                                     int* segment) {
  *segment = -1;
  const LoadSet* active = nullptr;
  for (size_t i = 0; i < timeline.steps.size(); ++i) {
    if (timeline.steps[i].time_s > time_s) break;
    *segment = static_cast<int>(i);
    active = &timeline.steps[i].loads;
  }
  return active;
}

}  // namespace

std::uint64_t derive_device_seed(std::uint64_t scenario_seed, const std::string& device_id) {
  std::uint64_t s = scenario_seed ^ fnv1a64(device_id);
  return splitmix64(s);
}

Scenario Scenario::from_json(const std::string& text, const std::string& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("scenario config must be a JSON object");

  auto resolve = [&](const std::string& path) {
    std::filesystem::path p(path);
    return p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string();
  };

  Scenario sc;
  try {
    sc.seed = doc.value("seed", 0ULL);
    sc.duration_s = doc.value("duration_s", 3600.0);
    if (sc.duration_s <= 0) throw ScenarioError("duration_s must be > 0");
    if (doc.contains("start"))
      sc.start_ns = parse_iso8601_utc_ns(doc.at("start").get<std::string>());

    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      if (g.is_string()) {
        sc.grid = load_grid_config(resolve(g.get<std::string>()));
      } else {
        sc.grid.spacing_m = g.value("spacing_m", sc.grid.spacing_m);
        sc.grid.params.r_ohm_per_km = g.value("r_ohm_per_km", sc.grid.params.r_ohm_per_km);
        sc.grid.params.x_ohm_per_km = g.value("x_ohm_per_km", sc.grid.params.x_ohm_per_km);
        sc.grid.params.max_i_a = g.value("max_i_a", sc.grid.params.max_i_a);
        sc.grid.slack_voltage_v = g.value("slack_voltage_v", sc.grid.slack_voltage_v);
      }
    }

    for (const auto& p : doc.value("plugs", nlohmann::json::array())) {
      Placement pl;
      pl.bus = p.at("bus").get<std::string>();
      pl.plug.device_id = p.at("device_id").get<std::string>();
      pl.plug.offset_v = p.value("offset_v", 0.0);
      pl.plug.pulse_step_v = p.value("pulse_step_v", 0.28);
      pl.plug.noise_sigma_v = p.value("noise_sigma_v", 0.15);
      pl.plug.cadence_s = p.value("cadence_s", 10.0);
      pl.plug.phase_s = p.value("phase_s", 0.0);
      pl.plug.rng_seed = p.contains("rng_seed")
                             ? p.at("rng_seed").get<std::uint64_t>()
                             : derive_device_seed(sc.seed, pl.plug.device_id);
      if (pl.plug.cadence_s <= 0 || pl.plug.pulse_step_v <= 0)
        throw ScenarioError("plug " + pl.plug.device_id + ": cadence_s and pulse_step_v must be > 0");
      sc.plugs.push_back(std::move(pl));
    }
    for (const auto& r : doc.value("references", nlohmann::json::array())) {
      ReferencePlacement rp;
      rp.bus = r.at("bus").get<std::string>();
      rp.meter.device_id = r.at("device_id").get<std::string>();
      rp.meter.cadence_s = r.value("cadence_s", 60.0);
      rp.meter.phase_s = r.value("phase_s", 0.0);
      rp.meter.noise_sigma_v = r.value("noise_sigma_v", 0.0);
      rp.meter.rng_seed = r.contains("rng_seed")
                              ? r.at("rng_seed").get<std::uint64_t>()
                              : derive_device_seed(sc.seed, rp.meter.device_id);
      if (rp.meter.cadence_s <= 0)
        throw ScenarioError("reference " + rp.meter.device_id + ": cadence_s must be > 0");
      sc.references.push_back(std::move(rp));
    }

    if (doc.contains("loads")) {
      const auto& l = doc.at("loads");
      if (l.is_object()) {
        if (!l.contains("random_walk"))
          throw ScenarioError(
              "loads must be an array of steps, a CSV path, or {\"random_walk\": {...}}");
        const auto& rw = l.at("random_walk");
        RandomWalkSpec spec;
        spec.step_s = rw.value("step_s", spec.step_s);
        spec.base_w = rw.value("base_w", spec.base_w);
        spec.walk_w = rw.value("walk_w", spec.walk_w);
        spec.revert = rw.value("revert", spec.revert);
        if (rw.contains("buses"))
          spec.buses = rw.at("buses").get<std::vector<std::string>>();
        sc.timeline = synth_random_walk(sc.grid.build(), rw.value("seed", sc.seed),
                                        sc.duration_s, spec);
      } else if (l.is_string()) {
        std::ifstream in(resolve(l.get<std::string>()));
        if (!in) throw ScenarioError("cannot open timeline CSV: " + l.get<std::string>());
        std::ostringstream buf;
        buf << in.rdbuf();
        sc.timeline = LoadTimeline::from_csv(buf.str());
      } else {
        for (const auto& row : l) {
          const double time_s = row.at("time_s").get<double>();
          if (sc.timeline.steps.empty() || sc.timeline.steps.back().time_s != time_s) {
            if (!sc.timeline.steps.empty() && time_s < sc.timeline.steps.back().time_s)
              throw ScenarioError("loads: time_s not ascending");
            sc.timeline.steps.push_back({time_s, LoadSet{}});
          }
          sc.timeline.steps.back().loads.set(row.at("bus").get<std::string>(),
                                             row.at("watts").get<double>());
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario config: ") + e.what());
  }

  std::set<std::string> ids;
  for (const auto& p : sc.plugs)
    if (!ids.insert(p.plug.device_id).second)
      throw ScenarioError("duplicate device id: " + p.plug.device_id);
  for (const auto& r : sc.references)
    if (!ids.insert(r.meter.device_id).second)
      throw ScenarioError("duplicate device id: " + r.meter.device_id);
  return sc;
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), std::filesystem::path(path).parent_path().string());
}

std::vector<Measurement> run_scenario(const Scenario& scenario) {
  const GridModel grid = scenario.grid.build();
  for (const auto& p : scenario.plugs)
    if (!grid.has_bus(p.bus)) throw UnknownBusError(p.bus);
  for (const auto& r : scenario.references)
    if (!grid.has_bus(r.bus)) throw UnknownBusError(r.bus);

  struct Tick {
    std::int64_t t_ns;
    std::string device_id;
    const Placement* plug;              // exactly one of plug/ref set
    const ReferencePlacement* ref;
  };
  std::vector<Tick> ticks;
  const std::int64_t duration_ns = std::llround(scenario.duration_s * 1e9);
  auto add_ticks = [&](const std::string& device_id, double cadence_s, double phase_s,
                       const Placement* plug, const ReferencePlacement* ref) {
    const std::int64_t cadence_ns = std::llround(cadence_s * 1e9);
    const std::int64_t phase_ns = std::llround(phase_s * 1e9);
    if (cadence_ns <= 0) throw ScenarioError("cadence must be positive: " + device_id);
    for (std::int64_t t = scenario.start_ns + phase_ns;; t += cadence_ns) {
      if (t <= scenario.start_ns) continue;
      if (t > scenario.start_ns + duration_ns) break;
      ticks.push_back({t, device_id, plug, ref});
    }
  };
  for (const auto& p : scenario.plugs)
    add_ticks(p.plug.device_id, p.plug.cadence_s, p.plug.phase_s, &p, nullptr);
  for (const auto& r : scenario.references)
    add_ticks(r.meter.device_id, r.meter.cadence_s, r.meter.phase_s, nullptr, &r);
  std::sort(ticks.begin(), ticks.end(), [](const Tick& a, const Tick& b) {
    return a.t_ns != b.t_ns ? a.t_ns < b.t_ns : a.device_id < b.device_id;
  });

  std::map<int, VoltageSolution> segment_cache;
  auto solution_at = [&](std::int64_t t_ns) -> const VoltageSolution& {
    const double rel_s = static_cast<double>(t_ns - scenario.start_ns) / 1e9;
    int segment = -1;
    const LoadSet* loads = timeline_step_or_null(scenario.timeline, rel_s, &segment);
    auto it = segment_cache.find(segment);
    if (it == segment_cache.end()) {
      static const LoadSet kEmpty;
      try {
        it = segment_cache.emplace(segment, solve(grid, loads ? *loads : kEmpty)).first;
      } catch (const InfeasibleLoadError& e) {
        throw ScenarioError("infeasible load set at " + format_iso8601_utc(t_ns) +
                            " (t=" + std::to_string(t_ns) + " ns): " + e.what());
      }
    }
    return it->second;
  };

  std::vector<Measurement> out;
  out.reserve(ticks.size());
  for (const auto& tick : ticks) {
    const VoltageSolution& sol = solution_at(tick.t_ns);
    if (tick.plug) {
      const double v_true = sol.at(tick.plug->bus);
      out.push_back(sample_plug(tick.plug->plug, v_true, tick.t_ns));
    } else {
      const double v_true = sol.at(tick.ref->bus);
      out.push_back(sample_reference(tick.ref->meter, v_true, tick.t_ns));
    }
  }
  return out;
}

std::string measurements_to_csv(const std::vector<Measurement>& measurements) {
  std::string out = "timestamp,device,voltage\n";
  for (const auto& m : measurements)
    out += std::to_string(m.timestamp_ns) + "," + m.device_id + "," +
           format_double(m.voltage_v) + "\n";
  return out;
}

std::vector<Measurement> measurements_from_csv(const std::string& text) {
  std::vector<Measurement> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("timestamp", 0) == 0) continue;
    std::istringstream row(line);
    std::string ts, device, volts;
    if (!std::getline(row, ts, ',') || !std::getline(row, device, ',') ||
        !std::getline(row, volts))
      throw std::runtime_error("measurement CSV line " + std::to_string(lineno) +
                               ": expected timestamp,device,voltage");
    try {
      out.push_back({device, std::stoll(ts), std::stod(volts), {}, {}});
    } catch (const std::exception&) {
      throw std::runtime_error("measurement CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

}  // namespace gridmon
