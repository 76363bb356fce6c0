#include "gridmon/netmodel.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace gridmon {

bool GridModel::has_bus(const std::string& id) const {
  return find_bus(id) != nullptr;
}

const Bus* GridModel::find_bus(const std::string& id) const {
  for (const auto& b : buses)
    if (b.id == id) return &b;
  return nullptr;
}

std::string GridModel::slack_bus() const {
  for (const auto& b : buses)
    if (b.kind == BusKind::Slack) return b.id;
  throw std::runtime_error("grid has no slack bus");
}

namespace {

// Canonical IEEE 37-node test feeder segment list. 799 is the substation.
constexpr std::pair<const char*, const char*> kIeee37Segments[] = {
    {"799", "701"}, {"701", "702"}, {"702", "705"}, {"702", "713"},
    {"702", "703"}, {"703", "727"}, {"703", "730"}, {"704", "714"},
    {"704", "720"}, {"705", "742"}, {"705", "712"}, {"706", "725"},
    {"707", "724"}, {"707", "722"}, {"708", "733"}, {"708", "732"},
    {"709", "731"}, {"709", "708"}, {"709", "775"}, {"710", "735"},
    {"710", "736"}, {"711", "741"}, {"711", "740"}, {"713", "704"},
    {"714", "718"}, {"720", "707"}, {"720", "706"}, {"727", "744"},
    {"730", "709"}, {"733", "734"}, {"734", "737"}, {"734", "710"},
    {"737", "738"}, {"738", "711"}, {"744", "728"}, {"744", "729"},
};

}  // namespace

GridModel build_ieee37(double spacing_m, const LineParams& params,
                       double slack_voltage_v) {
  if (spacing_m <= 0) throw std::invalid_argument("spacing_m must be > 0");
  GridModel grid;
  grid.slack_voltage_v = slack_voltage_v;

  std::set<std::string> ids;
  for (const auto& [a, b] : kIeee37Segments) {
    ids.insert(a);
    ids.insert(b);
    grid.lines.push_back(Line{a, b, spacing_m, params});
  }
  for (const auto& id : ids)
    grid.buses.push_back(Bus{id, id == "799" ? BusKind::Slack : BusKind::Load});
  return grid;
}

FeederIndex FeederIndex::build(const GridModel& grid) {
  FeederIndex idx;
  const std::string slack = grid.slack_bus();

  std::map<std::string, std::vector<std::pair<std::string, const Line*>>> adj;
  for (const auto& line : grid.lines) {
    adj[line.from_bus].push_back({line.to_bus, &line});
    adj[line.to_bus].push_back({line.from_bus, &line});
  }
  for (auto& [id, nbrs] : adj)
    std::sort(nbrs.begin(), nbrs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

  idx.bus_ids.push_back(slack);
  idx.index_of[slack] = 0;
  idx.parent.push_back(-1);
  idx.z_up.push_back({0.0, 0.0});
  idx.r_up.push_back(0.0);
  idx.children.emplace_back();

  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (const auto& [nbr, line] : adj[idx.bus_ids[u]]) {
      if (idx.index_of.count(nbr)) continue;
      const int v = static_cast<int>(idx.bus_ids.size());
      idx.bus_ids.push_back(nbr);
      idx.index_of[nbr] = v;
      idx.parent.push_back(u);
      idx.z_up.push_back(line->impedance());
      idx.r_up.push_back(line->impedance().real());
      idx.children.emplace_back();
      idx.children[u].push_back(v);
      queue.push_back(v);
    }
  }
  if (idx.bus_ids.size() != grid.buses.size() ||
      grid.lines.size() != grid.buses.size() - 1)
    throw std::runtime_error("grid is not a connected radial tree");
  return idx;
}

std::vector<int> FeederIndex::subtree(int bus) const {
  std::vector<int> out;
  std::deque<int> queue{bus};
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    out.push_back(u);
    for (int c : children[u]) queue.push_back(c);
  }
  return out;
}

std::complex<double> path_impedance(const GridModel& grid,
                                    const std::string& bus) {
  if (!grid.has_bus(bus)) throw UnknownBusError(bus);
  const FeederIndex idx = FeederIndex::build(grid);
  // Sum root-to-bus so that child sums extend parent sums term by term.
  std::vector<int> path;
  for (int u = idx.index_of.at(bus); u != -1; u = idx.parent[u]) path.push_back(u);
  std::complex<double> z{0.0, 0.0};
  for (auto it = path.rbegin(); it != path.rend(); ++it) z += idx.z_up[*it];
  return z;
}

std::vector<GridViolation> validate(const GridModel& grid) {
  std::vector<GridViolation> out;

  int slacks = 0;
  std::set<std::string> ids;
  for (const auto& b : grid.buses) {
    if (b.kind == BusKind::Slack) ++slacks;
    if (!ids.insert(b.id).second)
      out.push_back({"bus-uniqueness", "duplicate bus id " + b.id});
  }
  if (slacks != 1)
    out.push_back({"slack-uniqueness",
                   "expected exactly one slack bus, found " + std::to_string(slacks)});
  if (grid.slack_voltage_v <= 0)
    out.push_back({"slack-voltage", "slack_voltage_v must be > 0"});

  for (const auto& line : grid.lines) {
    const std::string name = line.from_bus + "-" + line.to_bus;
    if (!ids.count(line.from_bus))
      out.push_back({"line-endpoints", "line " + name + " references unknown bus " + line.from_bus});
    if (!ids.count(line.to_bus))
      out.push_back({"line-endpoints", "line " + name + " references unknown bus " + line.to_bus});
    if (line.length_m <= 0)
      out.push_back({"line-length", "line " + name + " has non-positive length"});
    if (line.params.r_ohm_per_km <= 0)
      out.push_back({"line-params", "line " + name + " has non-positive resistance"});
    if (line.params.x_ohm_per_km < 0)
      out.push_back({"line-params", "line " + name + " has negative reactance"});
  }

  // Radiality: |lines| = |buses| - 1 and every bus reachable without
  // revisiting an edge. A duplicated line shows up as a cycle.
  if (!grid.buses.empty() && slacks == 1) {
    if (grid.lines.size() != grid.buses.size() - 1)
      out.push_back({"radiality",
                     "expected " + std::to_string(grid.buses.size() - 1) +
                         " lines for " + std::to_string(grid.buses.size()) +
                         " buses, found " + std::to_string(grid.lines.size())});
    std::map<std::string, std::vector<std::pair<std::string, int>>> adj;
    for (size_t i = 0; i < grid.lines.size(); ++i) {
      adj[grid.lines[i].from_bus].push_back({grid.lines[i].to_bus, static_cast<int>(i)});
      adj[grid.lines[i].to_bus].push_back({grid.lines[i].from_bus, static_cast<int>(i)});
    }
    std::set<std::string> seen{grid.slack_bus()};
    std::deque<std::pair<std::string, int>> queue{{grid.slack_bus(), -1}};
    bool cycle = false;
    while (!queue.empty()) {
      auto [u, via] = queue.front();
      queue.pop_front();
      for (const auto& [v, edge] : adj[u]) {
        if (edge == via) continue;
        if (!seen.insert(v).second) {
          cycle = true;
          continue;
        }
        queue.push_back({v, edge});
      }
    }
    if (cycle) out.push_back({"radiality", "grid contains a cycle"});
    if (seen.size() != ids.size()) {
      std::string missing;
      for (const auto& id : ids)
        if (!seen.count(id)) missing += (missing.empty() ? "" : ", ") + id;
      out.push_back({"connectivity", "buses unreachable from slack: " + missing});
    }
  }
  return out;
}

GridConfig parse_grid_config(const std::string& text) {
  GridConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = raw.find('=');
    if (eq == std::string::npos)
      throw ConfigError("grid config line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(raw.substr(0, eq));
    const std::string value = trim(raw.substr(eq + 1));
    double num = 0;
    try {
      size_t pos = 0;
      num = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError("grid config line " + std::to_string(lineno) + ": bad number '" + value + "'");
    }
    if (key == "spacing_m") cfg.spacing_m = num;
    else if (key == "r_ohm_per_km") cfg.params.r_ohm_per_km = num;
    else if (key == "x_ohm_per_km") cfg.params.x_ohm_per_km = num;
    else if (key == "max_i_a") cfg.params.max_i_a = num;
    else if (key == "slack_voltage_v") cfg.slack_voltage_v = num;
    else throw ConfigError("grid config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  if (cfg.spacing_m <= 0) throw ConfigError("spacing_m must be > 0");
  if (cfg.params.r_ohm_per_km <= 0) throw ConfigError("r_ohm_per_km must be > 0");
  if (cfg.params.x_ohm_per_km < 0) throw ConfigError("x_ohm_per_km must be >= 0");
  if (cfg.slack_voltage_v <= 0) throw ConfigError("slack_voltage_v must be > 0");
  return cfg;
}

GridConfig load_grid_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grid_config(buf.str());
}

}  // namespace gridmon
