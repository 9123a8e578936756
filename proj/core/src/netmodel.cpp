#include "etfrp/netmodel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "etfrp/errors.hpp"
#include "etfrp/json_io.hpp"
#include "etfrp/numfmt.hpp"

namespace etfrp {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kPlain: return "plain";
    case NodeKind::kDelivery: return "delivery";
    case NodeKind::kCharger: return "charger";
    case NodeKind::kDepot: return "depot";
  }
  return "plain";
}

std::string_view to_string(DeliveryMode mode) {
  return mode == DeliveryMode::kSequential ? "sequential" : "flexible";
}

double Matrix::max() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, v);
  return m;
}

std::optional<int> NetworkInstance::station_at(NodeId node) const {
  for (std::size_t s = 0; s < chargers.size(); ++s) {
    if (chargers[s].node == node) return static_cast<int>(s);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_matrix(const Matrix& m, const char* name, int n, std::vector<std::string>& out) {
  if (m.size() != n) {
    out.push_back(std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n) +
                  ", got " + std::to_string(m.size()));
    return;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = m(i, j);
      const std::string at = std::string(name) + "[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (!std::isfinite(v)) {
        out.push_back("non-finite cost " + at);
      } else if (v < 0.0) {
        out.push_back("negative cost " + at + " = " + format_sig9(v));
      } else if (i == j && v != 0.0) {
        out.push_back("nonzero diagonal " + at);
      }
    }
  }
}

}  // namespace

std::vector<std::string> check_invariants(const NetworkInstance& inst) {
  std::vector<std::string> out;
  const int n = inst.node_count();
  auto valid_node = [&](NodeId id) { return id >= 0 && id < n; };

  for (int i = 0; i < n; ++i) {
    if (inst.nodes[static_cast<std::size_t>(i)].id != i) {
      out.push_back("node ids must be dense 0..N-1; nodes[" + std::to_string(i) + "].id = " +
                    std::to_string(inst.nodes[static_cast<std::size_t>(i)].id));
    }
  }
  check_matrix(inst.tau, "tau", n, out);
  check_matrix(inst.energy, "energy", n, out);

  std::set<NodeId> charger_nodes;
  for (std::size_t s = 0; s < inst.chargers.size(); ++s) {
    const auto& c = inst.chargers[s];
    const std::string at = "chargers[" + std::to_string(s) + "]";
    if (!valid_node(c.node)) {
      out.push_back(at + ".node " + std::to_string(c.node) + " is not a valid node");
    } else if (!charger_nodes.insert(c.node).second) {
      out.push_back(at + ".node " + std::to_string(c.node) + " hosts more than one charger");
    }
    if (!(c.p_min > 0.0 && c.p_min <= c.p_max)) out.push_back(at + " requires 0 < p_min <= p_max");
    if (!(c.eta > 0.0 && c.eta <= 1.0)) out.push_back(at + ".eta must be in (0, 1]");
    if (c.ports < 1) out.push_back(at + ".ports must be >= 1");
  }

  for (std::size_t i = 0; i < inst.trucks.size(); ++i) {
    const auto& t = inst.trucks[i];
    const std::string at = "trucks[" + std::to_string(i) + "]";
    if (t.id != static_cast<int>(i)) out.push_back(at + ".id must equal its index");
    if (!valid_node(t.start_node)) out.push_back(at + ".start_node is not a valid node");
    if (!(t.battery_floor >= 0.0 && t.battery_floor < t.initial_battery &&
          t.initial_battery <= t.battery_capacity)) {
      out.push_back(at + " requires 0 <= battery_floor < initial_battery <= battery_capacity");
    }
    if (t.deliveries.empty()) out.push_back(at + ".deliveries must be non-empty");
    if (t.deliveries.size() > 30) out.push_back(at + " has more than 30 deliveries");
    std::set<NodeId> seen;
    for (NodeId d : t.deliveries) {
      if (!valid_node(d)) {
        out.push_back(at + " delivery " + std::to_string(d) + " is not a valid node");
      } else if (inst.nodes[static_cast<std::size_t>(d)].kind != NodeKind::kDelivery) {
        out.push_back(at + " delivery " + std::to_string(d) + " is not a delivery-kind node");
      }
      if (!seen.insert(d).second) out.push_back(at + " delivery " + std::to_string(d) + " is duplicated");
    }
  }

  const auto& c = inst.config;
  const auto& s = c.stochastic;
  if (!(c.alpha >= 1.0)) out.push_back("config.alpha must be >= 1");
  if (c.alpha < s.xi_high && !c.allow_unsafe_alpha) {
    out.push_back("config.alpha " + format_sig9(c.alpha) + " is below the energy clip ceiling " +
                  format_sig9(s.xi_high) + " (set allow_unsafe_alpha to permit stranding)");
  }
  if (c.duration_set.empty()) out.push_back("config.duration_set must be non-empty");
  for (std::size_t i = 0; i < c.duration_set.size(); ++i) {
    if (!(c.duration_set[i] > 0.0) || (i > 0 && !(c.duration_set[i] > c.duration_set[i - 1]))) {
      out.push_back("config.duration_set must be strictly increasing and positive");
      break;
    }
  }
  if (!(c.charge_dt > 0.0)) out.push_back("config.charge_dt must be > 0");
  if (!(c.horizon_T > 0.0)) out.push_back("config.horizon_T must be > 0");
  if (!(c.time_limit_h > 0.0)) out.push_back("config.time_limit_h must be > 0");
  if (c.k_chg < 1) out.push_back("config.k_chg must be >= 1");
  if (!(s.travel_std_factor >= 0.0)) out.push_back("stochastic.travel_std_factor must be >= 0");
  if (!(s.rush_multiplier >= 0.0)) out.push_back("stochastic.rush_multiplier must be >= 0");
  if (!(s.xi_low <= 1.0 && 1.0 <= s.xi_high)) out.push_back("stochastic.energy_clip must bracket 1");
  if (!(s.travel_clip_low > 0.0 && s.travel_clip_low <= s.travel_clip_high)) {
    out.push_back("stochastic.travel_clip requires 0 < low <= high");
  }
  if (!(s.energy_noise_std >= 0.0)) out.push_back("stochastic.energy_noise_std must be >= 0");
  if (!(s.unloading.hours >= 0.0)) out.push_back("stochastic.unloading hours must be >= 0");
  if (s.unloading.stochastic &&
      !(s.unloading.std >= 0.0 && s.unloading.clip_low <= s.unloading.clip_high && s.unloading.clip_low >= 0.0)) {
    out.push_back("stochastic.unloading gaussian parameters are inconsistent");
  }
  if (!(c.reward.lambda1 > 0.0)) out.push_back("reward.lambda1 must be > 0");
  if (!(c.reward.lambda2 > 0.0)) out.push_back("reward.lambda2 must be > 0");
  if (!(c.reward.lambda3 < 0.0)) out.push_back("reward.lambda3 must be < 0");
  return out;
}

void validate(const NetworkInstance& inst) {
  auto failures = check_invariants(inst);
  if (!failures.empty()) throw ValidationError(std::move(failures));
}

// ---------------------------------------------------------------------------
// Serialization

NetworkInstance load_instance(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  NetworkInstance inst = instance_from_json(doc);
  validate(inst);
  return inst;
}

NetworkInstance load_instance_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_instance(ss.str());
}

std::string save_instance(const NetworkInstance& inst) { return emit_canonical(instance_to_json(inst)); }

void save_instance_file(const NetworkInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write instance file " + path.string());
  out << save_instance(inst);
}

std::uint64_t instance_digest(const NetworkInstance& inst) { return fnv1a64(save_instance(inst)); }

// ---------------------------------------------------------------------------
// Cost matrices

CostMatrices euclidean_costs(std::span<const Point> points, double speed_kmh, double kwh_per_km,
                             const Matrix& jitter) {
  const int n = static_cast<int>(points.size());
  CostMatrices out{Matrix(n), Matrix(n)};
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      const auto& a = points[static_cast<std::size_t>(u)];
      const auto& b = points[static_cast<std::size_t>(v)];
      const double dist = std::hypot(a.x - b.x, a.y - b.y);
      const double j = jitter.size() == n ? jitter(u, v) : 0.0;
      out.tau(u, v) = dist / speed_kmh * (1.0 + j);
      out.energy(u, v) = dist * kwh_per_km * (1.0 + j);
    }
  }
  return out;
}

CostMatrices shortest_path_costs(const RoadGraph& graph, std::span<const int> poi_vertices) {
  const int nv = graph.vertex_count;
  std::vector<std::vector<const RoadArc*>> adjacency(static_cast<std::size_t>(nv));
  for (const auto& arc : graph.arcs) {
    if (arc.from < 0 || arc.from >= nv || arc.to < 0 || arc.to >= nv) {
      throw std::invalid_argument("road arc references vertex outside 0.." + std::to_string(nv - 1));
    }
    if (!(arc.time_h >= 0.0) || !(arc.energy_kwh >= 0.0)) {
      throw std::invalid_argument("road arc weights must be nonnegative");
    }
    adjacency[static_cast<std::size_t>(arc.from)].push_back(&arc);
  }

  const int n = static_cast<int>(poi_vertices.size());
  CostMatrices out{Matrix(n), Matrix(n)};
  constexpr double kInf = std::numeric_limits<double>::infinity();
  using Label = std::pair<double, double>;  // (time, energy), lexicographic

  for (int i = 0; i < n; ++i) {
    std::vector<Label> best(static_cast<std::size_t>(nv), {kInf, kInf});
    using Entry = std::pair<Label, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
    const int src = poi_vertices[static_cast<std::size_t>(i)];
    best[static_cast<std::size_t>(src)] = {0.0, 0.0};
    frontier.push({{0.0, 0.0}, src});
    while (!frontier.empty()) {
      auto [label, u] = frontier.top();
      frontier.pop();
      if (label > best[static_cast<std::size_t>(u)]) continue;
      for (const RoadArc* arc : adjacency[static_cast<std::size_t>(u)]) {
        const Label next{label.first + arc->time_h, label.second + arc->energy_kwh};
        if (next < best[static_cast<std::size_t>(arc->to)]) {
          best[static_cast<std::size_t>(arc->to)] = next;
          frontier.push({next, arc->to});
        }
      }
    }
    for (int j = 0; j < n; ++j) {
      const Label& l = best[static_cast<std::size_t>(poi_vertices[static_cast<std::size_t>(j)])];
      if (!std::isfinite(l.first)) {
        throw std::invalid_argument("POI " + std::to_string(j) + " unreachable from POI " + std::to_string(i));
      }
      out.tau(i, j) = l.first;
      out.energy(i, j) = l.second;
    }
  }
  return out;
}

RoadGraph load_road_graph(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "etfrp-roadgraph/1") {
    throw ParseError("/format", "expected \"etfrp-roadgraph/1\"");
  }
  RoadGraph g;
  if (!doc.contains("vertex_count") || !doc["vertex_count"].is_number_integer()) {
    throw ParseError("/vertex_count", "expected integer");
  }
  g.vertex_count = doc["vertex_count"].get<int>();
  if (!doc.contains("arcs") || !doc["arcs"].is_array()) throw ParseError("/arcs", "expected array");
  for (std::size_t i = 0; i < doc["arcs"].size(); ++i) {
    const Json& a = doc["arcs"][i];
    const std::string p = "/arcs/" + std::to_string(i);
    if (!a.is_array() || a.size() != 4 || !a[0].is_number_integer() || !a[1].is_number_integer() ||
        !a[2].is_number() || !a[3].is_number()) {
      throw ParseError(p, "expected [from, to, time_h, energy_kwh]");
    }
    g.arcs.push_back({a[0].get<int>(), a[1].get<int>(), a[2].get<double>(), a[3].get<double>()});
  }
  return g;
}

// ---------------------------------------------------------------------------
// Assignment feasibility
//
// Layered search over (delivered-mask, location). Layer s holds states
// reachable with exactly s charging stops; within a layer only delivery
// moves happen, so masks grow and a popcount order settles each layer.
// Arriving at a charger refills to capacity, so a (mask, charger) state is
// only ever worth entering once across all layers.

FeasibilityReport validate_assignment(const NetworkInstance& inst, const TruckSpec& truck) {
  const int k = static_cast<int>(truck.deliveries.size());
  const int n_chg = static_cast<int>(inst.chargers.size());
  const double alpha = inst.config.alpha;
  const std::uint32_t full = k >= 32 ? ~0u : ((1u << k) - 1u);

  // location: 0 = start, 1..k = delivery j-1, k+1.. = charger s
  auto node_of = [&](int loc) -> NodeId {
    if (loc == 0) return truck.start_node;
    if (loc <= k) return truck.deliveries[static_cast<std::size_t>(loc - 1)];
    return inst.chargers[static_cast<std::size_t>(loc - 1 - k)].node;
  };

  struct Entry {
    double battery;
    int parent_layer;
    std::uint64_t parent_key;
  };
  auto key_of = [](std::uint32_t mask, int loc) { return (static_cast<std::uint64_t>(mask) << 16) | static_cast<std::uint64_t>(loc); };
  std::vector<std::map<std::uint64_t, Entry>> layers(1);
  layers[0][key_of(0, 0)] = {truck.initial_battery, -1, 0};
  std::set<std::uint64_t> visited_chargers;

  for (int s = 0;; ++s) {
    auto& layer = layers[static_cast<std::size_t>(s)];
    if (layer.empty()) return {false, {}};

    // Delivery moves within the layer, processed by increasing popcount.
    for (int pc = 0; pc <= k; ++pc) {
      std::vector<std::pair<std::uint64_t, Entry>> frontier;
      for (const auto& [key, e] : layer) {
        if (std::popcount(static_cast<std::uint32_t>(key >> 16)) == pc) frontier.emplace_back(key, e);
      }
      for (const auto& [key, e] : frontier) {
        const auto mask = static_cast<std::uint32_t>(key >> 16);
        const int loc = static_cast<int>(key & 0xffff);
        for (int j = 0; j < k; ++j) {
          if (mask & (1u << j)) continue;
          if (truck.mode == DeliveryMode::kSequential && j != pc) continue;
          const double need = alpha * inst.energy(node_of(loc), truck.deliveries[static_cast<std::size_t>(j)]);
          if (!(need < e.battery - truck.battery_floor)) continue;
          const std::uint64_t next = key_of(mask | (1u << j), j + 1);
          const double b = e.battery - need;
          auto it = layer.find(next);
          if (it == layer.end() || it->second.battery < b) layer[next] = {b, s, key};
        }
      }
    }

    // Goal check: fewest stops, and within the layer the best battery.
    const std::map<std::uint64_t, Entry>::const_iterator goal = std::find_if(
        layer.begin(), layer.end(), [&](const auto& kv) { return static_cast<std::uint32_t>(kv.first >> 16) == full; });
    if (goal != layer.end()) {
      FeasibilityReport report{true, {}};
      int li = s;
      std::uint64_t key = goal->first;
      while (li >= 0) {
        const Entry& e = layers[static_cast<std::size_t>(li)].at(key);
        const int loc = static_cast<int>(key & 0xffff);
        if (loc > k && e.parent_layer == li - 1) {
          const auto mask = static_cast<std::uint32_t>(key >> 16);
          report.required_stops.push_back({std::popcount(mask), loc - 1 - k});
        }
        if (e.parent_layer < 0) break;
        li = e.parent_layer;
        key = e.parent_key;
      }
      std::reverse(report.required_stops.begin(), report.required_stops.end());
      return report;
    }

    // Charger moves open the next layer.
    std::map<std::uint64_t, Entry> next_layer;
    for (const auto& [key, e] : layer) {
      const auto mask = static_cast<std::uint32_t>(key >> 16);
      const int loc = static_cast<int>(key & 0xffff);
      for (int c = 0; c < n_chg; ++c) {
        const int cloc = k + 1 + c;
        if (cloc == loc) continue;
        const std::uint64_t next = key_of(mask, cloc);
        if (visited_chargers.count(next)) continue;
        const double need = alpha * inst.energy(node_of(loc), node_of(cloc));
        if (!(need < e.battery - truck.battery_floor)) continue;
        if (!next_layer.count(next)) next_layer[next] = {truck.battery_capacity, s, key};
      }
    }
    for (const auto& [key, e] : next_layer) visited_chargers.insert(key);
    layers.push_back(std::move(next_layer));
  }
}

// ---------------------------------------------------------------------------
// Generation

NetworkInstance generate_instance(const GeneratorParams& p, std::uint64_t seed) {
  if (p.n_nodes < p.n_chargers + p.stops_per_truck + 1) {
    throw GenerationError("n_nodes (" + std::to_string(p.n_nodes) + ") must be >= n_chargers + stops_per_truck + 1 (" +
                          std::to_string(p.n_chargers + p.stops_per_truck + 1) + ")");
  }
  if (p.n_trucks < 1 || p.stops_per_truck < 1 || p.n_chargers < 0) {
    throw GenerationError("need at least one truck and one stop per truck");
  }
  if (!(p.area_km > 0.0 && p.speed_kmh > 0.0 && p.kwh_per_km > 0.0 && p.asymmetry_jitter >= 0.0)) {
    throw GenerationError("area, speed and kwh_per_km must be positive; jitter nonnegative");
  }
  if (p.port_min < 1 || p.port_max < p.port_min) throw GenerationError("port range must satisfy 1 <= min <= max");

  RandomStreams streams(seed);
  CounterStream& g = streams.stream(StreamId::kGenerator);
  const int n = p.n_nodes;

  std::vector<Point> points(static_cast<std::size_t>(n));
  for (auto& pt : points) {
    pt.x = quantize_sig9(g.uniform() * p.area_km);
    pt.y = quantize_sig9(g.uniform() * p.area_km);
  }
  Matrix jitter(n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u != v) jitter(u, v) = p.asymmetry_jitter > 0.0 ? g.uniform() * p.asymmetry_jitter : 0.0;
    }
  }
  CostMatrices costs = euclidean_costs(points, p.speed_kmh, p.kwh_per_km, jitter);

  NetworkInstance inst;
  inst.name = "generated-" + std::to_string(seed);
  inst.config = p.config;
  inst.tau = Matrix(n);
  inst.energy = Matrix(n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      inst.tau(u, v) = quantize_sig9(costs.tau(u, v));
      inst.energy(u, v) = quantize_sig9(costs.energy(u, v));
    }
  }

  // Charger placement: partial Fisher-Yates over node ids.
  std::vector<NodeId> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < p.n_chargers; ++i) {
    const auto j = static_cast<std::size_t>(i) + uniform_index(g, static_cast<std::uint64_t>(n - i));
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
  }
  std::vector<NodeId> charger_nodes(order.begin(), order.begin() + p.n_chargers);
  std::sort(charger_nodes.begin(), charger_nodes.end());
  std::vector<NodeId> pool(order.begin() + p.n_chargers, order.end());
  std::sort(pool.begin(), pool.end());

  for (NodeId c : charger_nodes) {
    const int ports = p.port_min + static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(p.port_max - p.port_min + 1)));
    inst.chargers.push_back({c, quantize_sig9(p.p_max), quantize_sig9(p.p_min), quantize_sig9(p.eta), ports});
  }

  inst.nodes.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    inst.nodes[static_cast<std::size_t>(i)] = {i, NodeKind::kPlain, points[static_cast<std::size_t>(i)].x,
                                               points[static_cast<std::size_t>(i)].y};
  }
  for (NodeId c : charger_nodes) inst.nodes[static_cast<std::size_t>(c)].kind = NodeKind::kCharger;
  // Every non-charger node may be a delivery target while assignments are
  // drawn; kinds are finalized afterwards.
  for (NodeId v : pool) inst.nodes[static_cast<std::size_t>(v)].kind = NodeKind::kDelivery;

  const double capacity = quantize_sig9(p.battery_kwh);
  const double initial = quantize_sig9(p.battery_kwh * p.initial_soc);
  for (int t = 0; t < p.n_trucks; ++t) {
    TruckSpec truck;
    truck.id = t;
    truck.battery_capacity = capacity;
    truck.initial_battery = initial;
    truck.battery_floor = 0.0;
    truck.mode = p.mode;
    bool ok = false;
    for (int attempt = 0; attempt < p.max_retries && !ok; ++attempt) {
      std::vector<NodeId> picks = pool;
      const int need = p.stops_per_truck + 1;
      for (int i = 0; i < need; ++i) {
        const auto j = static_cast<std::size_t>(i) + uniform_index(g, picks.size() - static_cast<std::size_t>(i));
        std::swap(picks[static_cast<std::size_t>(i)], picks[j]);
      }
      truck.start_node = picks[0];
      truck.deliveries.assign(picks.begin() + 1, picks.begin() + need);
      ok = validate_assignment(inst, truck).feasible;
    }
    if (!ok) {
      throw GenerationError("truck " + std::to_string(t) + ": no feasible assignment after " +
                            std::to_string(p.max_retries) + " attempts");
    }
    inst.trucks.push_back(std::move(truck));
  }

  std::set<NodeId> deliveries;
  std::set<NodeId> starts;
  for (const auto& t : inst.trucks) {
    deliveries.insert(t.deliveries.begin(), t.deliveries.end());
    starts.insert(t.start_node);
  }
  for (NodeId v : pool) {
    auto& kind = inst.nodes[static_cast<std::size_t>(v)].kind;
    kind = deliveries.count(v) ? NodeKind::kDelivery : starts.count(v) ? NodeKind::kDepot : NodeKind::kPlain;
  }
  validate(inst);
  return inst;
}

}  // namespace etfrp
