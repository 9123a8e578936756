#include "etfrp/obsgraph.hpp"

#include <algorithm>
#include <bit>

namespace etfrp {
namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double safe_div(double a, double b) { return b > 0.0 ? a / b : 0.0; }

struct Entity {
  EntityType type;
  int idx;
  NodeId node;
};

class Hasher {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(buf, 8);
  }
  // Bit pattern, little-endian; -0.0 folded into 0.0.
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v)); }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

void encode_state_graph(const WorldState& world, ObservationGraph& obs) {
  const auto& inst = world.instance();
  const double T = inst.config.horizon_T;
  const double now = world.now();
  const auto& trucks = world.trucks();
  const auto& stations = world.stations();

  obs.truck_feats.clear();
  obs.truck_status_onehot.clear();
  obs.delivery_feats.clear();
  obs.charger_feats.clear();
  obs.edges.clear();

  std::vector<Entity> entities;
  for (int i = 0; i < static_cast<int>(trucks.size()); ++i) {
    const auto& t = trucks[static_cast<std::size_t>(i)];
    const int status = static_cast<int>(t.fsm);
    const double k = static_cast<double>(t.spec->deliveries.size());
    obs.truck_feats.push_back({clamp01(t.battery / t.spec->battery_capacity),
                               static_cast<double>(status) / 5.0,
                               clamp01(safe_div(static_cast<double>(t.remaining.size()), k)),
                               clamp01(safe_div(now - t.last_decision_time, T)),
                               clamp01(safe_div(t.next_ready_estimate - now, T))});
    std::array<double, kTruckStatusCount> onehot{};
    onehot[static_cast<std::size_t>(status)] = 1.0;
    obs.truck_status_onehot.push_back(onehot);
    entities.push_back({EntityType::kTruck, i, t.dest.value_or(t.node)});
  }

  const double n_nodes = static_cast<double>(inst.node_count());
  int d_idx = 0;
  for (const auto& t : trucks) {
    const double frac = safe_div(static_cast<double>(t.remaining.size()), static_cast<double>(t.spec->deliveries.size()));
    for (NodeId d : t.remaining) {
      obs.delivery_feats.push_back({static_cast<double>(d) / n_nodes, frac});
      entities.push_back({EntityType::kDelivery, d_idx++, d});
    }
  }

  double max_p = 0.0;
  int max_ports = 0;
  for (const auto& c : inst.chargers) {
    max_p = std::max(max_p, c.p_max);
    max_ports = std::max(max_ports, c.ports);
  }
  const double n_chg = static_cast<double>(inst.chargers.size());
  const double fleet = static_cast<double>(trucks.size());
  for (int s = 0; s < static_cast<int>(stations.size()); ++s) {
    const auto& st = stations[static_cast<std::size_t>(s)];
    const auto& spec = st.spec();
    obs.charger_feats.push_back({static_cast<double>(s) / n_chg, safe_div(spec.p_max, max_p), spec.eta,
                                 safe_div(spec.ports, max_ports),
                                 clamp01(safe_div(static_cast<double>(st.occupants().size()), spec.ports)),
                                 clamp01(safe_div(static_cast<double>(st.queue().size()), fleet))});
    entities.push_back({EntityType::kCharger, s, spec.node});
  }

  const double max_tau = inst.tau.max();
  const double max_e = inst.energy.max();
  obs.edges.reserve(entities.size() * (entities.size() > 0 ? entities.size() - 1 : 0));
  for (std::size_t a = 0; a < entities.size(); ++a) {
    for (std::size_t b = 0; b < entities.size(); ++b) {
      if (a == b) continue;
      const auto& u = entities[a];
      const auto& v = entities[b];
      obs.edges.push_back({u.type, u.idx, v.type, v.idx, safe_div(inst.tau(u.node, v.node), max_tau),
                           safe_div(inst.energy(u.node, v.node), max_e)});
    }
  }
}

void encode_action_graph(const ActionSet& actions, const WorldState& world, int truck, ObservationGraph& obs) {
  const auto& inst = world.instance();
  const double T = inst.config.horizon_T;
  const double cap = inst.trucks[static_cast<std::size_t>(truck)].battery_capacity;
  obs.action_feats.clear();
  for (const auto& a : actions.actions) {
    double code = 0.0;
    if (a.kind == ActionKind::kNavigateCharger) code = 0.5;
    if (a.kind == ActionKind::kCharge) code = 1.0;
    obs.action_feats.push_back({code, clamp01(a.est_battery_after / cap), std::clamp(safe_div(a.est_completion, T), 0.0, 2.0)});
  }
  obs.mask = actions.mask;
  obs.active_truck = truck;
}

ObservationGraph encode_observation(const WorldState& world) {
  ObservationGraph obs;
  encode_state_graph(world, obs);
  if (const auto t = world.active_truck()) encode_action_graph(world.action_set(), world, *t, obs);
  return obs;
}

std::uint64_t observation_digest(const ObservationGraph& obs) {
  Hasher h;
  h.i64(obs.active_truck);
  auto rows = [&](const auto& table) {
    h.u64(table.size());
    for (const auto& row : table)
      for (double v : row) h.f64(v);
  };
  rows(obs.truck_feats);
  rows(obs.truck_status_onehot);
  rows(obs.delivery_feats);
  rows(obs.charger_feats);
  h.u64(obs.edges.size());
  for (const auto& e : obs.edges) {
    h.i64(static_cast<int>(e.src_type));
    h.i64(e.src_idx);
    h.i64(static_cast<int>(e.dst_type));
    h.i64(e.dst_idx);
    h.f64(e.tau_norm);
    h.f64(e.e_norm);
  }
  rows(obs.action_feats);
  h.u64(obs.mask.size());
  for (auto m : obs.mask) h.i64(m);
  return h.value();
}

Json state_to_json(const ObservationGraph& obs) {
  Json edges = Json::array();
  for (const auto& e : obs.edges) {
    edges.push_back({static_cast<int>(e.src_type), e.src_idx, static_cast<int>(e.dst_type), e.dst_idx, e.tau_norm, e.e_norm});
  }
  return {{"truck_feats", obs.truck_feats},
          {"truck_status_onehot", obs.truck_status_onehot},
          {"delivery_feats", obs.delivery_feats},
          {"charger_feats", obs.charger_feats},
          {"edges", std::move(edges)}};
}

Json actions_to_json(const ObservationGraph& obs) {
  return {{"feats", obs.action_feats}, {"mask", obs.mask}};
}

}  // namespace etfrp
