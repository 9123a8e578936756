#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "etfrp/actionspace.hpp"
#include "etfrp/engine.hpp"
#include "etfrp/json_io.hpp"

namespace etfrp {

enum class EntityType : std::uint8_t { kTruck = 0, kDelivery = 1, kCharger = 2 };

struct GraphEdge {
  EntityType src_type = EntityType::kTruck;
  int src_idx = 0;
  EntityType dst_type = EntityType::kTruck;
  int dst_idx = 0;
  double tau_norm = 0.0;
  double e_norm = 0.0;
};

struct ObservationGraph {
  // [soc, status/5, remaining/K, elapsed/T, (next_ready - now)/T]
  std::vector<std::array<double, 5>> truck_feats;
  // Lossless status encoding, one row per truck.
  std::vector<std::array<double, kTruckStatusCount>> truck_status_onehot;
  // [node_id/N, pending/K] for every pending delivery, trucks in order.
  std::vector<std::array<double, 2>> delivery_feats;
  // [index/|C|, p_max/max p_max, eta, ports/max ports, occupancy, queue/fleet]
  std::vector<std::array<double, 6>> charger_feats;
  std::vector<GraphEdge> edges;
  // [kind code, est battery/capacity, est completion/T]
  std::vector<std::array<double, 3>> action_feats;
  std::vector<std::uint8_t> mask;
  int active_truck = -1;
};

// State part. Completed deliveries are omitted; trucks in transit are
// anchored at their destination node.
void encode_state_graph(const WorldState& world, ObservationGraph& obs);
// Action part for the given set, issued to `truck`.
void encode_action_graph(const ActionSet& actions, const WorldState& world, int truck, ObservationGraph& obs);
// Both parts for the world's current decision (empty action part when done).
ObservationGraph encode_observation(const WorldState& world);

// FNV-1a over a fixed binary layout of every field.
std::uint64_t observation_digest(const ObservationGraph& obs);

// {"truck_feats", "truck_status_onehot", "delivery_feats", "charger_feats", "edges"}
Json state_to_json(const ObservationGraph& obs);
// {"feats", "mask"}
Json actions_to_json(const ObservationGraph& obs);

}  // namespace etfrp
