#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "etfrp/netmodel.hpp"

namespace etfrp {

enum class ActionKind { kNavigateDelivery, kNavigateCharger, kCharge };
std::string_view to_string(ActionKind kind);

struct ActionDescriptor {
  int index = 0;  // slot in the fixed enumeration
  ActionKind kind = ActionKind::kNavigateDelivery;
  int target = -1;        // node id for navigation, station index for charge; -1 on padding slots
  double duration = 0.0;  // hours, charge only
  bool feasible = false;
  double est_battery_after = 0.0;  // kWh, nominal
  double est_completion = 0.0;     // absolute hours, nominal, queue-free
};

// Canonical order: |C| charger-navigation slots (station order), then one
// slot per assigned delivery (assignment order, padded to the fleet's
// largest assignment), then one slot per charge duration (ascending).
struct ActionSet {
  std::vector<ActionDescriptor> actions;
  std::vector<std::uint8_t> mask;

  int fixed_size() const { return static_cast<int>(actions.size()); }
  bool any_feasible() const;
  std::vector<int> feasible_indices() const;
};

// Everything action construction needs to know about the acting truck.
struct TruckView {
  const TruckSpec* spec = nullptr;
  NodeId node = 0;
  double battery = 0.0;
  std::span<const NodeId> remaining;  // pending deliveries, assignment order
  double now = 0.0;
  bool port_free_here = true;  // free port at the station under the truck, if any
};

// |C| + max_i |D_i| + |H|.
int fixed_action_size(const NetworkInstance& inst);

// Sequential: next delivery in order. Flexible: remaining delivery with the
// smallest nominal tau from the truck's node, ties by lower node id.
std::optional<NodeId> reference_delivery(const NetworkInstance& inst, const TruckView& truck);

// tau[n][c] + tau[c][ref] - tau[n][ref]
double charger_detour(const NetworkInstance& inst, NodeId from, int station, NodeId ref);

// Up to k stations by ascending detour, ties by station index. Empty when
// the truck has nothing left to deliver.
std::vector<int> candidate_chargers(const NetworkInstance& inst, const TruckView& truck, int k_chg);

// Headroom check alpha * e < battery - floor.
bool has_headroom(const NetworkInstance& inst, const TruckView& truck, NodeId to);

ActionSet build_action_set(const NetworkInstance& inst, const TruckView& truck);

struct PostState {
  double battery = 0.0;
  double completion = 0.0;
};
PostState estimate_post_state(const NetworkInstance& inst, const TruckView& truck, const ActionDescriptor& action);

}  // namespace etfrp
