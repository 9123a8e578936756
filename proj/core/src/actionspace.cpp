#include "etfrp/actionspace.hpp"

#include <algorithm>

#include "etfrp/charging.hpp"

namespace etfrp {

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::kNavigateDelivery: return "navigate_delivery";
    case ActionKind::kNavigateCharger: return "navigate_charger";
    case ActionKind::kCharge: return "charge";
  }
  return "navigate_delivery";
}

bool ActionSet::any_feasible() const {
  return std::any_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
}

std::vector<int> ActionSet::feasible_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

int fixed_action_size(const NetworkInstance& inst) {
  std::size_t max_k = 0;
  for (const auto& t : inst.trucks) max_k = std::max(max_k, t.deliveries.size());
  return static_cast<int>(inst.chargers.size() + max_k + inst.config.duration_set.size());
}

std::optional<NodeId> reference_delivery(const NetworkInstance& inst, const TruckView& truck) {
  if (truck.remaining.empty()) return std::nullopt;
  if (truck.spec->mode == DeliveryMode::kSequential) return truck.remaining.front();
  NodeId best = truck.remaining.front();
  for (NodeId d : truck.remaining) {
    const double td = inst.tau(truck.node, d);
    const double tb = inst.tau(truck.node, best);
    if (td < tb || (td == tb && d < best)) best = d;
  }
  return best;
}

double charger_detour(const NetworkInstance& inst, NodeId from, int station, NodeId ref) {
  const NodeId c = inst.chargers[static_cast<std::size_t>(station)].node;
  return inst.tau(from, c) + inst.tau(c, ref) - inst.tau(from, ref);
}

std::vector<int> candidate_chargers(const NetworkInstance& inst, const TruckView& truck, int k_chg) {
  const auto ref = reference_delivery(inst, truck);
  if (!ref) return {};
  std::vector<std::pair<double, int>> scored;
  for (int s = 0; s < static_cast<int>(inst.chargers.size()); ++s) {
    scored.emplace_back(charger_detour(inst, truck.node, s, *ref), s);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<int> out;
  for (std::size_t i = 0; i < scored.size() && static_cast<int>(i) < k_chg; ++i) out.push_back(scored[i].second);
  return out;
}

bool has_headroom(const NetworkInstance& inst, const TruckView& truck, NodeId to) {
  return inst.config.alpha * inst.energy(truck.node, to) < truck.battery - truck.spec->battery_floor;
}

PostState estimate_post_state(const NetworkInstance& inst, const TruckView& truck, const ActionDescriptor& action) {
  switch (action.kind) {
    case ActionKind::kNavigateDelivery:
    case ActionKind::kNavigateCharger:
      if (action.target < 0) return {truck.battery, truck.now};
      return {truck.battery - inst.energy(truck.node, action.target), truck.now + inst.tau(truck.node, action.target)};
    case ActionKind::kCharge: {
      const auto station = inst.station_at(truck.node);
      if (!station) return {truck.battery, truck.now + action.duration};
      const auto r = integrate_charge(truck.battery, truck.spec->battery_capacity, action.duration,
                                      inst.chargers[static_cast<std::size_t>(*station)], inst.config.charge_dt);
      return {r.battery_after, truck.now + action.duration};
    }
  }
  return {truck.battery, truck.now};
}

ActionSet build_action_set(const NetworkInstance& inst, const TruckView& truck) {
  const auto& cfg = inst.config;
  const int n_chg = static_cast<int>(inst.chargers.size());
  const int fixed = fixed_action_size(inst);
  const int n_dur = static_cast<int>(cfg.duration_set.size());
  const int n_del_slots = fixed - n_chg - n_dur;

  ActionSet set;
  set.actions.reserve(static_cast<std::size_t>(fixed));
  auto push = [&](ActionDescriptor a) {
    a.index = static_cast<int>(set.actions.size());
    const auto post = estimate_post_state(inst, truck, a);
    a.est_battery_after = post.battery;
    a.est_completion = post.completion;
    set.actions.push_back(a);
  };

  const auto candidates = candidate_chargers(inst, truck, cfg.k_chg);
  for (int s = 0; s < n_chg; ++s) {
    const NodeId node = inst.chargers[static_cast<std::size_t>(s)].node;
    const bool screened = std::find(candidates.begin(), candidates.end(), s) != candidates.end();
    const bool feasible = screened && node != truck.node && has_headroom(inst, truck, node);
    push({0, ActionKind::kNavigateCharger, node, 0.0, feasible, 0.0, 0.0});
  }

  const auto& assigned = truck.spec->deliveries;
  for (int j = 0; j < n_del_slots; ++j) {
    if (j >= static_cast<int>(assigned.size())) {
      push({0, ActionKind::kNavigateDelivery, -1, 0.0, false, 0.0, 0.0});
      continue;
    }
    const NodeId d = assigned[static_cast<std::size_t>(j)];
    const bool pending = std::find(truck.remaining.begin(), truck.remaining.end(), d) != truck.remaining.end();
    const bool allowed = truck.spec->mode == DeliveryMode::kFlexible
                             ? pending
                             : (!truck.remaining.empty() && truck.remaining.front() == d);
    push({0, ActionKind::kNavigateDelivery, d, 0.0, allowed && has_headroom(inst, truck, d), 0.0, 0.0});
  }

  const auto station = inst.station_at(truck.node);
  const bool can_charge = station.has_value() && (!cfg.mask_full_stations || truck.port_free_here);
  for (double h : cfg.duration_set) {
    push({0, ActionKind::kCharge, station.value_or(-1), h, can_charge, 0.0, 0.0});
  }

  set.mask.reserve(set.actions.size());
  for (const auto& a : set.actions) set.mask.push_back(a.feasible ? 1 : 0);
  return set;
}

}  // namespace etfrp
