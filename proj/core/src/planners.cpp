#include "etfrp/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <tuple>

#include "etfrp/charging.hpp"

namespace etfrp {

// ---------------------------------------------------------------------------
// Tours

double path_cost(const Matrix& tau, NodeId start, std::span<const NodeId> order) {
  double c = 0.0;
  NodeId at = start;
  for (NodeId v : order) {
    c += tau(at, v);
    at = v;
  }
  return c;
}

std::vector<NodeId> tsp_order(const Matrix& tau, NodeId start, std::span<const NodeId> deliveries) {
  std::vector<NodeId> left(deliveries.begin(), deliveries.end());
  std::vector<NodeId> tour;
  NodeId at = start;
  while (!left.empty()) {
    auto best = left.begin();
    for (auto it = left.begin(); it != left.end(); ++it) {
      const double c = tau(at, *it);
      const double cb = tau(at, *best);
      if (c < cb || (c == cb && *it < *best)) best = it;
    }
    at = *best;
    tour.push_back(at);
    left.erase(best);
  }

  const std::size_t n = tour.size();
  double cost = path_cost(tau, start, tour);
  for (;;) {
    double best_cost = cost;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        std::reverse(tour.begin() + static_cast<long>(i), tour.begin() + static_cast<long>(j) + 1);
        const double c = path_cost(tau, start, tour);
        std::reverse(tour.begin() + static_cast<long>(i), tour.begin() + static_cast<long>(j) + 1);
        if (c < best_cost - 1e-12) {
          best_cost = c;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == bj) break;
    std::reverse(tour.begin() + static_cast<long>(bi), tour.begin() + static_cast<long>(bj) + 1);
    cost = best_cost;
  }
  return tour;
}

// ---------------------------------------------------------------------------
// Search

double nominal_unloading(const StochasticParams& params) { return params.unloading.hours; }

namespace {

struct Label {
  NodeId node;
  std::uint32_t mask;  // bit j set while assignment position j is pending
  double battery;
  double route, charge, unload;
  int parent;
  ActionDescriptor action;  // action taken from the parent
  double cost() const { return route + charge + unload; }
};

std::vector<NodeId> pending(const TruckSpec& spec, std::uint32_t mask) {
  std::vector<NodeId> out;
  for (std::size_t j = 0; j < spec.deliveries.size(); ++j) {
    if (mask & (1u << j)) out.push_back(spec.deliveries[j]);
  }
  return out;
}

SearchResult reconstruct(const std::vector<Label>& labels, const TruckSpec& spec, int goal) {
  SearchResult r;
  r.feasible = true;
  r.nominal_cost = labels[static_cast<std::size_t>(goal)].cost();
  std::vector<int> chain;
  for (int k = goal; labels[static_cast<std::size_t>(k)].parent >= 0; k = labels[static_cast<std::size_t>(k)].parent) {
    chain.push_back(k);
  }
  std::reverse(chain.begin(), chain.end());
  for (int k : chain) {
    const auto& child = labels[static_cast<std::size_t>(k)];
    const auto& from = labels[static_cast<std::size_t>(child.parent)];
    r.plan.push_back(child.action);
    r.steps.push_back({child.action, from.node, from.battery, pending(spec, from.mask)});
  }
  return r;
}

}  // namespace

SearchResult optimal_search_from(const NetworkInstance& inst, const TruckSpec& truck, NodeId node, double battery,
                                 std::span<const NodeId> remaining, const SearchLimits& limits) {
  const auto& cfg = inst.config;
  const double unload = nominal_unloading(cfg.stochastic);
  std::uint32_t mask0 = 0;
  for (NodeId d : remaining) {
    const auto it = std::find(truck.deliveries.begin(), truck.deliveries.end(), d);
    if (it != truck.deliveries.end()) mask0 |= 1u << static_cast<unsigned>(it - truck.deliveries.begin());
  }

  std::vector<Label> labels;
  labels.push_back({node, mask0, battery, 0.0, 0.0, 0.0, -1, {}});
  if (mask0 == 0) {
    SearchResult r;
    r.feasible = true;
    r.optimal = true;
    return r;
  }

  using Entry = std::tuple<double, std::int64_t, int>;  // cost, seq, label
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::int64_t seq = 0;
  open.emplace(0.0, seq++, 0);

  auto bucket = [&](double b) { return limits.battery_quantum > 0.0 ? std::floor(b / limits.battery_quantum + 1e-9) : b; };
  // Settled (cost, battery key) pairs per (node, mask).
  std::map<std::pair<NodeId, std::uint32_t>, std::vector<std::pair<double, double>>> settled;
  auto dominated = [&](const Label& l) {
    const auto it = settled.find({l.node, l.mask});
    if (it == settled.end()) return false;
    const double key = bucket(l.battery);
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const auto& s) { return s.first <= l.cost() && s.second >= key; });
  };

  int incumbent = -1;
  std::int64_t expansions = 0;
  while (!open.empty()) {
    const auto [cost, unused_seq, idx] = open.top();
    (void)unused_seq;
    open.pop();
    const Label cur = labels[static_cast<std::size_t>(idx)];
    if (cur.mask == 0) {
      auto r = reconstruct(labels, truck, idx);
      r.optimal = true;
      r.expansions = expansions;
      return r;
    }
    if (dominated(cur)) continue;
    settled[{cur.node, cur.mask}].emplace_back(cur.cost(), bucket(cur.battery));
    if (++expansions > limits.max_expansions) {
      SearchResult best;
      if (incumbent >= 0) best = reconstruct(labels, truck, incumbent);
      best.optimal = false;
      best.expansions = expansions;
      throw SearchLimitExceeded(std::move(best));
    }

    const auto rem = pending(truck, cur.mask);
    TruckView view;
    view.spec = &truck;
    view.node = cur.node;
    view.battery = cur.battery;
    view.remaining = rem;
    view.now = cur.cost();
    const auto set = build_action_set(inst, view);
    for (const auto& a : set.actions) {
      if (!a.feasible) continue;
      Label next = cur;
      next.parent = idx;
      next.action = a;
      if (a.kind == ActionKind::kCharge) {
        const auto r = integrate_charge(cur.battery, truck.battery_capacity, a.duration,
                                        inst.chargers[static_cast<std::size_t>(a.target)], cfg.charge_dt);
        next.battery = r.battery_after;
        next.charge += a.duration;
      } else {
        next.node = a.target;
        next.battery = cur.battery - limits.energy_factor * inst.energy(cur.node, a.target);
        if (next.battery < 0.0) continue;
        next.route += inst.tau(cur.node, a.target);
        if (a.kind == ActionKind::kNavigateDelivery) {
          const auto pos = std::find(truck.deliveries.begin(), truck.deliveries.end(), a.target) - truck.deliveries.begin();
          next.mask &= ~(1u << static_cast<unsigned>(pos));
          next.unload += unload;
        }
      }
      if (dominated(next)) continue;
      labels.push_back(next);
      const int li = static_cast<int>(labels.size()) - 1;
      if (next.mask == 0 &&
          (incumbent < 0 || next.cost() < labels[static_cast<std::size_t>(incumbent)].cost())) {
        incumbent = li;
      }
      open.emplace(next.cost(), seq++, li);
    }
  }
  SearchResult r;
  r.expansions = expansions;
  return r;
}

SearchResult optimal_search(const NetworkInstance& inst, const TruckSpec& truck, const SearchLimits& limits) {
  return optimal_search_from(inst, truck, truck.start_node, truck.initial_battery, truck.deliveries, limits);
}

// ---------------------------------------------------------------------------
// Heuristic

namespace {

int find_slot(const ActionSet& set, ActionKind kind, int target) {
  for (const auto& a : set.actions) {
    if (a.kind == kind && a.target == target) return a.index;
  }
  return -1;
}

}  // namespace

int heuristic_action(const WorldState& world) {
  const auto& inst = world.instance();
  const auto& cfg = inst.config;
  const int truck = *world.active_truck();
  const auto view = world.view(truck);
  const auto& set = world.action_set();
  if (view.remaining.empty()) return 0;

  const NodeId target = view.spec->mode == DeliveryMode::kSequential
                            ? view.remaining.front()
                            : tsp_order(inst.tau, view.node, view.remaining).front();

  // (1) head for the target when the leg has headroom.
  const int d_slot = find_slot(set, ActionKind::kNavigateDelivery, target);
  if (d_slot >= 0 && set.mask[static_cast<std::size_t>(d_slot)]) return d_slot;

  // (3) at a station, charge just enough for the target leg plus a reserve
  // to reach some charger afterwards.
  if (inst.station_at(view.node)) {
    double reserve = 0.0;
    if (!inst.chargers.empty()) {
      double min_e = std::numeric_limits<double>::infinity();
      for (const auto& c : inst.chargers) min_e = std::min(min_e, inst.energy(target, c.node));
      reserve = cfg.alpha * min_e;
    }
    const double need = cfg.alpha * inst.energy(view.node, target) + reserve + view.spec->battery_floor;
    int longest = -1;
    for (const auto& a : set.actions) {
      if (a.kind != ActionKind::kCharge || !a.feasible) continue;
      if (a.est_battery_after > need) return a.index;
      longest = a.index;
    }
    if (longest >= 0 && set.actions[static_cast<std::size_t>(longest)].est_battery_after > view.battery + 1e-9) {
      return longest;
    }
  }

  // (2) the feasible candidate charger with the smallest detour.
  for (int s : candidate_chargers(inst, view, cfg.k_chg)) {
    if (set.mask[static_cast<std::size_t>(s)]) return s;
  }

  // (4) anything feasible, else slot 0.
  const auto feasible = set.feasible_indices();
  return feasible.empty() ? 0 : feasible.front();
}

int HeuristicPolicy::act(const Observation&, const WorldState& world) { return heuristic_action(world); }

// ---------------------------------------------------------------------------
// Planner

SearchLimits PlannerPolicy::effective_limits(const NetworkInstance& inst) const {
  SearchLimits l = limits_;
  if (!inst.config.stochastic.deterministic) l.energy_factor = std::max(l.energy_factor, inst.config.alpha);
  return l;
}

SearchResult PlannerPolicy::search_or_best(const NetworkInstance& inst, const TruckSpec& spec, NodeId node,
                                           double battery, std::span<const NodeId> remaining,
                                           const SearchLimits& limits) {
  try {
    return optimal_search_from(inst, spec, node, battery, remaining, limits);
  } catch (const SearchLimitExceeded& e) {
    return e.best_so_far();
  }
}

void PlannerPolicy::begin_episode(const WorldState& world, std::uint64_t) {
  const auto& inst = world.instance();
  const auto limits = effective_limits(inst);
  plans_.assign(inst.trucks.size(), {});
  replans_ = 0;
  fallbacks_ = 0;
  for (std::size_t i = 0; i < inst.trucks.size(); ++i) {
    const auto& spec = inst.trucks[i];
    plans_[i].result = search_or_best(inst, spec, spec.start_node, spec.initial_battery, spec.deliveries, limits);
  }
}

bool PlannerPolicy::follow(Cached& c, const WorldState& world, int truck, int& action) const {
  if (!c.result.feasible || c.next >= c.result.steps.size()) return false;
  const auto& step = c.result.steps[c.next];
  const auto& t = world.trucks()[static_cast<std::size_t>(truck)];
  const auto& mask = world.action_set().mask;
  const int idx = step.action.index;
  if (t.node != step.node || t.remaining != step.remaining || t.battery < step.battery - 1e-9) return false;
  if (idx < 0 || idx >= static_cast<int>(mask.size()) || !mask[static_cast<std::size_t>(idx)]) return false;
  ++c.next;
  action = idx;
  return true;
}

int PlannerPolicy::act(const Observation&, const WorldState& world) {
  const int truck = *world.active_truck();
  if (plans_.size() != world.trucks().size()) begin_episode(world, 0);
  auto& c = plans_[static_cast<std::size_t>(truck)];
  int action = 0;
  if (follow(c, world, truck, action)) return action;

  const auto& inst = world.instance();
  const auto& t = world.trucks()[static_cast<std::size_t>(truck)];
  ++replans_;
  c.result = search_or_best(inst, *t.spec, t.node, t.battery, t.remaining, effective_limits(inst));
  c.next = 0;
  if (follow(c, world, truck, action)) return action;
  ++fallbacks_;
  return heuristic_action(world);
}

// ---------------------------------------------------------------------------
// Random

void RandomPolicy::begin_episode(const WorldState&, std::uint64_t seed) {
  RandomStreams streams(seed);
  gen_ = streams.stream(StreamId::kPolicy);
}

int RandomPolicy::act(const Observation& obs, const WorldState&) {
  const auto& mask = obs.graph.mask;
  if (allow_infeasible_) return static_cast<int>(uniform_index(gen_, mask.size()));
  std::vector<int> feasible;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) feasible.push_back(static_cast<int>(i));
  }
  if (feasible.empty()) return 0;
  return feasible[uniform_index(gen_, feasible.size())];
}

std::unique_ptr<Policy> make_builtin_policy(std::string_view name) {
  if (name == "heuristic") return std::make_unique<HeuristicPolicy>();
  if (name == "planner") return std::make_unique<PlannerPolicy>();
  if (name == "random") return std::make_unique<RandomPolicy>(false);
  if (name == "random-unmasked") return std::make_unique<RandomPolicy>(true);
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

}  // namespace etfrp
