#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "etfrp/environment.hpp"

namespace etfrp {

// ---------------------------------------------------------------------------
// Tours

// Open path cost start -> order[0] -> ... -> order[n-1].
double path_cost(const Matrix& tau, NodeId start, std::span<const NodeId> order);
// Nearest neighbour from `start` (ties by lower id), then asymmetric 2-opt
// with best-improvement segment reversals until none strictly improves.
std::vector<NodeId> tsp_order(const Matrix& tau, NodeId start, std::span<const NodeId> deliveries);

// ---------------------------------------------------------------------------
// Nominal single-truck search

struct SearchLimits {
  double battery_quantum = 1.0;  // kWh; 0 compares batteries exactly
  std::int64_t max_expansions = 2'000'000;
  // Planned consumption per leg is energy_factor * e. 1 plans on nominal
  // energy; alpha plans conservatively so realized batteries never fall
  // below the plan while xi <= alpha.
  double energy_factor = 1.0;
};

// Truck state before a planned action.
struct PlanStep {
  ActionDescriptor action;
  NodeId node = 0;
  double battery = 0.0;
  std::vector<NodeId> remaining;
};

struct SearchResult {
  bool feasible = false;
  bool optimal = false;
  std::vector<ActionDescriptor> plan;
  std::vector<PlanStep> steps;  // parallel to plan
  double nominal_cost = 0.0;    // hours: routing + charging + unloading
  std::int64_t expansions = 0;
};

class SearchLimitExceeded : public std::runtime_error {
 public:
  explicit SearchLimitExceeded(SearchResult best)
      : std::runtime_error("optimal_search: expansion limit reached"), best_(std::move(best)) {}
  // Best complete plan generated so far (feasible may be false), never optimal.
  const SearchResult& best_so_far() const { return best_; }

 private:
  SearchResult best_;
};

// Uniform-cost search over (node, pending set, battery) with Pareto pruning
// on (cost, battery). Successors are the feasible actions of
// build_action_set under nominal, queue-free dynamics.
SearchResult optimal_search(const NetworkInstance& inst, const TruckSpec& truck, const SearchLimits& limits = {});
SearchResult optimal_search_from(const NetworkInstance& inst, const TruckSpec& truck, NodeId node, double battery,
                                 std::span<const NodeId> remaining, const SearchLimits& limits = {});

// Unloading duration the planners assume.
double nominal_unloading(const StochasticParams& params);

// ---------------------------------------------------------------------------
// Policies

// Rule-based choice for the world's active truck.
int heuristic_action(const WorldState& world);

class HeuristicPolicy : public Policy {
 public:
  std::string name() const override { return "heuristic"; }
  int act(const Observation& obs, const WorldState& world) override;
};

// Follows a per-truck optimal_search plan, replanning when execution drifts
// from it and falling back to the heuristic when no plan exists.
class PlannerPolicy : public Policy {
 public:
  explicit PlannerPolicy(SearchLimits limits = {}) : limits_(limits) {}
  std::string name() const override { return "planner"; }
  void begin_episode(const WorldState& world, std::uint64_t seed) override;
  int act(const Observation& obs, const WorldState& world) override;

  int replans() const { return replans_; }
  int fallbacks() const { return fallbacks_; }
  const SearchResult& plan_for(int truck) const { return plans_[static_cast<std::size_t>(truck)].result; }

 private:
  struct Cached {
    SearchResult result;
    std::size_t next = 0;
  };
  SearchLimits effective_limits(const NetworkInstance& inst) const;
  bool follow(Cached& c, const WorldState& world, int truck, int& action) const;
  static SearchResult search_or_best(const NetworkInstance& inst, const TruckSpec& spec, NodeId node, double battery,
                                     std::span<const NodeId> remaining, const SearchLimits& limits);

  SearchLimits limits_;
  std::vector<Cached> plans_;
  int replans_ = 0;
  int fallbacks_ = 0;
};

// Uniform over feasible slots, or over every slot when allow_infeasible.
// Draws come from the policy substream of the episode seed, so they never
// perturb the simulator's own streams.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(bool allow_infeasible = false) : allow_infeasible_(allow_infeasible) {}
  std::string name() const override { return allow_infeasible_ ? "random-unmasked" : "random"; }
  void begin_episode(const WorldState& world, std::uint64_t seed) override;
  int act(const Observation& obs, const WorldState& world) override;

 private:
  bool allow_infeasible_;
  CounterStream gen_{0};
};

// "heuristic", "planner", "random", "random-unmasked". Throws
// std::invalid_argument for anything else.
std::unique_ptr<Policy> make_builtin_policy(std::string_view name);

}  // namespace etfrp
