#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string_view>
#include <vector>

#include "etfrp/actionspace.hpp"
#include "etfrp/charging.hpp"
#include "etfrp/netmodel.hpp"
#include "etfrp/stochastic.hpp"
#include "etfrp/trace.hpp"

namespace etfrp {

enum class TruckStatus { kActionPending, kRouting, kWaitingOnChargerQueue, kCharging, kUnloading, kTerminated };
inline constexpr int kTruckStatusCount = 6;
enum class TerminationReason { kNone, kSuccess, kStranded, kInfeasibleAction, kTimeout };
enum class EventKind { kArrival, kChargeSessionEnd, kUnloadingEnd, kAdmittedFromQueue, kDecisionRequired };

std::string_view to_string(TruckStatus s);
std::string_view to_string(TerminationReason r);
std::string_view to_string(EventKind k);

// Edges of the truck state machine. Terminated is reachable from anywhere.
bool is_legal_transition(TruckStatus from, TruckStatus to);

struct TruckCounters {
  double routing_h = 0.0;
  double charging_h = 0.0;
  double waiting_h = 0.0;
  double unloading_h = 0.0;
  int sessions = 0;
  int deliveries = 0;
  double energy_added = 0.0;     // kWh
  double energy_consumed = 0.0;  // kWh, realized
};

struct TruckRuntime {
  const TruckSpec* spec = nullptr;
  TruckStatus fsm = TruckStatus::kActionPending;
  TerminationReason reason = TerminationReason::kNone;
  double battery = 0.0;
  NodeId node = 0;  // current node, or the node last departed while routing
  std::optional<NodeId> dest;
  std::vector<NodeId> remaining;  // assignment order
  double last_decision_time = 0.0;
  double next_ready_estimate = 0.0;
  double terminated_at = 0.0;
  bool stranded_mid_edge = false;
  TruckCounters counters;

  // Activity in progress.
  bool leg_to_delivery = false;
  double leg_depart = 0.0;
  double leg_tau = 0.0;     // realized
  double leg_energy = 0.0;  // realized
  int station = -1;
  double charge_duration = 0.0;
  double charge_arrival = 0.0;
  double charge_start = 0.0;
  ChargeResult charge_result;
  double unload_start = 0.0;
  double unload_duration = 0.0;

  // Reward bookkeeping since the segment opened.
  double segment_start = 0.0;
  int segment_deliveries = 0;
};

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kDecisionRequired;
  int truck = 0;
};

struct EventLogEntry {
  double time = 0.0;
  EventKind kind = EventKind::kDecisionRequired;
  int truck = 0;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  std::optional<int> active_truck;
  double elapsed = 0.0;  // hours since the next active truck's previous decision
  std::vector<EventLogEntry> info;
};

struct EpisodeMetrics {
  double reward_total = 0.0;
  bool success = false;
  int deliveries_completed = 0;
  int charging_sessions = 0;
  double charging_time_h = 0.0;
  double waiting_time_h = 0.0;
  double routing_time_h = 0.0;
  double unloading_time_h = 0.0;
  double total_time_h = 0.0;
  double avg_finish_soc = 0.0;
  double wall_clock_s = 0.0;
  int trucks_succeeded = 0;
  int strandings = 0;  // any stranding, including no feasible action at a decision
  int mid_edge_strandings = 0;
  int infeasible_actions = 0;
  int timeouts = 0;
};

// -lambda1 * delta_t + lambda2 * delivered + lambda3 * [failed]
double compute_reward(double delta_t, int delivered, bool failed, const RewardParams& params);

struct EngineOptions {
  Trace* trace = nullptr;              // records appended when set
  std::vector<DrawRecord> injected;    // replay mode when non-empty
  // Called after every processed event; used by property tests.
  std::function<void(const class WorldState&, const Event&)> on_event;
};

// One episode of the event-driven simulation. Constructing it performs the
// reset: every truck becomes ActionPending at t = 0 and the first active
// truck is selected.
class WorldState {
 public:
  WorldState(const NetworkInstance& inst, std::uint64_t seed, EngineOptions options = {});
  WorldState(const WorldState&) = delete;
  WorldState& operator=(const WorldState&) = delete;

  // Applies `action_index` (slot of action_set()) for the active truck.
  // Throws ProtocolError for an out-of-range index and std::logic_error
  // once the episode is done.
  StepResult step(int action_index);
  StepResult step(const ActionDescriptor& action) { return step(action.index); }

  const NetworkInstance& instance() const { return inst_; }
  double now() const { return now_; }
  bool done() const { return done_; }
  std::optional<int> active_truck() const { return active_; }
  // Action set issued to the active truck; empty when done.
  const ActionSet& action_set() const { return actions_; }
  // Reward realized during reset (trucks failing at t = 0).
  double initial_reward() const { return initial_reward_; }
  double initial_elapsed() const { return 0.0; }
  int step_count() const { return steps_; }

  const std::vector<TruckRuntime>& trucks() const { return trucks_; }
  const std::vector<StationState>& stations() const { return stations_; }
  TruckView view(int truck) const;

  RandomStreams& streams() { return streams_; }
  std::uint64_t seed() const { return seed_; }
  Trace* trace() const { return options_.trace; }
  // Appends a record carrying every draw taken since the previous record.
  void emit(TraceRecord record);

  EpisodeMetrics metrics() const;

 private:
  using EventKey = std::pair<double, std::uint64_t>;
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return EventKey{a.time, a.seq} > EventKey{b.time, b.seq};
    }
  };

  void schedule(EventKind kind, int truck, double time);
  void transition(TruckRuntime& t, TruckStatus to);
  // Processes events until a truck is ready to act or everything is done.
  // Returns the reward realized on the way.
  double advance(std::vector<EventLogEntry>* info);
  // Returns the reward realized by the event (a stranding).
  double process(const Event& ev);
  // Opens a new decision segment for the truck and returns the reward of the
  // one that closed. Terminates the truck when it is finished, past the time
  // limit, or stranded.
  double realize_decision(int truck);
  double terminate(int truck, TerminationReason reason);
  void apply(int truck, const ActionDescriptor& action);

  const NetworkInstance& inst_;
  std::uint64_t seed_;
  EngineOptions options_;
  RandomStreams streams_;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
  bool done_ = false;
  std::optional<int> active_;
  ActionSet actions_;
  std::vector<TruckRuntime> trucks_;
  std::vector<StationState> stations_;
  double initial_reward_ = 0.0;
  double reward_total_ = 0.0;
  int steps_ = 0;
};

}  // namespace etfrp
