#include "etfrp/engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "etfrp/errors.hpp"

namespace etfrp {

std::string_view to_string(TruckStatus s) {
  switch (s) {
    case TruckStatus::kActionPending: return "ActionPending";
    case TruckStatus::kRouting: return "Routing";
    case TruckStatus::kWaitingOnChargerQueue: return "WaitingOnChargerQueue";
    case TruckStatus::kCharging: return "Charging";
    case TruckStatus::kUnloading: return "Unloading";
    case TruckStatus::kTerminated: return "Terminated";
  }
  return "ActionPending";
}

std::string_view to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::kNone: return "none";
    case TerminationReason::kSuccess: return "success";
    case TerminationReason::kStranded: return "stranded";
    case TerminationReason::kInfeasibleAction: return "infeasible_action";
    case TerminationReason::kTimeout: return "timeout";
  }
  return "none";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kArrival: return "Arrival";
    case EventKind::kChargeSessionEnd: return "ChargeSessionEnd";
    case EventKind::kUnloadingEnd: return "UnloadingEnd";
    case EventKind::kAdmittedFromQueue: return "AdmittedFromQueue";
    case EventKind::kDecisionRequired: return "DecisionRequired";
  }
  return "DecisionRequired";
}

bool is_legal_transition(TruckStatus from, TruckStatus to) {
  using S = TruckStatus;
  if (from == S::kTerminated) return false;
  if (to == S::kTerminated) return true;
  switch (from) {
    case S::kActionPending:
      // Charging at a busy station queues the truck straight from a decision.
      return to == S::kRouting || to == S::kCharging || to == S::kWaitingOnChargerQueue;
    case S::kRouting:
      return to == S::kActionPending || to == S::kUnloading || to == S::kWaitingOnChargerQueue;
    case S::kWaitingOnChargerQueue: return to == S::kCharging;
    case S::kCharging: return to == S::kActionPending;
    case S::kUnloading: return to == S::kActionPending;
    case S::kTerminated: return false;
  }
  return false;
}

double compute_reward(double delta_t, int delivered, bool failed, const RewardParams& params) {
  return -params.lambda1 * delta_t + params.lambda2 * delivered + (failed ? params.lambda3 : 0.0);
}

WorldState::WorldState(const NetworkInstance& inst, std::uint64_t seed, EngineOptions options)
    : inst_(inst), seed_(seed), options_(std::move(options)), streams_(seed) {
  if (!options_.injected.empty()) streams_.inject(options_.injected);
  for (int s = 0; s < static_cast<int>(inst_.chargers.size()); ++s) {
    stations_.emplace_back(s, inst_.chargers[static_cast<std::size_t>(s)]);
  }
  trucks_.reserve(inst_.trucks.size());
  for (const auto& spec : inst_.trucks) {
    TruckRuntime t;
    t.spec = &spec;
    t.battery = spec.initial_battery;
    t.node = spec.start_node;
    t.remaining = spec.deliveries;
    trucks_.push_back(std::move(t));
  }
  for (int i = 0; i < static_cast<int>(trucks_.size()); ++i) schedule(EventKind::kDecisionRequired, i, 0.0);
  initial_reward_ = advance(nullptr);
  reward_total_ = initial_reward_;
}

TruckView WorldState::view(int truck) const {
  const auto& t = trucks_[static_cast<std::size_t>(truck)];
  TruckView v;
  v.spec = t.spec;
  v.node = t.node;
  v.battery = t.battery;
  v.remaining = t.remaining;
  v.now = now_;
  if (const auto s = inst_.station_at(t.node)) v.port_free_here = stations_[static_cast<std::size_t>(*s)].has_free_port();
  return v;
}

void WorldState::emit(TraceRecord record) {
  if (!options_.trace) {
    streams_.take_log();
    return;
  }
  record.random_draws = streams_.take_log();
  options_.trace->records.push_back(std::move(record));
}

void WorldState::schedule(EventKind kind, int truck, double time) {
  events_.push({time, next_seq_++, kind, truck});
}

void WorldState::transition(TruckRuntime& t, TruckStatus to) {
  if (!is_legal_transition(t.fsm, to)) {
    throw std::logic_error("illegal transition " + std::string(to_string(t.fsm)) + " -> " +
                           std::string(to_string(to)));
  }
  t.fsm = to;
}

double WorldState::terminate(int truck, TerminationReason reason) {
  auto& t = trucks_[static_cast<std::size_t>(truck)];
  const bool failed = reason != TerminationReason::kSuccess;
  const double r =
      compute_reward(now_ - t.segment_start, t.segment_deliveries, failed, inst_.config.reward);
  t.segment_start = now_;
  t.segment_deliveries = 0;
  transition(t, TruckStatus::kTerminated);
  t.reason = reason;
  t.terminated_at = now_;
  t.dest.reset();
  t.next_ready_estimate = now_;
  TraceRecord rec;
  rec.t = now_;
  rec.kind = "Terminated";
  rec.truck = truck;
  rec.detail = {{"reason", to_string(reason)}, {"battery", t.battery}};
  emit(std::move(rec));
  return r;
}

double WorldState::realize_decision(int truck) {
  auto& t = trucks_[static_cast<std::size_t>(truck)];
  if (t.remaining.empty()) return terminate(truck, TerminationReason::kSuccess);
  if (now_ > inst_.config.time_limit_h) return terminate(truck, TerminationReason::kTimeout);
  if (!build_action_set(inst_, view(truck)).any_feasible()) return terminate(truck, TerminationReason::kStranded);
  const double r = compute_reward(now_ - t.segment_start, t.segment_deliveries, false, inst_.config.reward);
  t.segment_start = now_;
  t.segment_deliveries = 0;
  t.next_ready_estimate = now_;
  return r;
}

double WorldState::advance(std::vector<EventLogEntry>* info) {
  double reward = 0.0;
  auto log = [&](const Event& ev) {
    if (info) info->push_back({ev.time, ev.kind, ev.truck});
    TraceRecord rec;
    rec.t = ev.time;
    rec.kind = std::string(to_string(ev.kind));
    rec.truck = ev.truck;
    emit(std::move(rec));
    if (options_.on_event) options_.on_event(*this, ev);
  };
  auto handle = [&](const Event& ev) {
    if (ev.time < now_) throw std::logic_error("event queue went back in time");
    now_ = ev.time;
    if (ev.kind != EventKind::kDecisionRequired) {
      reward += process(ev);
      log(ev);
      return false;
    }
    log(ev);
    return true;
  };

  while (!events_.empty()) {
    Event first = events_.top();
    events_.pop();
    if (!handle(first)) continue;

    // Collect every truck that becomes ready at this instant.
    std::vector<Event> ready{first};
    while (!events_.empty() && events_.top().time == now_) {
      Event ev = events_.top();
      events_.pop();
      if (handle(ev)) ready.push_back(ev);
    }
    std::vector<Event> live;
    for (const auto& ev : ready) {
      auto& t = trucks_[static_cast<std::size_t>(ev.truck)];
      if (t.fsm != TruckStatus::kActionPending) continue;
      reward += realize_decision(ev.truck);
      if (t.fsm == TruckStatus::kActionPending) live.push_back(ev);
    }
    if (live.empty()) continue;

    std::size_t pick = 0;
    if (live.size() > 1) {
      const auto n = static_cast<std::uint64_t>(live.size());
      pick = static_cast<std::size_t>(
          streams_.draw(StreamId::kTiebreak, [&](CounterStream& g) { return static_cast<double>(uniform_index(g, n)); }));
      if (pick >= live.size()) throw ReplayExhausted("tiebreak draw out of range");
    }
    for (std::size_t k = 0; k < live.size(); ++k) {
      if (k != pick) events_.push(live[k]);
    }
    active_ = live[pick].truck;
    actions_ = build_action_set(inst_, view(*active_));
    TraceRecord rec;
    rec.t = now_;
    rec.kind = "Activate";
    rec.truck = *active_;
    emit(std::move(rec));
    return reward;
  }
  done_ = true;
  active_.reset();
  actions_ = {};
  return reward;
}

double WorldState::process(const Event& ev) {
  double reward = 0.0;
  auto& t = trucks_[static_cast<std::size_t>(ev.truck)];
  const auto& cfg = inst_.config;
  switch (ev.kind) {
    case EventKind::kArrival: {
      t.node = *t.dest;
      t.dest.reset();
      t.counters.routing_h += t.leg_tau;
      if (t.leg_energy > t.battery) {
        // Ran dry somewhere along the leg.
        t.counters.energy_consumed += t.battery;
        t.battery = 0.0;
        t.stranded_mid_edge = true;
        reward += terminate(ev.truck, TerminationReason::kStranded);
        break;
      }
      t.battery -= t.leg_energy;
      t.counters.energy_consumed += t.leg_energy;
      if (t.leg_to_delivery) {
        transition(t, TruckStatus::kUnloading);
        t.unload_start = now_;
        const double d = sample_unloading(cfg.stochastic, streams_);
        t.unload_duration = d;
        t.next_ready_estimate = now_ + d;
        schedule(EventKind::kUnloadingEnd, ev.truck, now_ + d);
      } else {
        transition(t, TruckStatus::kActionPending);
        schedule(EventKind::kDecisionRequired, ev.truck, now_);
      }
      break;
    }
    case EventKind::kUnloadingEnd: {
      t.counters.unloading_h += t.unload_duration;
      const auto it = std::find(t.remaining.begin(), t.remaining.end(), t.node);
      if (it != t.remaining.end()) {
        t.remaining.erase(it);
        ++t.counters.deliveries;
        ++t.segment_deliveries;
      }
      transition(t, TruckStatus::kActionPending);
      schedule(EventKind::kDecisionRequired, ev.truck, now_);
      break;
    }
    case EventKind::kChargeSessionEnd: {
      t.battery = t.charge_result.battery_after;
      t.counters.energy_added += t.charge_result.energy_added;
      t.counters.charging_h += t.charge_duration;
      TraceRecord rec;
      rec.t = now_;
      rec.kind = "ChargeSession";
      rec.truck = ev.truck;
      rec.detail = {{"station", t.station},          {"truck", ev.truck},
                    {"arrive", t.charge_arrival},    {"start", t.charge_start},
                    {"end", now_},                   {"energy_added", t.charge_result.energy_added},
                    {"waited", t.charge_start - t.charge_arrival}};
      emit(std::move(rec));
      const int station = t.station;
      t.station = -1;
      transition(t, TruckStatus::kActionPending);
      if (const auto adm = stations_[static_cast<std::size_t>(station)].release(ev.truck, now_)) {
        schedule(EventKind::kAdmittedFromQueue, adm->truck, now_);
      }
      schedule(EventKind::kDecisionRequired, ev.truck, now_);
      break;
    }
    case EventKind::kAdmittedFromQueue: {
      transition(t, TruckStatus::kCharging);
      t.charge_start = now_;
      t.counters.waiting_h += now_ - t.charge_arrival;
      ++t.counters.sessions;
      t.charge_result = integrate_charge(t.battery, t.spec->battery_capacity, t.charge_duration,
                                         inst_.chargers[static_cast<std::size_t>(t.station)], cfg.charge_dt);
      t.next_ready_estimate = now_ + t.charge_duration;
      schedule(EventKind::kChargeSessionEnd, ev.truck, now_ + t.charge_duration);
      break;
    }
    case EventKind::kDecisionRequired:
      break;
  }
  for (const auto& st : stations_) {
    if (static_cast<int>(st.occupants().size()) > st.spec().ports) {
      throw std::logic_error("station " + std::to_string(st.id()) + " over capacity");
    }
  }
  return reward;
}

void WorldState::apply(int truck, const ActionDescriptor& a) {
  auto& t = trucks_[static_cast<std::size_t>(truck)];
  const auto& cfg = inst_.config;
  t.last_decision_time = now_;
  if (a.kind == ActionKind::kCharge) {
    t.station = a.target;
    t.charge_duration = a.duration;
    t.charge_arrival = now_;
    auto& st = stations_[static_cast<std::size_t>(a.target)];
    const auto outcome = st.arrive(truck, now_, a.duration);
    if (outcome.started) {
      transition(t, TruckStatus::kCharging);
      t.charge_start = now_;
      ++t.counters.sessions;
      t.charge_result = integrate_charge(t.battery, t.spec->battery_capacity, a.duration,
                                         inst_.chargers[static_cast<std::size_t>(a.target)], cfg.charge_dt);
      t.next_ready_estimate = now_ + a.duration;
      schedule(EventKind::kChargeSessionEnd, truck, now_ + a.duration);
    } else {
      transition(t, TruckStatus::kWaitingOnChargerQueue);
      t.next_ready_estimate = now_ + a.duration;
    }
    return;
  }
  const double tau = inst_.tau(t.node, a.target);
  const double e = inst_.energy(t.node, a.target);
  const double realized = sample_travel_time(tau, now_, cfg.stochastic, streams_);
  const double xi = sample_energy_coeff(realized, tau, cfg.stochastic, streams_);
  transition(t, TruckStatus::kRouting);
  t.dest = a.target;
  t.leg_to_delivery = a.kind == ActionKind::kNavigateDelivery;
  t.leg_depart = now_;
  t.leg_tau = realized;
  t.leg_energy = xi * e;
  t.next_ready_estimate = now_ + tau;
  schedule(EventKind::kArrival, truck, now_ + realized);
}

StepResult WorldState::step(int action_index) {
  if (done_) throw std::logic_error("step on a finished episode");
  if (action_index < 0 || action_index >= actions_.fixed_size()) {
    throw ProtocolError("action index " + std::to_string(action_index) + " out of range [0, " +
                        std::to_string(actions_.fixed_size()) + ")");
  }
  const int truck = *active_;
  const ActionDescriptor action = actions_.actions[static_cast<std::size_t>(action_index)];
  ++steps_;
  active_.reset();
  actions_ = {};

  StepResult result;
  if (action.feasible) {
    apply(truck, action);
  } else {
    trucks_[static_cast<std::size_t>(truck)].last_decision_time = now_;
    result.reward += terminate(truck, TerminationReason::kInfeasibleAction);
  }
  result.reward += advance(&result.info);
  result.done = done_;
  result.active_truck = active_;
  if (active_) result.elapsed = now_ - trucks_[static_cast<std::size_t>(*active_)].last_decision_time;
  reward_total_ += result.reward;
  return result;
}

EpisodeMetrics WorldState::metrics() const {
  EpisodeMetrics m;
  m.reward_total = reward_total_;
  m.success = !trucks_.empty();
  double soc_sum = 0.0;
  for (const auto& t : trucks_) {
    const auto& c = t.counters;
    m.deliveries_completed += c.deliveries;
    m.charging_sessions += c.sessions;
    m.charging_time_h += c.charging_h;
    m.waiting_time_h += c.waiting_h;
    m.routing_time_h += c.routing_h;
    m.unloading_time_h += c.unloading_h;
    soc_sum += t.battery / t.spec->battery_capacity;
    if (t.reason == TerminationReason::kSuccess) ++m.trucks_succeeded;
    else m.success = false;
    if (t.reason == TerminationReason::kStranded) ++m.strandings;
    if (t.stranded_mid_edge) ++m.mid_edge_strandings;
    if (t.reason == TerminationReason::kInfeasibleAction) ++m.infeasible_actions;
    if (t.reason == TerminationReason::kTimeout) ++m.timeouts;
  }
  m.total_time_h = m.routing_time_h + m.charging_time_h + m.waiting_time_h + m.unloading_time_h;
  m.avg_finish_soc = trucks_.empty() ? 0.0 : soc_sum / static_cast<double>(trucks_.size());
  return m;
}

}  // namespace etfrp
