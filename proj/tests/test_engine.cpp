#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <set>

#include "etfrp/engine.hpp"
#include "etfrp/environment.hpp"
#include "etfrp/errors.hpp"
#include "etfrp/planners.hpp"
#include "support.hpp"

using namespace etfrp;
using namespace etfrp::test;

namespace {

using Chooser = std::function<int(const WorldState&)>;

int first_feasible(const WorldState& w) {
  const auto f = w.action_set().feasible_indices();
  return f.empty() ? 0 : f.front();
}

// Drives a world to completion; returns the summed step rewards.
double drive(WorldState& w, const Chooser& choose) {
  double total = w.initial_reward();
  while (!w.done()) total += w.step(choose(w)).reward;
  return total;
}

NetworkInstance t1_fleet(int trucks, NodeId start, double battery) {
  auto inst = t1();
  inst.trucks[0].start_node = start;
  inst.trucks[0].initial_battery = battery;
  for (int i = 1; i < trucks; ++i) {
    auto t = inst.trucks[0];
    t.id = i;
    inst.trucks.push_back(t);
  }
  return inst;
}

}  // namespace

TEST(Reward, Formula) {
  const RewardParams p;
  EXPECT_EQ(compute_reward(2.0, 1, false, p), 498.0);
  EXPECT_EQ(compute_reward(0.0, 0, false, p), 0.0);
  EXPECT_EQ(compute_reward(3.0, 0, true, p), -1003.0);
}

TEST(Fsm, TransitionTable) {
  using S = TruckStatus;
  EXPECT_TRUE(is_legal_transition(S::kActionPending, S::kRouting));
  EXPECT_TRUE(is_legal_transition(S::kActionPending, S::kCharging));
  EXPECT_TRUE(is_legal_transition(S::kActionPending, S::kWaitingOnChargerQueue));
  EXPECT_TRUE(is_legal_transition(S::kRouting, S::kActionPending));
  EXPECT_TRUE(is_legal_transition(S::kRouting, S::kUnloading));
  EXPECT_TRUE(is_legal_transition(S::kWaitingOnChargerQueue, S::kCharging));
  EXPECT_TRUE(is_legal_transition(S::kCharging, S::kActionPending));
  EXPECT_TRUE(is_legal_transition(S::kUnloading, S::kActionPending));
  for (int s = 0; s < kTruckStatusCount; ++s) {
    if (static_cast<S>(s) != S::kTerminated) EXPECT_TRUE(is_legal_transition(static_cast<S>(s), S::kTerminated));
  }
  EXPECT_FALSE(is_legal_transition(S::kRouting, S::kCharging));
  EXPECT_FALSE(is_legal_transition(S::kCharging, S::kRouting));
  EXPECT_FALSE(is_legal_transition(S::kUnloading, S::kRouting));
  EXPECT_FALSE(is_legal_transition(S::kWaitingOnChargerQueue, S::kActionPending));
  EXPECT_FALSE(is_legal_transition(S::kTerminated, S::kActionPending));
}

TEST(Reset, T1InitialConditions) {
  const auto inst = t1();
  WorldState w(inst, 1);
  EXPECT_EQ(w.active_truck(), 0);
  EXPECT_FALSE(w.done());
  EXPECT_EQ(w.now(), 0.0);
  const auto& t = w.trucks()[0];
  EXPECT_EQ(t.battery, 400.0);
  EXPECT_EQ(t.remaining, (std::vector<NodeId>{kD1, kD2}));
  EXPECT_EQ(t.fsm, TruckStatus::kActionPending);
  EXPECT_EQ(w.action_set().feasible_indices(), (std::vector<int>{kNavC1, kNavD1}));
}

TEST(Reset, TiebreakIsSeeded) {
  const auto inst = t1_fleet(2, kA, 400);
  std::map<int, int> seen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    WorldState a(inst, seed), b(inst, seed);
    EXPECT_EQ(a.active_truck(), b.active_truck());
    ++seen[*a.active_truck()];
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(Reset, OneActiveTruckOthersPending) {
  const auto inst = small_fleet(10, 2, 3, 5, false, 40);
  WorldState w(inst, 3);
  ASSERT_TRUE(w.active_truck().has_value());
  int pending = 0;
  for (const auto& t : w.trucks()) pending += t.fsm == TruckStatus::kActionPending;
  EXPECT_EQ(pending, 10);  // the active one is pending too, awaiting its action
  // Every other truck gets its turn at t = 0 before the clock moves.
  std::set<int> actors{*w.active_truck()};
  while (w.now() == 0.0 && !w.done() && actors.size() < 10) {
    w.step(first_feasible(w));
    if (w.now() == 0.0 && w.active_truck()) actors.insert(*w.active_truck());
  }
  EXPECT_EQ(actors.size(), 10u);
}

TEST(Step, InfeasibleActionTerminates) {
  const auto inst = t1_fleet(1, kA, 40);
  WorldState w(inst, 1);
  const auto r = w.step(kNavD2);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.reward, -1000.0);
  EXPECT_FALSE(r.active_truck.has_value());
  EXPECT_EQ(w.trucks()[0].reason, TerminationReason::kInfeasibleAction);
  EXPECT_EQ(w.trucks()[0].fsm, TruckStatus::kTerminated);
  EXPECT_EQ(w.metrics().infeasible_actions, 1);
  EXPECT_THROW(w.step(0), std::logic_error);
}

TEST(Step, OutOfRangeIndexIsProtocolError) {
  const auto inst = t1();
  WorldState w(inst, 1);
  EXPECT_THROW(w.step(15), ProtocolError);
  EXPECT_THROW(w.step(-1), ProtocolError);
  EXPECT_FALSE(w.done());
  EXPECT_NO_THROW(w.step(kNavD1));
}

TEST(Step, MidEdgeStrandingWhenAlphaBelowCeiling) {
  auto inst = t1_fleet(1, kA, 40.5);
  inst.config.stochastic.deterministic = false;
  inst.config.alpha = 1.0;
  inst.config.allow_unsafe_alpha = true;
  int strandings = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    WorldState w(inst, seed);
    const auto r = w.step(kNavD1);
    const auto& t = w.trucks()[0];
    if (t.reason == TerminationReason::kStranded && t.stranded_mid_edge) {
      ++strandings;
      EXPECT_TRUE(r.done);
      EXPECT_LT(r.reward, -1000.0);  // lambda3 plus the elapsed hours
      EXPECT_EQ(t.battery, 0.0);
      EXPECT_EQ(w.metrics().mid_edge_strandings, 1);
    }
  }
  EXPECT_GT(strandings, 0);
}

TEST(Step, TimeoutFailsAtNextDecision) {
  auto inst = t1();
  inst.config.time_limit_h = 1.1;
  WorldState w(inst, 1);
  const double total = drive(w, [](const WorldState&) { return kNavD1; });
  EXPECT_EQ(w.trucks()[0].reason, TerminationReason::kTimeout);
  EXPECT_DOUBLE_EQ(total, -1.2 + 500.0 - 1000.0);
  EXPECT_DOUBLE_EQ(w.metrics().reward_total, total);
  EXPECT_EQ(w.metrics().timeouts, 1);
}

TEST(Episode, T1NominalTrajectory) {
  const auto inst = t1();
  WorldState w(inst, 1);
  auto r = w.step(kNavD1);
  EXPECT_EQ(w.now(), 1.2);
  EXPECT_EQ(r.active_truck, 0);
  EXPECT_DOUBLE_EQ(r.reward, 500.0 - 1.2);
  EXPECT_DOUBLE_EQ(r.elapsed, 1.2);
  EXPECT_EQ(w.trucks()[0].battery, 360.0);
  r = w.step(kNavD2);
  EXPECT_TRUE(r.done);
  EXPECT_DOUBLE_EQ(r.reward, 500.0 - 1.2);
  const auto m = w.metrics();
  EXPECT_TRUE(m.success);
  EXPECT_EQ(m.deliveries_completed, 2);
  EXPECT_EQ(m.total_time_h, 2.4);
  EXPECT_EQ(m.routing_time_h, 2.0);
  EXPECT_EQ(m.unloading_time_h, 0.4);
  EXPECT_EQ(m.waiting_time_h, 0.0);
  EXPECT_DOUBLE_EQ(m.avg_finish_soc, 0.8);
  EXPECT_EQ(m.reward_total, 1000.0 - 2.4);
}

TEST(Episode, HeuristicOnT1) {
  const auto inst = t1();
  HeuristicPolicy h;
  const auto res = run_episode(inst, h, 1);
  EXPECT_TRUE(res.metrics.success);
  EXPECT_EQ(res.metrics.deliveries_completed, 2);
  EXPECT_EQ(res.metrics.waiting_time_h, 0.0);
  EXPECT_EQ(res.metrics.total_time_h, 2.4);
}

TEST(Episode, AlwaysZeroEventuallyFails) {
  const auto inst = t1();
  WorldState w(inst, 1);
  drive(w, [](const WorldState&) { return 0; });
  EXPECT_FALSE(w.metrics().success);
  EXPECT_EQ(w.trucks()[0].reason, TerminationReason::kInfeasibleAction);
}

TEST(Episode, QueueIsFcfsAndWaitingIsAccounted) {
  const auto inst = t1_fleet(2, kC1, 200);
  WorldState w(inst, 4);
  const int first = *w.active_truck();
  w.step(kCharge1h + 1);  // 2 h
  ASSERT_EQ(w.now(), 0.0);
  const int second = *w.active_truck();
  ASSERT_NE(first, second);
  w.step(kCharge1h);  // 1 h, queued behind the first
  EXPECT_EQ(w.trucks()[second].fsm, TruckStatus::kCharging);
  EXPECT_EQ(w.now(), 2.0);
  const auto& t2 = w.trucks()[second];
  EXPECT_EQ(t2.counters.waiting_h, 2.0);
  drive(w, [](const WorldState& s) { return s.action_set().mask[kNavD1] ? kNavD1 : first_feasible(s); });
  const auto m = w.metrics();
  EXPECT_EQ(m.waiting_time_h, 2.0);
  EXPECT_EQ(m.charging_sessions, 2);
  EXPECT_EQ(m.charging_time_h, 3.0);
}

TEST(Episode, TraceIsByteIdenticalAcrossRuns) {
  const auto inst = small_fleet(3, 3, 2, 21);
  for (const char* name : {"heuristic", "random"}) {
    auto p = make_builtin_policy(name);
    const auto a = run_episode(inst, *p, 77).trace.to_jsonl();
    const auto b = run_episode(inst, *p, 77).trace.to_jsonl();
    EXPECT_EQ(a, b) << name;
    EXPECT_NE(a, run_episode(inst, *p, 78).trace.to_jsonl()) << name;
  }
}

// Invariants observed from outside the engine over seeded random play.
TEST(EngineProperties, InvariantsHoldOverSeededEpisodes) {
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto inst = small_fleet(1 + static_cast<int>(s % 4), 1 + static_cast<int>(s % 3), 1 + static_cast<int>(s % 2), s);
    std::vector<TruckStatus> last(inst.trucks.size(), TruckStatus::kActionPending);
    double clock = 0.0;
    bool ok = true;
    std::string why;
    auto check = [&](const WorldState& w) {
      if (w.now() < clock) ok = false, why = "clock went backwards";
      clock = w.now();
      for (std::size_t i = 0; i < w.trucks().size(); ++i) {
        const auto& t = w.trucks()[i];
        // Actions are applied between events, so a pending truck may show up
        // one hop further along.
        bool legal = is_legal_transition(last[i], t.fsm);
        if (last[i] == TruckStatus::kActionPending) {
          for (auto mid : {TruckStatus::kRouting, TruckStatus::kCharging, TruckStatus::kWaitingOnChargerQueue})
            legal = legal || is_legal_transition(mid, t.fsm);
        }
        if (t.fsm != last[i] && !legal) {
          ok = false;
          why = std::string(to_string(last[i])) + "->" + std::string(to_string(t.fsm));
        }
        last[i] = t.fsm;
        if (t.battery < 0.0 || t.battery > t.spec->battery_capacity) ok = false, why = "battery out of bounds";
      }
      for (const auto& st : w.stations()) {
        if (static_cast<int>(st.occupants().size()) > st.spec().ports) ok = false, why = "port overflow";
      }
    };
    EngineOptions opts;
    opts.on_event = [&](const WorldState& w, const Event&) { check(w); };
    WorldState w(inst, s, opts);
    RandomStreams pick(s + 1000);
    double rewards = w.initial_reward();
    while (!w.done()) {
      const auto f = w.action_set().feasible_indices();
      const int a = f.empty() ? 0 : f[uniform_index(pick.stream(StreamId::kPolicy), f.size())];
      rewards += w.step(a).reward;
      check(w);
    }
    ASSERT_TRUE(ok) << "seed " << s << ": " << why;

    const auto m = w.metrics();
    EXPECT_NEAR(m.reward_total, rewards, 1e-9);
    EXPECT_NEAR(m.total_time_h, m.routing_time_h + m.charging_time_h + m.waiting_time_h + m.unloading_time_h, 1e-9);
    TruckCounters sum;
    int k_total = 0;
    for (const auto& t : w.trucks()) {
      EXPECT_EQ(t.fsm, TruckStatus::kTerminated);
      EXPECT_NEAR(t.battery, t.spec->initial_battery + t.counters.energy_added - t.counters.energy_consumed, 1e-9)
          << "seed " << s;
      sum.routing_h += t.counters.routing_h;
      sum.charging_h += t.counters.charging_h;
      sum.waiting_h += t.counters.waiting_h;
      sum.unloading_h += t.counters.unloading_h;
      k_total += static_cast<int>(t.spec->deliveries.size());
    }
    EXPECT_NEAR(m.routing_time_h, sum.routing_h, 1e-9);
    EXPECT_NEAR(m.charging_time_h, sum.charging_h, 1e-9);
    EXPECT_NEAR(m.waiting_time_h, sum.waiting_h, 1e-9);
    EXPECT_NEAR(m.unloading_time_h, sum.unloading_h, 1e-9);
    if (m.success) EXPECT_EQ(m.deliveries_completed, k_total);
  }
}
