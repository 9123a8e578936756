// Acceptance run: one PASS/FAIL line per criterion, with its time budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "etfrp/bench.hpp"
#include "etfrp/charging.hpp"
#include "etfrp/envserver.hpp"
#include "etfrp/planners.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace etfrp;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

double fine_reference(double b, double cap, double hours, double eta, double p_max, double p_min) {
  const double dt = 1e-4;
  const long steps = std::lround(hours / dt);
  for (long i = 0; i < steps; ++i) {
    const double s = b / cap;
    double p;
    if (s <= 0.10) p = p_max * (0.6 + 3.0 * s);
    else if (s <= 0.50) p = p_max * (0.9 + 0.25 * (s - 0.10));
    else if (s <= 0.80) p = p_max;
    else p = std::max(p_min, p_max * (1.0 - 0.6 * std::pow((s - 0.8) / 0.2, 1.5)));
    b = std::min(cap, b + eta * p * dt);
  }
  return b;
}

Outcome cccv_profile() {
  if (cccv_power(0.0, 50, 5) != 30.0) return fail("P(0)");
  if (cccv_power(0.30, 50, 5) != 47.5) return fail("P(0.30)");
  if (cccv_power(0.65, 50, 5) != 50.0) return fail("P(0.65)");
  if (cccv_power(1.0, 50, 5) != 20.0) return fail("P(1.0)");
  for (double s : {0.10, 0.50, 0.80}) {
    const double l = cccv_power(std::nextafter(s, 0.0), 50, 5);
    const double r = cccv_power(std::nextafter(s, 1.0), 50, 5);
    if (std::abs(l - r) > 1e-9) return fail("discontinuity at " + std::to_string(s));
  }
  return {true, "4 point values exact, continuous at 0.10/0.50/0.80"};
}

Outcome charging_integration() {
  const double constant = integrate_charge(200, 400, 1.0, 0.85, 50, 5, 0.01).battery_after;
  if (std::abs(constant - 242.5) > 0.5) return fail("constant region " + std::to_string(constant));
  const double taper = integrate_charge(320, 400, 2.0, 0.85, 50, 5, 0.01).battery_after;
  const double ref = fine_reference(320, 400, 2.0, 0.85, 50, 5);
  if (std::abs(taper - ref) > 0.2) return fail("taper " + std::to_string(taper) + " vs " + std::to_string(ref));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double cap = 50 + 450 * u(rng);
    const auto r = integrate_charge(cap * u(rng), cap, 12 * u(rng), 0.5 + 0.5 * u(rng), 20 + 130 * u(rng), 5, 0.01);
    if (r.battery_after > cap) return fail("capacity exceeded");
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "constant %.4f, taper err %.2e, 1e4 sessions capped", constant, std::abs(taper - ref));
  return {true, buf};
}

// 200 multi-truck episodes on contended stations, checked at every event.
Outcome queue_invariants() {
  long events = 0, admissions = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    GeneratorParams p;
    p.n_nodes = 12;
    p.n_chargers = 1 + static_cast<int>(s % 2);
    p.n_trucks = 4 + static_cast<int>(s % 4);
    p.stops_per_truck = 2;
    p.port_min = p.port_max = 1;
    p.initial_soc = 0.4;
    const auto inst = generate_instance(p, s);
    std::string err;
    std::vector<std::vector<int>> arrivals(inst.chargers.size());  // queue join order
    std::vector<std::vector<int>> admitted(inst.chargers.size());
    EngineOptions opts;
    opts.on_event = [&](const WorldState& w, const Event&) {
      ++events;
      for (const auto& st : w.stations()) {
        if (static_cast<int>(st.occupants().size()) > st.spec().ports) err = "port overflow";
        if (!st.queue().empty() && static_cast<int>(st.occupants().size()) < st.spec().ports) err = "idle port with queue";
      }
    };
    Trace trace;
    opts.trace = &trace;
    WorldState w(inst, s, opts);
    RandomStreams pick(s + 7);
    while (!w.done()) {
      // Prefer charging to create contention.
      const auto f = w.action_set().feasible_indices();
      int a = f.empty() ? 0 : f[uniform_index(pick.stream(StreamId::kPolicy), f.size())];
      for (int i : f)
        if (w.action_set().actions[static_cast<std::size_t>(i)].kind == ActionKind::kCharge &&
            w.trucks()[static_cast<std::size_t>(*w.active_truck())].battery < 300)
          a = i;
      w.step(a);
    }
    if (!err.empty()) return fail("seed " + std::to_string(s) + ": " + err);

    double waited = 0.0;
    std::vector<std::vector<std::pair<double, double>>> sessions(inst.chargers.size());
    for (const auto& r : trace.records) {
      if (r.kind != "ChargeSession") continue;
      const double arrive = r.detail["arrive"], start = r.detail["start"];
      waited += start - arrive;
      sessions[r.detail["station"].get<std::size_t>()].push_back({arrive, start});
      ++admissions;
    }
    // FCFS: ordering by arrival never inverts admission order.
    for (auto& list : sessions) {
      for (std::size_t i = 0; i < list.size(); ++i)
        for (std::size_t j = 0; j < list.size(); ++j)
          if (list[i].first < list[j].first && list[i].second > list[j].second)
            return fail("seed " + std::to_string(s) + ": FCFS violated");
    }
    const double reported = w.metrics().waiting_time_h;
    if (std::abs(waited - reported) > 1e-9) {
      return fail("seed " + std::to_string(s) + ": waiting " + std::to_string(waited) + " vs " + std::to_string(reported));
    }
  }
  return {true, std::to_string(events) + " events, " + std::to_string(admissions) + " sessions checked"};
}

Outcome mask_soundness() {
  int masked_mid_edge = 0, masked_episodes = 0, unmasked_failures = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    GeneratorParams p;
    p.n_nodes = 12;
    p.n_chargers = 2;
    p.n_trucks = 3;
    p.stops_per_truck = 3;
    p.initial_soc = 0.5;
    p.config.alpha = 1.2;
    const auto inst = generate_instance(p, s);
    for (const char* name : {"random", "heuristic", "planner"}) {
      auto policy = make_builtin_policy(name);
      masked_mid_edge += run_episode(inst, *policy, s).metrics.mid_edge_strandings;
      ++masked_episodes;
    }
    RandomPolicy unmasked(true);
    const auto m = run_episode(inst, unmasked, s).metrics;
    unmasked_failures += m.strandings + m.infeasible_actions;
  }
  if (masked_mid_edge != 0) return fail(std::to_string(masked_mid_edge) + " mid-edge strandings under the mask");
  if (unmasked_failures == 0) return fail("unmasked random never failed");
  return {true, std::to_string(masked_episodes) + " masked episodes with 0 mid-edge strandings; unmasked failures " +
                    std::to_string(unmasked_failures)};
}

Outcome oracle_equivalence() {
  const auto t1 = etfrp::test::t1();
  const auto t1_cost = optimal_search(t1, t1.trucks[0]).nominal_cost;
  if (t1_cost != 2.4) return fail("T1 cost " + std::to_string(t1_cost));
  int charged = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    GeneratorParams p;
    p.n_nodes = 7;
    p.n_chargers = 1 + static_cast<int>(s % 2);
    p.n_trucks = 1;
    p.stops_per_truck = 1 + static_cast<int>(s % 3);
    p.initial_soc = 0.3 + 0.1 * static_cast<double>(s % 4);
    p.config.stochastic.deterministic = true;
    const auto inst = generate_instance(p, 1000 + s);
    const auto& t = inst.trucks[0];
    const auto r = optimal_search(inst, t);
    if (!r.feasible) return fail("instance " + std::to_string(s) + " infeasible for search");
    const double brute = oracle::Enumerator(inst, t, nominal_unloading(inst.config.stochastic), 10, r.nominal_cost).run();
    if (!(std::abs(brute - r.nominal_cost) <= 1e-9)) {
      return fail("instance " + std::to_string(s) + ": search " + std::to_string(r.nominal_cost) + " enum " +
                  std::to_string(brute));
    }
    for (const auto& a : r.plan) charged += a.kind == ActionKind::kCharge;
    HeuristicPolicy h;
    const auto m = run_episode(inst, h, s).metrics;
    if (!m.success) continue;  // a failed heuristic run has no executed cost to compare
    if (m.total_time_h < r.nominal_cost - 1e-9) return fail("heuristic beat the oracle on " + std::to_string(s));
  }
  return {true, "T1 = 2.4 h exactly; 50 instances agree (" + std::to_string(charged) + " planned charges)"};
}

Outcome determinism_replay() {
  int episodes = 0;
  for (const char* name : {"heuristic", "planner", "random"}) {
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto inst = etfrp::test::small_fleet(1 + static_cast<int>(s % 3), 2 + static_cast<int>(s % 2), 2, s / 10);
      auto policy = make_builtin_policy(name);
      const auto a = run_episode(inst, *policy, s).trace;
      const auto report = replay(Trace::parse(a.to_jsonl()), inst);
      if (!report.ok) return fail(std::string(name) + " seed " + std::to_string(s) + ": " + report.message);
      if (run_episode(inst, *policy, s).trace.to_jsonl() != a.to_jsonl()) {
        return fail(std::string(name) + " seed " + std::to_string(s) + ": rerun differs");
      }
      ++episodes;
    }
  }
  return {true, std::to_string(episodes) + " traces replayed with 0 divergences, reruns byte-identical"};
}

Outcome benchmark_ordering() {
  GeneratorParams p;
  p.n_trucks = 5;
  p.stops_per_truck = 3;
  const auto inst = generate_instance(p, 1);
  const auto report =
      run_bench(inst, {policy_spec("planner"), policy_spec("heuristic"), policy_spec("random")}, 100, 0, 4);
  const auto& planner = report.policies[0];
  const auto& heuristic = report.policies[1];
  const auto& random = report.policies[2];
  const double rp = planner.field("reward_total").mean, rh = heuristic.field("reward_total").mean,
               rr = random.field("reward_total").mean;
  const double sp = planner.field("success").mean, sh = heuristic.field("success").mean;
  int wins = 0;
  for (const auto& s : report.policies) wins += s.wins;
  char buf[256];
  std::snprintf(buf, sizeof buf, "reward %.1f >= %.1f >= %.1f, success %.2f >= %.2f, wins %d/%d, ties %zu", rp, rh,
                rr, sp, sh, wins, report.scenarios, report.tie_scenarios.size());
  if (!(rp >= rh && rh >= rr)) return fail(std::string("reward ordering: ") + buf);
  if (!(sp >= sh)) return fail(std::string("success ordering: ") + buf);
  if (wins + static_cast<int>(report.tie_scenarios.size()) != report.scenarios || wins > report.scenarios) {
    return fail(std::string("win accounting: ") + buf);
  }
  return {true, buf};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"cccv profile point checks", 1, cccv_profile},
      {"charging integration", 10, charging_integration},
      {"queue/port invariants", 60, queue_invariants},
      {"mask soundness", 60, mask_soundness},
      {"oracle equivalence", 120, oracle_equivalence},
      {"determinism/replay", 120, determinism_replay},
      {"benchmark sanity ordering", 600, benchmark_ordering},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s  %-28s %8.2fs (budget %4.0fs)  %s%s\n", pass ? "PASS" : "FAIL", c.name, secs, c.budget_s,
                o.detail.c_str(), in_time ? "" : "  [over budget]");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
