#pragma once

#include <string>

#include "etfrp/netmodel.hpp"

namespace etfrp::test {

inline std::string fixture(const std::string& name) { return std::string(ETFRP_FIXTURES) + "/" + name; }

inline NetworkInstance t1(bool deterministic = true) {
  auto inst = load_instance_file(fixture("t1.json"));
  inst.config.stochastic.deterministic = deterministic;
  return inst;
}

// Node ids match T1: A=0, D1=1, D2=2, C1=3.
inline constexpr NodeId kA = 0, kD1 = 1, kD2 = 2, kC1 = 3;
// T1 action slots: navigate C1, navigate D1, navigate D2, then charge 1..12 h.
inline constexpr int kNavC1 = 0, kNavD1 = 1, kNavD2 = 2, kCharge1h = 3;

inline NetworkInstance small_fleet(int trucks, int stops, int chargers, std::uint64_t seed,
                                   bool deterministic = false, int nodes = 12) {
  GeneratorParams p;
  p.n_nodes = nodes;
  p.n_chargers = chargers;
  p.n_trucks = trucks;
  p.stops_per_truck = stops;
  p.config.stochastic.deterministic = deterministic;
  return generate_instance(p, seed);
}

}  // namespace etfrp::test
