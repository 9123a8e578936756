#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "etfrp/errors.hpp"
#include "etfrp/json_io.hpp"
#include "etfrp/netmodel.hpp"
#include "support.hpp"

using namespace etfrp;
using etfrp::test::t1;

namespace {

const char* kMinimal = R"({
  "format": "etfrp-instance/1",
  "nodes": [{"id": 0, "kind": "depot"}, {"id": 1, "kind": "delivery"}],
  "tau": [[0, 1], [1, 0]],
  "energy": [[0, 40], [40, 0]],
  "chargers": [],
  "trucks": [{"id": 0, "start_node": 0, "battery_capacity": 400, "initial_battery": 400,
              "battery_floor": 0, "deliveries": [1], "mode": "sequential"}]
})";

}  // namespace

TEST(LoadInstance, MinimalDocument) {
  const auto inst = load_instance(kMinimal);
  EXPECT_EQ(inst.node_count(), 2);
  EXPECT_TRUE(inst.chargers.empty());
  EXPECT_EQ(inst.tau(0, 1), 1.0);
  EXPECT_EQ(inst.config, ScenarioConfig{});
}

TEST(LoadInstance, NegativeCostIsRejected) {
  std::string doc = kMinimal;
  doc.replace(doc.find("[[0, 1]"), 7, "[[0, -1]");
  try {
    load_instance(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("negative cost"), std::string::npos) << e.what();
  }
}

TEST(LoadInstance, SchemaErrorsCarryJsonPointer) {
  std::string doc = kMinimal;
  doc.replace(doc.find("\"kind\": \"delivery\""), 18, "\"kind\": \"volcano\"");
  try {
    load_instance(doc);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.path(), "/nodes/1/kind");
  }
  EXPECT_THROW(load_instance("{not json"), ParseError);
  EXPECT_THROW(load_instance(R"({"format":"other/9"})"), ParseError);
}

TEST(LoadInstance, ReportsEveryViolation) {
  auto inst = t1();
  inst.trucks[0].deliveries = {3, 3};
  inst.chargers[0].eta = 1.5;
  const auto failures = check_invariants(inst);
  EXPECT_GE(failures.size(), 3u);
  EXPECT_THROW(validate(inst), ValidationError);
}

TEST(LoadInstance, FixtureT1) {
  const auto inst = t1(false);
  EXPECT_EQ(inst.node_count(), 4);
  EXPECT_EQ(inst.chargers.size(), 1u);
  EXPECT_EQ(inst.trucks.size(), 1u);
  EXPECT_EQ(inst.station_at(3), 0);
  EXPECT_FALSE(inst.station_at(1).has_value());
  EXPECT_EQ(inst.energy(2, 1), 44.0);
}

TEST(SaveInstance, RoundTripT1) {
  const auto inst = t1(false);
  const auto text = save_instance(inst);
  EXPECT_EQ(load_instance(text), inst);
  EXPECT_EQ(save_instance(load_instance(text)), text);
}

TEST(SaveInstance, RoundTripGenerated) {
  GeneratorParams p;
  p.n_trucks = 10;
  p.stops_per_truck = 3;
  p.n_nodes = 60;
  p.n_chargers = 8;
  p.config.stochastic.unloading.stochastic = true;
  const auto inst = generate_instance(p, 3);
  const auto text = save_instance(inst);
  const auto back = load_instance(text);
  EXPECT_EQ(back, inst);
  EXPECT_EQ(instance_digest(back), instance_digest(inst));
}

TEST(InstanceDigest, SensitiveToContent) {
  auto a = t1(false);
  auto b = a;
  EXPECT_EQ(instance_digest(a), instance_digest(b));
  b.tau(0, 1) = 1.01;
  EXPECT_NE(instance_digest(a), instance_digest(b));
}

TEST(Generate, ZeroJitterIsSymmetric) {
  GeneratorParams p;
  p.n_nodes = 10;
  p.n_chargers = 2;
  p.n_trucks = 1;
  p.stops_per_truck = 3;
  p.asymmetry_jitter = 0.0;
  const auto inst = generate_instance(p, 7);
  for (int u = 0; u < inst.node_count(); ++u) {
    for (int v = 0; v < inst.node_count(); ++v) {
      EXPECT_EQ(inst.tau(u, v), inst.tau(v, u));
      EXPECT_EQ(inst.energy(u, v), inst.energy(v, u));
    }
  }
}

TEST(Generate, DeterministicPerSeed) {
  GeneratorParams p;
  const auto a = save_instance(generate_instance(p, 11));
  EXPECT_EQ(a, save_instance(generate_instance(p, 11)));
  EXPECT_NE(a, save_instance(generate_instance(p, 12)));
}

TEST(Generate, EveryAssignmentIsFeasible) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = etfrp::test::small_fleet(3, 3, 2, seed);
    EXPECT_TRUE(check_invariants(inst).empty());
    for (const auto& t : inst.trucks) EXPECT_TRUE(validate_assignment(inst, t).feasible);
  }
}

TEST(Generate, MoreStopsThanNodesFails) {
  GeneratorParams p;
  p.n_nodes = 5;
  p.n_chargers = 1;
  p.n_trucks = 1;
  p.stops_per_truck = 8;
  EXPECT_THROW(generate_instance(p, 1), GenerationError);
}

TEST(EuclideanCosts, SpeedAndConsumption) {
  const std::vector<Point> pts{{0, 0}, {80, 0}};
  const auto c = euclidean_costs(pts, 40.0, 1.2);
  EXPECT_DOUBLE_EQ(c.tau(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(c.energy(0, 1), 96.0);
  EXPECT_EQ(c.tau(0, 0), 0.0);
}

// Floyd-Warshall over time as the oracle.
TEST(ShortestPathCosts, MatchesAllPairsOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  const int n = 14;
  RoadGraph g;
  g.vertex_count = n;
  for (int u = 0; u < n; ++u) {
    g.arcs.push_back({u, (u + 1) % n, w(rng), 0.0});
    for (int k = 0; k < 2; ++k) g.arcs.push_back({u, static_cast<int>(rng() % n), w(rng), 0.0});
  }
  for (auto& a : g.arcs) a.energy_kwh = 30.0 * a.time_h;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (int u = 0; u < n; ++u) d[u][u] = 0.0;
  for (const auto& a : g.arcs) d[a.from][a.to] = std::min(d[a.from][a.to], a.time_h);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);

  const std::vector<int> pois{0, 3, 7, 11};
  const auto c = shortest_path_costs(g, pois);
  for (std::size_t i = 0; i < pois.size(); ++i) {
    for (std::size_t j = 0; j < pois.size(); ++j) {
      EXPECT_NEAR(c.tau(i, j), d[pois[i]][pois[j]], 1e-12);
      EXPECT_NEAR(c.energy(i, j), 30.0 * c.tau(i, j), 1e-9);
    }
  }
}

TEST(RoadGraph, Parses) {
  const auto g = load_road_graph(R"({"format":"etfrp-roadgraph/1","vertex_count":2,"arcs":[[0,1,0.5,20]]})");
  EXPECT_EQ(g.vertex_count, 2);
  ASSERT_EQ(g.arcs.size(), 1u);
  EXPECT_EQ(g.arcs[0].energy_kwh, 20.0);
}

TEST(ValidateAssignment, FullBatteryNeedsNoStops) {
  const auto inst = t1(false);
  const auto r = validate_assignment(inst, inst.trucks[0]);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(r.required_stops.empty());
}

TEST(ValidateAssignment, UnreachableLeg) {
  auto inst = load_instance(kMinimal);
  inst.energy(0, 1) = 400.0;
  EXPECT_FALSE(validate_assignment(inst, inst.trucks[0]).feasible);
}

TEST(ValidateAssignment, T1WithSmallBatteryStopsFirst) {
  auto inst = t1(false);
  inst.trucks[0].initial_battery = 60.0;
  const auto r = validate_assignment(inst, inst.trucks[0]);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.required_stops, (std::vector<RequiredStop>{{0, 0}}));
}

TEST(Config, JsonRoundTrip) {
  ScenarioConfig c;
  c.alpha = 1.3;
  c.k_chg = 2;
  c.mask_full_stations = true;
  c.stochastic.rush_windows = {{8.0, 10.0}};
  c.reward.lambda2 = 250.0;
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
}
