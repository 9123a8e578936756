#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etfrp/stochastic.hpp"

namespace etfrp {

using NodeId = int;

enum class NodeKind { kPlain, kDelivery, kCharger, kDepot };
enum class DeliveryMode { kSequential, kFlexible };

std::string_view to_string(NodeKind kind);
std::string_view to_string(DeliveryMode mode);

// Dense square matrix, row-major, indexed [from][to].
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(int n, double fill = 0.0)
      : n_(n), data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), fill) {}

  int size() const { return n_; }
  double operator()(int from, int to) const { return data_[offset(from, to)]; }
  double& operator()(int from, int to) { return data_[offset(from, to)]; }
  double max() const;
  bool operator==(const Matrix&) const = default;

 private:
  std::size_t offset(int from, int to) const {
    return static_cast<std::size_t>(from) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(to);
  }
  int n_ = 0;
  std::vector<double> data_;
};

struct PoiNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::kPlain;
  double x = 0.0;  // km, for generation and export only
  double y = 0.0;
  bool operator==(const PoiNode&) const = default;
};

struct ChargerSpec {
  NodeId node = 0;
  double p_max = 50.0;  // kW
  double p_min = 5.0;   // kW
  double eta = 0.85;
  int ports = 1;
  bool operator==(const ChargerSpec&) const = default;
};

struct TruckSpec {
  int id = 0;
  NodeId start_node = 0;
  double battery_capacity = 400.0;  // kWh
  double initial_battery = 400.0;
  double battery_floor = 0.0;
  std::vector<NodeId> deliveries;
  DeliveryMode mode = DeliveryMode::kSequential;
  bool operator==(const TruckSpec&) const = default;
};

struct RewardParams {
  double lambda1 = 1.0;      // per hour
  double lambda2 = 500.0;    // per delivery
  double lambda3 = -1000.0;  // failure
  bool operator==(const RewardParams&) const = default;
};

struct ScenarioConfig {
  double alpha = 1.2;
  // Must be set to run with alpha below the energy clip ceiling, where
  // headroom-feasible legs can still strand a truck.
  bool allow_unsafe_alpha = false;
  std::vector<double> duration_set{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  double charge_dt = 0.01;
  double horizon_T = 48.0;
  // Trucks still active at a decision point past this clock time fail.
  double time_limit_h = 240.0;
  int k_chg = 5;
  bool mask_full_stations = false;
  StochasticParams stochastic;
  RewardParams reward;
  bool operator==(const ScenarioConfig&) const = default;
};

struct NetworkInstance {
  std::string name;
  std::vector<PoiNode> nodes;
  Matrix tau;     // hours
  Matrix energy;  // kWh
  std::vector<ChargerSpec> chargers;
  std::vector<TruckSpec> trucks;
  ScenarioConfig config;

  int node_count() const { return static_cast<int>(nodes.size()); }
  // Station index of the charger located at `node`, if any.
  std::optional<int> station_at(NodeId node) const;
  bool operator==(const NetworkInstance&) const = default;
};

// Every violated invariant, one message each. Empty when valid.
std::vector<std::string> check_invariants(const NetworkInstance& inst);
// Throws ValidationError when check_invariants is non-empty.
void validate(const NetworkInstance& inst);

NetworkInstance load_instance(std::string_view text);
NetworkInstance load_instance_file(const std::filesystem::path& path);
std::string save_instance(const NetworkInstance& inst);
void save_instance_file(const NetworkInstance& inst, const std::filesystem::path& path);
std::uint64_t instance_digest(const NetworkInstance& inst);

// ---------------------------------------------------------------------------
// Cost matrices

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct CostMatrices {
  Matrix tau;
  Matrix energy;
};

// tau = dist / speed * (1 + j), energy = dist * kwh_per_km * (1 + j).
// `jitter` may be empty (all zero) or n x n.
CostMatrices euclidean_costs(std::span<const Point> points, double speed_kmh, double kwh_per_km,
                             const Matrix& jitter = {});

struct RoadArc {
  int from = 0;
  int to = 0;
  double time_h = 0.0;
  double energy_kwh = 0.0;
};

struct RoadGraph {
  int vertex_count = 0;
  std::vector<RoadArc> arcs;
};

// Fills POI-to-POI matrices from time-shortest paths (Dijkstra, one source
// per POI). Energy is accumulated along the chosen time-shortest path.
CostMatrices shortest_path_costs(const RoadGraph& graph, std::span<const int> poi_vertices);
// {"format":"etfrp-roadgraph/1","vertex_count":N,"arcs":[[from,to,time_h,energy_kwh],...]}
RoadGraph load_road_graph(std::string_view text);

// ---------------------------------------------------------------------------
// Generation and assignment feasibility

struct GeneratorParams {
  int n_nodes = 30;
  int n_chargers = 5;
  int n_trucks = 5;
  int stops_per_truck = 3;
  double area_km = 200.0;
  double speed_kmh = 40.0;
  double kwh_per_km = 1.2;
  double asymmetry_jitter = 0.1;
  int port_min = 1;
  int port_max = 2;
  double battery_kwh = 400.0;
  double initial_soc = 1.0;
  double p_max = 50.0;
  double p_min = 5.0;
  double eta = 0.85;
  DeliveryMode mode = DeliveryMode::kSequential;
  int max_retries = 1000;
  ScenarioConfig config;
};

// Pure function of (params, seed). All numeric fields are quantized to the
// 9-significant-digit text format so save/load is exact.
NetworkInstance generate_instance(const GeneratorParams& params, std::uint64_t seed);

struct RequiredStop {
  int after_leg_index = 0;  // deliveries completed before the stop
  int charger = 0;          // station index
  bool operator==(const RequiredStop&) const = default;
};

struct FeasibilityReport {
  bool feasible = false;
  std::vector<RequiredStop> required_stops;
};

// Reachability with conservative consumption alpha*e per leg and
// recharge-to-full at any charger. Reports a plan with the fewest stops.
FeasibilityReport validate_assignment(const NetworkInstance& inst, const TruckSpec& truck);

}  // namespace etfrp
