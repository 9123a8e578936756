#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "etfrp/engine.hpp"
#include "etfrp/obsgraph.hpp"
#include "etfrp/trace.hpp"

namespace etfrp {

struct Observation {
  ObservationGraph graph;
  int episode_step = 0;
  std::optional<int> active_truck;
  double reward = 0.0;  // realized by the step that produced this observation
  bool done = false;
  double elapsed = 0.0;
  std::uint64_t digest = 0;
};

// Decision interface over one WorldState with tracing. Every observation's
// digest and every reward go into the trace so it can be replayed.
class Environment {
 public:
  explicit Environment(const NetworkInstance& inst) : inst_(inst) {}

  const Observation& reset(std::uint64_t seed, std::vector<DrawRecord> injected = {});
  const Observation& step(int action_index);

  bool started() const { return world_ != nullptr; }
  const WorldState& world() const { return *world_; }
  const Observation& observation() const { return obs_; }
  const Trace& trace() const { return trace_; }
  Trace take_trace() { return std::move(trace_); }
  EpisodeMetrics metrics() const { return world_->metrics(); }

 private:
  void observe(double reward, double elapsed);

  const NetworkInstance& inst_;
  std::unique_ptr<WorldState> world_;
  Trace trace_;
  Observation obs_;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(const WorldState& world, std::uint64_t seed) {
    (void)world;
    (void)seed;
  }
  // Index into the fixed action enumeration.
  virtual int act(const Observation& obs, const WorldState& world) = 0;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  Trace trace;
};

// Raised when the policy throws mid-episode; carries the partial trace.
class EpisodeAborted : public std::runtime_error {
 public:
  EpisodeAborted(const std::string& what, Trace partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Trace& partial_trace() const { return partial_; }

 private:
  Trace partial_;
};

EpisodeResult run_episode(const NetworkInstance& inst, Policy& policy, std::uint64_t seed);

}  // namespace etfrp
