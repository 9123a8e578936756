#include "etfrp/environment.hpp"

#include <chrono>

#include "etfrp/errors.hpp"

namespace etfrp {

const Observation& Environment::reset(std::uint64_t seed, std::vector<DrawRecord> injected) {
  trace_ = Trace{};
  trace_.header.instance_digest = hex64(instance_digest(inst_));
  trace_.header.master_seed = seed;
  trace_.header.config = config_to_json(inst_.config);
  EngineOptions options;
  options.trace = &trace_;
  options.injected = std::move(injected);
  world_ = std::make_unique<WorldState>(inst_, seed, std::move(options));
  observe(world_->initial_reward(), world_->initial_elapsed());
  return obs_;
}

const Observation& Environment::step(int action_index) {
  if (!world_) throw std::logic_error("step before reset");
  if (world_->done()) throw std::logic_error("step on a finished episode");
  if (action_index < 0 || action_index >= world_->action_set().fixed_size()) {
    throw ProtocolError("action index " + std::to_string(action_index) + " out of range [0, " +
                        std::to_string(world_->action_set().fixed_size()) + ")");
  }
  TraceRecord rec;
  rec.t = world_->now();
  rec.kind = "Action";
  rec.truck = *world_->active_truck();
  rec.action = action_index;
  world_->emit(std::move(rec));
  const auto result = world_->step(action_index);
  observe(result.reward, result.elapsed);
  return obs_;
}

void Environment::observe(double reward, double elapsed) {
  obs_.graph = encode_observation(*world_);
  obs_.episode_step = world_->step_count();
  obs_.active_truck = world_->active_truck();
  obs_.reward = reward;
  obs_.done = world_->done();
  obs_.elapsed = elapsed;
  obs_.digest = observation_digest(obs_.graph);

  TraceRecord rec;
  rec.t = world_->now();
  rec.kind = "Observation";
  rec.truck = obs_.active_truck.value_or(-1);
  rec.obs_digest = hex64(obs_.digest);
  rec.reward = reward;
  rec.done = obs_.done;
  world_->emit(std::move(rec));
}

EpisodeResult run_episode(const NetworkInstance& inst, Policy& policy, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  Environment env(inst);
  env.reset(seed);
  policy.begin_episode(env.world(), seed);
  while (!env.observation().done) {
    int action = 0;
    try {
      action = policy.act(env.observation(), env.world());
    } catch (const std::exception& e) {
      throw EpisodeAborted(policy.name() + ": " + e.what(), env.take_trace());
    }
    env.step(action);
  }
  EpisodeResult out{env.metrics(), env.take_trace()};
  out.metrics.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace etfrp
