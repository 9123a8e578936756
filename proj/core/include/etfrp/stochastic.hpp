#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace etfrp {

// Named random substreams. Each is an independent counter-based sequence
// keyed by (master_seed, name).
enum class StreamId : std::uint8_t { kTravel, kEnergy, kUnloading, kTiebreak, kGenerator, kPolicy };
inline constexpr std::size_t kStreamCount = 6;

std::string_view stream_name(StreamId id);
std::optional<StreamId> stream_from_name(std::string_view name);

struct RushWindow {
  double start_hour = 0.0;
  double end_hour = 0.0;
  bool operator==(const RushWindow&) const = default;
};

struct UnloadingModel {
  bool stochastic = false;
  double hours = 0.2;  // fixed value, or the mean in stochastic mode
  double std = 0.1;
  double clip_low = 0.05;
  double clip_high = 0.6;
  bool operator==(const UnloadingModel&) const = default;
};

struct StochasticParams {
  bool deterministic = false;
  double travel_std_factor = 0.15;
  double rush_multiplier = 2.0;
  std::vector<RushWindow> rush_windows{{7.0, 9.0}, {16.0, 19.0}};
  double day_start_hour = 6.0;  // hour-of-day at episode clock 0
  double travel_clip_low = 0.5;
  double travel_clip_high = 2.0;
  double xi_low = 0.90;
  double xi_high = 1.20;
  double energy_noise_std = 0.02;
  UnloadingModel unloading;
  bool operator==(const StochasticParams&) const = default;
};

// SplitMix64 evaluated at an explicit counter: value(i) depends only on
// (key, i), so any draw can be recomputed without replaying the prefix.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_(key) {}

  std::uint64_t at(std::uint64_t index) const;
  std::uint64_t next_u64() { return at(counter_++); }
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  // Standard normal via Box-Muller; consumes two counters.
  double normal();
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct DrawRecord {
  StreamId stream;
  std::uint64_t index;  // per-stream sample index
  double value;
  bool operator==(const DrawRecord&) const = default;
};

class ReplayExhausted : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Owns one episode's substreams. Every sample taken through draw() is
// appended to a log (drained by the engine into the trace). In injection
// mode the values come from a recorded log instead of the generators.
class RandomStreams {
 public:
  explicit RandomStreams(std::uint64_t master_seed);

  std::uint64_t master_seed() const { return master_seed_; }
  CounterStream& stream(StreamId id) { return slots_[index(id)].gen; }

  template <class Gen>
  double draw(StreamId id, Gen&& gen) {
    auto& slot = slots_[index(id)];
    const double value = injecting_ ? pop_injected(id) : gen(slot.gen);
    log_.push_back({id, slot.samples++, value});
    return value;
  }

  void inject(std::span<const DrawRecord> recorded);
  bool injecting() const { return injecting_; }
  std::vector<DrawRecord> take_log();
  std::uint64_t samples(StreamId id) const { return slots_[index(id)].samples; }

 private:
  struct Slot {
    CounterStream gen;
    std::uint64_t samples = 0;
    std::deque<DrawRecord> injected;
  };
  static std::size_t index(StreamId id) { return static_cast<std::size_t>(id); }
  double pop_injected(StreamId id);

  std::uint64_t master_seed_;
  std::vector<Slot> slots_;
  bool injecting_ = false;
  std::vector<DrawRecord> log_;
};

// Unbiased integer in [0, n) by rejection; n > 0.
std::uint64_t uniform_index(CounterStream& gen, std::uint64_t n);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

// Fraction of [depart, depart + duration] (hour-of-day, wrapping at 24)
// that falls inside any window.
double rush_overlap_fraction(double depart_hour_of_day, double nominal_duration,
                             std::span<const RushWindow> windows);

double sample_travel_time(double tau_nominal, double depart_time, const StochasticParams& params,
                          RandomStreams& streams);
double sample_energy_coeff(double realized_tau, double nominal_tau, const StochasticParams& params,
                           RandomStreams& streams);
double sample_unloading(const StochasticParams& params, RandomStreams& streams);

}  // namespace etfrp
