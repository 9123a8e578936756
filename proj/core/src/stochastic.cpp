#include "etfrp/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace etfrp {
namespace {

constexpr std::array<std::string_view, kStreamCount> kStreamNames = {
    "travel", "energy", "unloading", "tiebreak", "generator", "policy"};

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace

std::string_view stream_name(StreamId id) { return kStreamNames[static_cast<std::size_t>(id)]; }

std::optional<StreamId> stream_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStreamNames.size(); ++i) {
    if (kStreamNames[i] == name) return static_cast<StreamId>(i);
  }
  return std::nullopt;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterStream::at(std::uint64_t index) const {
  return splitmix64(key_ + (index + 1) * kGolden);
}

double CounterStream::uniform() {
  const std::uint64_t bits = next_u64() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double CounterStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t uniform_index(CounterStream& gen, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const std::uint64_t x = gen.next_u64();
    if (x < limit) return x % n;
  }
}

RandomStreams::RandomStreams(std::uint64_t master_seed) : master_seed_(master_seed) {
  slots_.reserve(kStreamCount);
  for (std::size_t i = 0; i < kStreamCount; ++i) {
    const std::uint64_t key = splitmix64(master_seed ^ fnv1a64(kStreamNames[i]));
    slots_.push_back(Slot{CounterStream(key), 0, {}});
  }
}

void RandomStreams::inject(std::span<const DrawRecord> recorded) {
  injecting_ = true;
  for (auto& slot : slots_) slot.injected.clear();
  for (const auto& rec : recorded) slots_[index(rec.stream)].injected.push_back(rec);
}

double RandomStreams::pop_injected(StreamId id) {
  auto& slot = slots_[index(id)];
  if (slot.injected.empty()) {
    throw ReplayExhausted("recorded draws exhausted on stream '" + std::string(stream_name(id)) + "'");
  }
  const DrawRecord rec = slot.injected.front();
  slot.injected.pop_front();
  if (rec.index != slot.samples) {
    throw ReplayExhausted("recorded draw index mismatch on stream '" + std::string(stream_name(id)) +
                          "': expected " + std::to_string(slot.samples) + ", got " +
                          std::to_string(rec.index));
  }
  return rec.value;
}

std::vector<DrawRecord> RandomStreams::take_log() {
  std::vector<DrawRecord> out;
  out.swap(log_);
  return out;
}

double rush_overlap_fraction(double depart_hour_of_day, double nominal_duration,
                             std::span<const RushWindow> windows) {
  if (!(nominal_duration > 0.0)) return 0.0;
  const double begin = depart_hour_of_day;
  const double end = depart_hour_of_day + nominal_duration;
  const double first_day = std::floor(begin / 24.0) - 1.0;
  const double last_day = std::floor(end / 24.0) + 1.0;

  double covered = 0.0;
  auto add_interval = [&](double lo, double hi) {
    for (double day = first_day; day <= last_day; day += 1.0) {
      const double a = std::max(begin, lo + 24.0 * day);
      const double b = std::min(end, hi + 24.0 * day);
      if (b > a) covered += b - a;
    }
  };
  for (const auto& w : windows) {
    if (w.start_hour <= w.end_hour) {
      add_interval(w.start_hour, w.end_hour);
    } else {  // window wraps midnight
      add_interval(w.start_hour, 24.0);
      add_interval(0.0, w.end_hour);
    }
  }
  return std::clamp(covered / nominal_duration, 0.0, 1.0);
}

double sample_travel_time(double tau_nominal, double depart_time, const StochasticParams& params,
                          RandomStreams& streams) {
  if (params.deterministic || !(tau_nominal > 0.0)) return tau_nominal;
  const double hod = std::fmod(params.day_start_hour + depart_time, 24.0);
  const double rush = rush_overlap_fraction(hod, tau_nominal, params.rush_windows);
  const double sigma =
      tau_nominal * params.travel_std_factor * (1.0 + (params.rush_multiplier - 1.0) * rush);
  return streams.draw(StreamId::kTravel, [&](CounterStream& g) {
    const double raw = tau_nominal + sigma * g.normal();
    return std::clamp(raw, params.travel_clip_low * tau_nominal, params.travel_clip_high * tau_nominal);
  });
}

double sample_energy_coeff(double realized_tau, double nominal_tau, const StochasticParams& params,
                           RandomStreams& streams) {
  if (params.deterministic || !(nominal_tau > 0.0)) return 1.0;
  return streams.draw(StreamId::kEnergy, [&](CounterStream& g) {
    const double eps = params.energy_noise_std * g.normal();
    const double xi = 1.0 + 0.5 * (realized_tau / nominal_tau - 1.0) + eps;
    return std::clamp(xi, params.xi_low, params.xi_high);
  });
}

double sample_unloading(const StochasticParams& params, RandomStreams& streams) {
  const auto& u = params.unloading;
  if (params.deterministic || !u.stochastic) return u.hours;
  return streams.draw(StreamId::kUnloading, [&](CounterStream& g) {
    return std::clamp(u.hours + u.std * g.normal(), u.clip_low, u.clip_high);
  });
}

}  // namespace etfrp
