#include "etfrp/charging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace etfrp {

double cccv_power(double soc, double p_max, double p_min) {
  if (!(soc >= 0.0 && soc <= 1.0)) {
    throw DomainError("cccv_power: state of charge " + std::to_string(soc) + " outside [0, 1]");
  }
  if (soc <= 0.10) return p_max * (0.6 + 3.0 * soc);
  if (soc <= 0.50) return p_max * (0.9 + 0.25 * (soc - 0.10));
  if (soc <= 0.80) return p_max;
  const double p = 5.0 * soc - 4.0;  // (soc - 0.8) / 0.2, exact at soc = 1
  return std::max(p_min, p_max * (1.0 - 0.6 * std::pow(p, 1.5)));
}

ChargeResult integrate_charge(double battery, double capacity, double duration, double eta, double p_max,
                              double p_min, double dt) {
  double b = std::min(battery, capacity);
  const double start = b;
  const auto full_steps = static_cast<long>(std::floor(duration / dt + 1e-9));
  const double remainder = duration - static_cast<double>(full_steps) * dt;

  auto advance = [&](double step) {
    b = std::min(capacity, b + eta * cccv_power(b / capacity, p_max, p_min) * step);
  };
  for (long i = 0; i < full_steps && b < capacity; ++i) advance(dt);
  if (remainder > 1e-12 && b < capacity) advance(remainder);
  return {b, b - start};
}

ChargeResult integrate_charge(double battery, double capacity, double duration, const ChargerSpec& spec,
                              double dt) {
  return integrate_charge(battery, capacity, duration, spec.eta, spec.p_max, spec.p_min, dt);
}

bool StationState::holds(int truck) const {
  return std::any_of(occupants_.begin(), occupants_.end(), [&](const Occupant& o) { return o.truck == truck; }) ||
         std::any_of(queue_.begin(), queue_.end(), [&](const QueuedTruck& q) { return q.truck == truck; });
}

AdmitOutcome StationState::arrive(int truck, double t, double requested_duration) {
  if (holds(truck)) {
    throw std::logic_error("station " + std::to_string(id_) + ": truck " + std::to_string(truck) +
                           " arrived twice");
  }
  if (has_free_port()) {
    occupants_.push_back({truck, t + requested_duration});
    return {true, t, 0};
  }
  queue_.push_back({truck, t, requested_duration});
  return {false, 0.0, static_cast<int>(queue_.size())};
}

std::optional<Admission> StationState::release(int truck, double t) {
  auto it = std::find_if(occupants_.begin(), occupants_.end(), [&](const Occupant& o) { return o.truck == truck; });
  if (it == occupants_.end()) {
    throw std::logic_error("station " + std::to_string(id_) + ": truck " + std::to_string(truck) +
                           " released without occupying a port");
  }
  occupants_.erase(it);
  if (queue_.empty()) return std::nullopt;
  const QueuedTruck head = queue_.front();
  queue_.pop_front();
  occupants_.push_back({head.truck, t + head.requested_duration});
  return Admission{head.truck, t, head.requested_duration, t - head.arrival};
}

}  // namespace etfrp
