#pragma once

#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "etfrp/netmodel.hpp"

namespace etfrp {

class DomainError : public std::domain_error {
  using std::domain_error::domain_error;
};

// CCCV charging power (kW) at state of charge `soc`:
//   [0, 0.10]     p_max * (0.6 + 3.0 soc)
//   (0.10, 0.50]  p_max * (0.9 + 0.25 (soc - 0.10))
//   (0.50, 0.80]  p_max
//   (0.80, 1]     max(p_min, p_max (1 - 0.6 p^1.5)),  p = (soc - 0.8) / 0.2
// Throws DomainError outside [0, 1].
double cccv_power(double soc, double p_max, double p_min);

struct ChargeResult {
  double battery_after = 0.0;
  double energy_added = 0.0;
};

// Forward-rectangle integration of b <- min(capacity, b + eta P(b/capacity) dt)
// over `duration`; a final partial step covers any remainder.
ChargeResult integrate_charge(double battery, double capacity, double duration, double eta, double p_max,
                              double p_min, double dt);

// Nominal charge at a given station (uses the station's power curve).
ChargeResult integrate_charge(double battery, double capacity, double duration, const ChargerSpec& spec,
                              double dt);

struct Occupant {
  int truck = 0;
  double session_end = 0.0;
};

struct QueuedTruck {
  int truck = 0;
  double arrival = 0.0;
  double requested_duration = 0.0;
};

struct AdmitOutcome {
  bool started = false;
  double started_at = 0.0;  // valid when started
  int queued_position = 0;  // 1-based, valid when !started
};

struct Admission {
  int truck = 0;
  double start_time = 0.0;
  double duration = 0.0;
  double waited = 0.0;
};

// Finite-capacity station with a first-come, first-served waitlist. Queued
// trucks keep the duration they requested on arrival.
class StationState {
 public:
  StationState(int id, ChargerSpec spec) : id_(id), spec_(spec) {}

  AdmitOutcome arrive(int truck, double t, double requested_duration);
  // Frees the truck's port and admits the queue head, if any, at time t.
  std::optional<Admission> release(int truck, double t);

  int id() const { return id_; }
  const ChargerSpec& spec() const { return spec_; }
  const std::vector<Occupant>& occupants() const { return occupants_; }
  const std::deque<QueuedTruck>& queue() const { return queue_; }
  bool has_free_port() const { return static_cast<int>(occupants_.size()) < spec_.ports; }
  bool holds(int truck) const;

 private:
  int id_;
  ChargerSpec spec_;
  std::vector<Occupant> occupants_;
  std::deque<QueuedTruck> queue_;
};

}  // namespace etfrp
