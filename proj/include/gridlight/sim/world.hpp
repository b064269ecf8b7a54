#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "gridlight/sim/network.hpp"

namespace gridlight::sim {

// Raised when physics invariants break (overlapping vehicles, bad actions).
class SimulationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Car-following parameters (intelligent driver model).
struct IdmParams {
  double v0 = 35.0;   // free speed, m/s
  double accel = 1.0;   // max acceleration a, m/s^2
  double decel = 1.5;   // comfortable braking b, m/s^2
  double s0 = 2.0;      // jam distance / min gap, m
  double headway = 1.0;  // desired time headway T, s
};

// IDM acceleration for speed v against a leader at bumper distance `gap`
// moving at `lead_speed`.  Pass gap <= 0 through has_leader=false for free
// flow.  Exposed for tests.
double idm_accel(const IdmParams& p, double v, bool has_leader, double gap,
                 double lead_speed);

struct Vehicle {
  std::int64_t id = 0;
  double pos = 0.0;    // distance along the route, m
  double speed = 0.0;  // m/s
  double speed_second_ago = 0.0;
  std::int64_t entry_tick = 0;
  std::int64_t waiting_ticks = 0;  // consecutive ticks below walking speed
};

enum class PhaseAxis : int { ew = 0, ns = 1 };

struct TrafficLight {
  PhaseAxis committed = PhaseAxis::ew;
  int yellow_ticks_left = 0;  // >0: clearance running, all approaches red
  std::int64_t last_commit_tick = 0;
};

// Demand program: per-route insertion rates over [start_s, end_s) windows.
struct FlowInterval {
  std::int64_t start_s = 0;
  std::int64_t end_s = 0;
  std::vector<double> route_rates;  // veh/h, indexed by route id
};

struct FlowProgram {
  double enter_speed = 10.0;  // m/s given to freshly inserted vehicles
  std::vector<FlowInterval> intervals;
  // Rates active at the given second; nullptr when no interval covers it
  // (which means zero demand).
  const FlowInterval* at(std::int64_t second) const;
};

// Instantaneous aggregate over one lane.
struct LaneSnapshot {
  int count = 0;
  int queue = 0;             // vehicles below walking speed
  double mean_wait_min = 0.0;  // mean current waiting duration, minutes
  double mean_speed = 0.0;     // 0 for an empty lane
  double delay = 0.0;          // 1 - mean_speed / v0; 0 for an empty lane
};

// Per-intersection feature sums over the current decision window.
struct WindowFeatures {
  double queue_sum = 0.0;   // sum over per-second samples and 4 approach lanes
  double wait_sum = 0.0;    // same, of mean waiting minutes
  double delay_sum = 0.0;   // same, of delay
  int emergency_stops = 0;  // speed drops > 4.5 m/s within one second
  int phase_changes = 0;    // accepted switch requests this window
  int throughput = 0;       // stop-line crossings this window
};

// Microscopic traffic state: one lane per direction per route as spans of a
// shared 1-d carriageway per route, fixed 0.1 s tick, integer tick clock.
class World {
 public:
  static constexpr double kDt = 0.1;           // s per tick
  static constexpr int kTicksPerSecond = 10;
  static constexpr double kWalkingSpeed = 0.1;  // below this counts as queued
  static constexpr double kEmergencyDrop = 4.5;  // m/s per second
  static constexpr int kYellowTicks = 30;

  explicit World(const RoadNetwork& net, IdmParams idm = IdmParams{});

  // One action per intersection (0 keep, 1 switch).  Opens a fresh feature
  // window.  Switch requests during a running clearance are ignored.
  void apply_actions(std::span<const int> actions);

  // Advances physics by one 0.1 s tick: signal clearance, car following,
  // stop-line crossings, exits, demand insertion, per-second sampling.
  void tick(const FlowProgram& flow);

  void advance_seconds(const FlowProgram& flow, int seconds);

  const RoadNetwork& network() const { return *net_; }
  const IdmParams& idm() const { return idm_; }

  std::int64_t tick_count() const { return tick_count_; }
  std::int64_t seconds() const { return tick_count_ / kTicksPerSecond; }

  const TrafficLight& light(int intersection) const {
    return lights_[intersection];
  }
  const std::vector<WindowFeatures>& window() const { return window_; }

  LaneSnapshot lane_snapshot(const LaneRef& lane) const;

  // Seconds since the current phase was committed.
  double phase_duration_s(int intersection) const;

  const std::deque<Vehicle>& route_vehicles(int route) const {
    return vehicles_[route];
  }

  std::int64_t entered() const { return entered_; }
  std::int64_t exited() const { return exited_; }
  std::int64_t on_road() const { return on_road_; }

  // Demand accrued for a route but not yet placed (fractional vehicles),
  // because the entry was blocked.  entered-per-route plus this equals the
  // exact integral of the route's rate.
  double pending_demand(int route) const {
    return spawn_acc_[route] / 36000.0;
  }

  // Test hooks: direct state injection.  Insertion keeps the per-route
  // ordering invariant and counts as an entry.
  void test_insert_vehicle(int route, double pos, double speed,
                           std::int64_t waiting_ticks = 0);
  void test_set_light(int intersection, PhaseAxis phase);

 private:
  void per_second_sample();

  const RoadNetwork* net_;
  IdmParams idm_;
  std::int64_t tick_count_ = 0;
  std::vector<std::deque<Vehicle>> vehicles_;  // per route, front = furthest
  std::vector<TrafficLight> lights_;
  std::vector<double> spawn_acc_;  // per route, veh/h accumulated per tick
  std::vector<WindowFeatures> window_;
  std::int64_t entered_ = 0, exited_ = 0, on_road_ = 0;
  std::int64_t next_vehicle_id_ = 0;
  // scratch reused every tick
  std::vector<double> accel_scratch_;
};

}  // namespace gridlight::sim
