#include "gridlight/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridlight::sim {

double idm_accel(const IdmParams& p, double v, bool has_leader, double gap,
                 double lead_speed) {
  const double free_term = std::pow(v / p.v0, 4.0);
  if (!has_leader) {
    return p.accel * (1.0 - free_term);
  }
  const double s_star =
      p.s0 + v * p.headway +
      v * (v - lead_speed) / (2.0 * std::sqrt(p.accel * p.decel));
  const double ratio = s_star / gap;
  return p.accel * (1.0 - free_term - ratio * ratio);
}

const FlowInterval* FlowProgram::at(std::int64_t second) const {
  for (const auto& iv : intervals) {
    if (second >= iv.start_s && second < iv.end_s) return &iv;
  }
  return nullptr;
}

World::World(const RoadNetwork& net, IdmParams idm) : net_(&net), idm_(idm) {
  vehicles_.resize(net.routes.size());
  spawn_acc_.assign(net.routes.size(), 0.0);
  lights_.resize(net.intersections.size());
  window_.assign(net.intersections.size(), WindowFeatures{});
}

void World::apply_actions(std::span<const int> actions) {
  if (actions.size() != lights_.size()) {
    throw SimulationFault("apply_actions: expected " +
                          std::to_string(lights_.size()) + " actions, got " +
                          std::to_string(actions.size()));
  }
  window_.assign(lights_.size(), WindowFeatures{});
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] != 0 && actions[i] != 1) {
      throw SimulationFault("apply_actions: action must be 0 or 1");
    }
    if (actions[i] == 1 && lights_[i].yellow_ticks_left == 0) {
      lights_[i].yellow_ticks_left = kYellowTicks;
      window_[i].phase_changes += 1;
    }
  }
}

void World::tick(const FlowProgram& flow) {
  const std::int64_t second = tick_count_ / kTicksPerSecond;

  // --- car following over a frozen snapshot of positions/speeds ---
  for (const RouteSpec& route : net_->routes) {
    auto& cars = vehicles_[route.id];
    if (cars.empty()) continue;

    // Stop lines currently demanding a halt on this route (red or clearing).
    thread_local std::vector<double> red_lines;
    red_lines.clear();
    for (std::size_t k = 0; k < route.stop_lines.size(); ++k) {
      const TrafficLight& tl = lights_[route.intersections[k]];
      const bool green =
          tl.yellow_ticks_left == 0 &&
          ((route.axis == Axis::horizontal && tl.committed == PhaseAxis::ew) ||
           (route.axis == Axis::vertical && tl.committed == PhaseAxis::ns));
      if (!green) red_lines.push_back(route.stop_lines[k]);
    }

    accel_scratch_.resize(cars.size());
    // red_lines is ascending; vehicles are descending in position, so the
    // first relevant red line can be tracked with one reverse cursor.
    std::size_t red_idx = red_lines.size();
    for (std::size_t i = 0; i < cars.size(); ++i) {
      const Vehicle& car = cars[i];
      bool has_leader = false;
      double gap = 0.0, lead_speed = 0.0;
      if (i > 0) {
        has_leader = true;
        gap = cars[i - 1].pos - car.pos;
        lead_speed = cars[i - 1].speed;
      }
      // First red stop line strictly ahead of this car; a car exactly on the
      // line has already crossed.  The line acts as a standing leader, so
      // vehicles park one jam distance short of it and never cross on red
      // (a leader placed past the line would let the 0.1 s integrator carry
      // them over it).
      while (red_idx > 0 && red_lines[red_idx - 1] > car.pos) --red_idx;
      if (red_idx < red_lines.size() && red_lines[red_idx] > car.pos) {
        const double phantom_gap = red_lines[red_idx] - car.pos;
        if (!has_leader || phantom_gap < gap) {
          has_leader = true;
          gap = phantom_gap;
          lead_speed = 0.0;
        }
      }
      double a = idm_accel(idm_, car.speed, has_leader, gap, lead_speed);
      // Clamp so the post-step speed stays in [0, v0].
      a = std::min(a, (idm_.v0 - car.speed) / kDt);
      a = std::max(a, -car.speed / kDt);
      accel_scratch_[i] = a;
    }

    // Semi-implicit Euler, then bookkeeping per vehicle.
    for (std::size_t i = 0; i < cars.size(); ++i) {
      Vehicle& car = cars[i];
      const double old_pos = car.pos;
      car.speed += accel_scratch_[i] * kDt;
      if (car.speed < 0.0) car.speed = 0.0;  // braking clamp can round below
      car.pos += car.speed * kDt;
      if (car.speed < kWalkingSpeed) {
        car.waiting_ticks += 1;
      } else {
        car.waiting_ticks = 0;
      }
      if (i > 0 && cars[i - 1].pos - car.pos <= 0.0) {
        throw SimulationFault("vehicle overlap on route " +
                              std::to_string(route.id) + " at tick " +
                              std::to_string(tick_count_));
      }
      // Stop-line crossings feed the throughput feature.
      for (std::size_t k = 0; k < route.stop_lines.size(); ++k) {
        const double sl = route.stop_lines[k];
        if (old_pos < sl && car.pos >= sl) {
          window_[route.intersections[k]].throughput += 1;
        }
      }
    }

    // Exits: the front car is the only candidate per tick, but stay general.
    while (!cars.empty() && cars.front().pos >= route.length) {
      cars.pop_front();
      exited_ += 1;
      on_road_ -= 1;
    }
  }

  // --- signal clearance countdown; commit at expiry ---
  for (TrafficLight& tl : lights_) {
    if (tl.yellow_ticks_left > 0) {
      tl.yellow_ticks_left -= 1;
      if (tl.yellow_ticks_left == 0) {
        tl.committed =
            tl.committed == PhaseAxis::ew ? PhaseAxis::ns : PhaseAxis::ew;
        tl.last_commit_tick = tick_count_ + 1;  // effective from next tick
      }
    }
  }

  // --- demand insertion (deterministic accumulator, 36000 = 1 h / 0.1 s) ---
  const FlowInterval* iv = flow.at(second);
  for (const RouteSpec& route : net_->routes) {
    const double rate =
        iv != nullptr && route.id < static_cast<int>(iv->route_rates.size())
            ? iv->route_rates[route.id]
            : 0.0;
    spawn_acc_[route.id] += rate;
    auto& cars = vehicles_[route.id];
    while (spawn_acc_[route.id] >= 36000.0) {
      if (!cars.empty() && cars.back().pos < idm_.s0) break;  // deferred
      Vehicle car;
      car.id = next_vehicle_id_++;
      car.pos = 0.0;
      car.speed = flow.enter_speed;
      car.speed_second_ago = flow.enter_speed;
      car.entry_tick = tick_count_;
      cars.push_back(car);
      spawn_acc_[route.id] -= 36000.0;
      entered_ += 1;
      on_road_ += 1;
    }
  }

  tick_count_ += 1;
  if (entered_ != on_road_ + exited_) {
    throw SimulationFault("vehicle conservation violated at tick " +
                          std::to_string(tick_count_));
  }
  if (tick_count_ % kTicksPerSecond == 0) {
    per_second_sample();
  }
}

void World::per_second_sample() {
  // Window features: queue / waiting / delay sums over the four approaches.
  for (const IntersectionSpec& x : net_->intersections) {
    WindowFeatures& w = window_[x.id];
    for (int dir = 0; dir < 4; ++dir) {
      const LaneSnapshot snap = lane_snapshot(x.incoming[dir]);
      w.queue_sum += snap.queue;
      w.wait_sum += snap.mean_wait_min;
      w.delay_sum += snap.delay;
    }
  }
  // Emergency stops: speed lost over the past second, attributed to the
  // approach lane the vehicle is in (vehicles past the last stop line have
  // left every approach).
  for (const RouteSpec& route : net_->routes) {
    for (Vehicle& car : vehicles_[route.id]) {
      if (car.speed_second_ago - car.speed > kEmergencyDrop) {
        for (std::size_t k = 0; k < route.stop_lines.size(); ++k) {
          if (car.pos < route.stop_lines[k]) {
            window_[route.intersections[k]].emergency_stops += 1;
            break;
          }
        }
      }
      car.speed_second_ago = car.speed;
    }
  }
}

LaneSnapshot World::lane_snapshot(const LaneRef& lane) const {
  LaneSnapshot snap;
  if (lane.route < 0) return snap;
  const auto& cars = vehicles_[lane.route];
  // Positions are strictly descending; find [first < hi, first < lo).
  auto begin = std::partition_point(
      cars.begin(), cars.end(),
      [&](const Vehicle& v) { return v.pos >= lane.hi; });
  auto end = std::partition_point(
      begin, cars.end(), [&](const Vehicle& v) { return v.pos >= lane.lo; });
  double wait_ticks = 0.0, speed_sum = 0.0;
  for (auto it = begin; it != end; ++it) {
    snap.count += 1;
    if (it->speed < kWalkingSpeed) snap.queue += 1;
    wait_ticks += static_cast<double>(it->waiting_ticks);
    speed_sum += it->speed;
  }
  if (snap.count > 0) {
    const double n = static_cast<double>(snap.count);
    snap.mean_wait_min = wait_ticks / n * kDt / 60.0;
    snap.mean_speed = speed_sum / n;
    snap.delay = 1.0 - snap.mean_speed / idm_.v0;
  }
  return snap;
}

double World::phase_duration_s(int intersection) const {
  const TrafficLight& tl = lights_[intersection];
  return static_cast<double>(tick_count_ - tl.last_commit_tick) /
         kTicksPerSecond;
}

void World::advance_seconds(const FlowProgram& flow, int seconds) {
  for (int t = 0; t < seconds * kTicksPerSecond; ++t) tick(flow);
}

void World::test_insert_vehicle(int route, double pos, double speed,
                                std::int64_t waiting_ticks) {
  auto& cars = vehicles_[route];
  Vehicle car;
  car.id = next_vehicle_id_++;
  car.pos = pos;
  car.speed = speed;
  car.speed_second_ago = speed;
  car.entry_tick = tick_count_;
  car.waiting_ticks = waiting_ticks;
  auto it = std::partition_point(
      cars.begin(), cars.end(), [&](const Vehicle& v) { return v.pos > pos; });
  if (it != cars.end() && it->pos == pos) {
    throw SimulationFault("test_insert_vehicle: duplicate position");
  }
  cars.insert(it, car);
  entered_ += 1;
  on_road_ += 1;
}

void World::test_set_light(int intersection, PhaseAxis phase) {
  lights_[intersection].committed = phase;
  lights_[intersection].yellow_ticks_left = 0;
  lights_[intersection].last_commit_tick = tick_count_;
}

}  // namespace gridlight::sim
