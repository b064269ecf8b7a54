#include "gridlight/agentio/observation.hpp"

namespace gridlight::agentio {

std::vector<double> observe(const sim::World& world, int intersection) {
  const sim::IntersectionSpec& x = world.network().intersections[intersection];
  std::vector<double> o(kObsDim, 0.0);
  for (int dir = 0; dir < 4; ++dir) {
    const sim::LaneSnapshot snap = world.lane_snapshot(x.incoming[dir]);
    o[dir] = static_cast<double>(snap.queue);
    o[4 + dir] = static_cast<double>(snap.count);
    o[8 + dir] = snap.mean_wait_min;
    o[12 + dir] = snap.delay;
  }
  const sim::TrafficLight& tl = world.light(intersection);
  o[16] = tl.committed == sim::PhaseAxis::ew ? 1.0 : 0.0;
  o[17] = tl.committed == sim::PhaseAxis::ns ? 1.0 : 0.0;
  o[18] = world.phase_duration_s(intersection);
  return o;
}

std::vector<double> global_state(const sim::World& world) {
  const int n = world.network().agent_count();
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(kObsDim) * n);
  for (int i = 0; i < n; ++i) {
    const std::vector<double> o = observe(world, i);
    s.insert(s.end(), o.begin(), o.end());
  }
  return s;
}

}  // namespace gridlight::agentio
