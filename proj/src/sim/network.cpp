#include "gridlight/sim/network.hpp"

#include <stdexcept>

namespace gridlight::sim {

namespace {

// Lane on `route` that ends at that route's k-th stop line.
LaneRef incoming_lane(const RouteSpec& route, std::size_t k) {
  LaneRef lane;
  lane.route = route.id;
  lane.lo = k == 0 ? 0.0 : route.stop_lines[k - 1];
  lane.hi = route.stop_lines[k];
  return lane;
}

// Lane on `route` that starts at that route's k-th stop line.
LaneRef outgoing_lane(const RouteSpec& route, std::size_t k) {
  LaneRef lane;
  lane.route = route.id;
  lane.lo = route.stop_lines[k];
  lane.hi = k + 1 < route.stop_lines.size() ? route.stop_lines[k + 1]
                                            : route.length;
  return lane;
}

}  // namespace

RoadNetwork RoadNetwork::build_grid(int rows, int cols, double edge_length) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("build_grid: rows and cols must be positive");
  }
  if (edge_length <= 0.0) {
    throw std::invalid_argument("build_grid: edge_length must be positive");
  }
  RoadNetwork net;
  net.rows = rows;
  net.cols = cols;
  net.edge_length = edge_length;

  net.intersections.resize(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      IntersectionSpec& x = net.intersections[r * cols + c];
      x.id = r * cols + c;
      x.row = r;
      x.col = c;
      if (r + 1 < rows) x.neighbors.push_back((r + 1) * cols + c);
      if (r > 0) x.neighbors.push_back((r - 1) * cols + c);
      if (c + 1 < cols) x.neighbors.push_back(r * cols + c + 1);
      if (c > 0) x.neighbors.push_back(r * cols + c - 1);
    }
  }

  const double L = edge_length;
  auto add_route = [&](Axis axis, int line, bool forward, int count,
                       double length) -> RouteSpec& {
    RouteSpec route;
    route.id = static_cast<int>(net.routes.size());
    route.axis = axis;
    route.line = line;
    route.forward = forward;
    route.length = length;
    route.intersections.reserve(count);
    route.stop_lines.reserve(count);
    net.routes.push_back(std::move(route));
    return net.routes.back();
  };

  // Eastbound then westbound per row; northbound then southbound per column.
  for (int r = 0; r < rows; ++r) {
    RouteSpec& east = add_route(Axis::horizontal, r, true, cols, (cols + 1) * L);
    for (int c = 0; c < cols; ++c) {
      east.intersections.push_back(r * cols + c);
      east.stop_lines.push_back((c + 1) * L);
    }
  }
  for (int r = 0; r < rows; ++r) {
    RouteSpec& west = add_route(Axis::horizontal, r, false, cols, (cols + 1) * L);
    for (int c = cols - 1; c >= 0; --c) {
      west.intersections.push_back(r * cols + c);
      west.stop_lines.push_back((cols - c) * L);
    }
  }
  for (int c = 0; c < cols; ++c) {
    RouteSpec& north = add_route(Axis::vertical, c, true, rows, (rows + 1) * L);
    for (int r = 0; r < rows; ++r) {
      north.intersections.push_back(r * cols + c);
      north.stop_lines.push_back((r + 1) * L);
    }
  }
  for (int c = 0; c < cols; ++c) {
    RouteSpec& south = add_route(Axis::vertical, c, false, rows, (rows + 1) * L);
    for (int r = rows - 1; r >= 0; --r) {
      south.intersections.push_back(r * cols + c);
      south.stop_lines.push_back((rows - r) * L);
    }
  }

  // Wire the per-intersection approach lanes.  Traffic arriving from the
  // north travels southbound, etc.
  for (const RouteSpec& route : net.routes) {
    for (std::size_t k = 0; k < route.intersections.size(); ++k) {
      IntersectionSpec& x = net.intersections[route.intersections[k]];
      if (route.axis == Axis::horizontal) {
        if (route.forward) {  // eastbound: arrives from the west
          x.incoming[kWest] = incoming_lane(route, k);
          x.outgoing[kEast] = outgoing_lane(route, k);
        } else {  // westbound: arrives from the east
          x.incoming[kEast] = incoming_lane(route, k);
          x.outgoing[kWest] = outgoing_lane(route, k);
        }
      } else {
        if (route.forward) {  // northbound: arrives from the south
          x.incoming[kSouth] = incoming_lane(route, k);
          x.outgoing[kNorth] = outgoing_lane(route, k);
        } else {  // southbound: arrives from the north
          x.incoming[kNorth] = incoming_lane(route, k);
          x.outgoing[kSouth] = outgoing_lane(route, k);
        }
      }
    }
  }
  return net;
}

}  // namespace gridlight::sim
