#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace gridlight::sim {

// Compass order used everywhere an intersection enumerates its four
// approaches: the observation layout, window features, and lane queries.
enum Dir : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

enum class Axis { horizontal, vertical };

// A span [lo, hi) of one route, measured along the direction of travel.
struct LaneRef {
  int route = -1;
  double lo = 0.0;
  double hi = 0.0;
};

struct RouteSpec {
  int id = 0;
  Axis axis = Axis::horizontal;
  int line = 0;       // row index for horizontal routes, column for vertical
  bool forward = false;  // eastbound / northbound when true
  double length = 0.0;
  std::vector<int> intersections;  // ids in travel order
  std::vector<double> stop_lines;  // positions in travel order (ascending)
};

struct IntersectionSpec {
  int id = 0;
  int row = 0;  // row 0 = south (bottom)
  int col = 0;  // col 0 = west (left)
  std::array<LaneRef, 4> incoming;  // indexed by Dir: lane arriving from there
  std::array<LaneRef, 4> outgoing;  // indexed by Dir: lane leaving toward there
  std::vector<int> neighbors;       // adjacent intersection ids
};

// A rows x cols lattice of signalized intersections.  Each of the rows
// horizontal and cols vertical roads carries one route per direction, and
// every route extends one edge length beyond its outermost intersection so
// boundary intersections also have four approaches.
struct RoadNetwork {
  int rows = 0, cols = 0;
  double edge_length = 0.0;
  std::vector<RouteSpec> routes;              // 2*(rows+cols) of them
  std::vector<IntersectionSpec> intersections;  // rows*cols, id = row*cols+col

  int agent_count() const { return rows * cols; }

  // Throws std::invalid_argument for non-positive dimensions.
  static RoadNetwork build_grid(int rows, int cols, double edge_length = 400.0);
};

}  // namespace gridlight::sim
