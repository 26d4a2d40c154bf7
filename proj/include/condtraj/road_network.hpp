// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_ROAD_NETWORK_HPP
#define CONDTRAJ_ROAD_NETWORK_HPP

#include "condtraj/trajectory.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace condtraj {

enum class TownId { train, test };

const char *to_string(TownId town);
TownId town_from_string(const std::string &name);

namespace road {
inline constexpr double kLaneWidth = 3.5;
inline constexpr double kRoadHalfWidth = kLaneWidth; // two lanes, one per direction
inline constexpr double kJunctionRadius = 10.0;
inline constexpr double kSidewalkWidth = 3.0;
inline constexpr double kStopLineSetback = 1.0;      // stop line sits this far before the lane end
inline constexpr double kCrosswalkDistance = 16.0;   // from the junction center
inline constexpr double kStubLength = 40.0;
inline constexpr double kMaxTurn = 2.0 * std::numbers::pi / 3.0;
} // namespace road

struct Intersection {
  int id = -1;
  Vec2 pos;
  double radius = road::kJunctionRadius;
  bool signalized = true;
  int light_group = -1;
  std::vector<int> incoming;  // lane ids ending here
  std::vector<int> outgoing;  // lane ids starting here
};

// Straight two-way road between two junction centers, or from a junction
// center out to the map boundary (a stub).
struct Road {
  int id = -1;
  int node_a = -1;
  int node_b = -1; // -1: map boundary
  Vec2 a, b;
  bool stub = false;
  int lane_ab = -1;
  int lane_ba = -1;
};

// Directed lane; the centerline is offset half a lane to the right of the
// road centerline (right-hand traffic).
struct Lane {
  int id = -1;
  int road = -1;
  int from_node = -1;
  int to_node = -1;
  Vec2 start, end;
  double heading = 0.0;
  double length = 0.0;
  double width = road::kLaneWidth;
  bool stub = false;

  Vec2 point_at(double s) const { return start + unit_vector(heading) * s; }
  double stop_line_s() const { return length - road::kStopLineSetback; }
  bool operator==(const Lane &) const = default;
};

// Drivable path through a junction from the end of one lane to the start of
// another.
struct Connector {
  int id = -1;
  int node = -1;
  int lane_in = -1;
  int lane_out = -1;
  double turn_angle = 0.0; // positive = left
  std::vector<Vec2> path;
  double length = 0.0;
};

struct Crosswalk {
  int id = -1;
  int node = -1;
  int road = -1;
  Vec2 a, b; // endpoints on the sidewalks
};

struct RoadNetwork {
  TownId town = TownId::train;
  double block_size = 100.0;
  Vec2 bounds_min, bounds_max;
  std::vector<Intersection> intersections;
  std::vector<Road> roads;
  std::vector<Lane> lanes;
  std::vector<Connector> connectors;
  std::vector<Crosswalk> crosswalks;
  std::vector<std::vector<int>> successors; // lane id -> connector ids

  // Throws InvalidInput describing the first violated invariant.
  void validate() const;

  // 0 on the road surface (lanes and junction discs); otherwise how far the
  // point lies beyond the paved edge.
  double offroad_depth(Vec2 p) const;
  bool on_road(Vec2 p) const { return offroad_depth(p) == 0.0; }
  // Depth beyond which buildings/static obstacles start.
  double static_obstacle_depth() const { return road::kSidewalkWidth; }

  int junction_at(Vec2 p) const;

  struct RoadProjection {
    int road = -1;
    double s = 0.0;
    double lateral = 0.0; // left of a->b positive
    double distance = 0.0;
  };
  RoadProjection nearest_road(Vec2 p) const;

  // Four corners of the sidewalk strip on the right of a lane.
  std::vector<Vec2> sidewalk_polygon(int lane_id) const;

  const Connector *find_connector(int lane_in, int lane_out) const;
};

RoadNetwork build_town(TownId town, double scale = 0.0);

double turn_angle_between(double heading_in, double heading_out);

struct RouteJunction {
  int node = -1;
  int lane_in = -1;
  int lane_out = -1;
  double turn_angle = 0.0;
  double s_lane_end = 0.0; // junction disc entry
  double s_stop = 0.0;     // stop line
  double s_exit = 0.0;     // start of the outgoing lane
};

struct RouteProjection {
  double s = 0.0;
  double lateral = 0.0; // left of the route positive
  double distance = 0.0;
  std::size_t segment = 0;
};

// Concatenated lane + connector polyline with arc-length parametrization.
struct Route {
  std::vector<int> lanes;
  std::vector<Vec2> pts;
  std::vector<double> s; // cumulative arc length per point
  std::vector<RouteJunction> junctions;
  double start_s = 0.0; // offset on the first lane
  double end_s = 0.0;   // offset on the last lane

  bool empty() const { return pts.size() < 2; }
  double length() const { return s.empty() ? 0.0 : s.back(); }
  Vec2 point_at(double arc) const;
  double heading_at(double arc) const;
  Vec2 goal() const { return pts.empty() ? Vec2{} : pts.back(); }
  RouteProjection project(Vec2 p) const;
  RouteProjection project_near(Vec2 p, double s_hint, double back = 5.0, double ahead = 25.0) const;
  int turn_count() const;
};

Route build_route(const RoadNetwork &net, const std::vector<int> &lanes, double start_s,
                  double end_s);

// Dijkstra over lanes; empty vector when the goal is unreachable.
std::vector<int> shortest_lane_path(const RoadNetwork &net, int start_lane, double start_s,
                                    int goal_lane, double goal_s);

Route random_route(const RoadNetwork &net, int start_lane, double start_s, double min_length,
                   std::mt19937_64 &rng);

// Nearest non-stub lane whose heading agrees with `heading` within 60 degrees.
struct LaneMatch {
  int lane = -1;
  double s = 0.0;
  double distance = 0.0;
};
LaneMatch match_lane(const RoadNetwork &net, const Pose2D &pose, bool allow_stub = false);

} // namespace condtraj

#endif // CONDTRAJ_ROAD_NETWORK_HPP
