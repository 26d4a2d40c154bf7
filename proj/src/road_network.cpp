// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/road_network.hpp"

#include "condtraj/error.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace condtraj {

const char *to_string(TownId town) { return town == TownId::train ? "train" : "test"; }

TownId town_from_string(const std::string &name) {
  if (name == "train") return TownId::train;
  if (name == "test") return TownId::test;
  throw Error(ErrorKind::InvalidArgument, "unknown town '" + name + "' (expected train|test)");
}

double turn_angle_between(double heading_in, double heading_out) {
  return normalize_angle(heading_out - heading_in);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SegmentProjection {
  double t = 0.0;
  double distance = 0.0;
  double lateral = 0.0;
};

SegmentProjection project_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 d = b - a;
  const double len2 = d.dot(d);
  SegmentProjection out;
  out.t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  const Vec2 q = a + d * out.t;
  out.distance = (p - q).norm();
  const double len = std::sqrt(len2);
  out.lateral = len > 0.0 ? d.cross(p - a) / len : 0.0;
  return out;
}

Vec2 bezier(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double u) {
  const double v = 1.0 - u;
  return p0 * (v * v * v) + p1 * (3.0 * v * v * u) + p2 * (3.0 * v * u * u) + p3 * (u * u * u);
}

void add_road(RoadNetwork &net, int node_a, int node_b, Vec2 a, Vec2 b, bool stub) {
  Road r;
  r.id = static_cast<int>(net.roads.size());
  r.node_a = node_a;
  r.node_b = node_b;
  r.a = a;
  r.b = b;
  r.stub = stub;

  const Vec2 d = (b - a) * (1.0 / (b - a).norm());
  const Vec2 right{d.y, -d.x};
  const double ra = node_a >= 0 ? road::kJunctionRadius : 0.0;
  const double rb = node_b >= 0 ? road::kJunctionRadius : 0.0;
  const double off = road::kLaneWidth / 2.0;

  auto make_lane = [&](Vec2 start, Vec2 end, int from, int to) {
    Lane l;
    l.id = static_cast<int>(net.lanes.size());
    l.road = r.id;
    l.from_node = from;
    l.to_node = to;
    l.start = start;
    l.end = end;
    l.heading = std::atan2(end.y - start.y, end.x - start.x);
    l.length = (end - start).norm();
    l.stub = stub;
    net.lanes.push_back(l);
    if (from >= 0) net.intersections[from].outgoing.push_back(l.id);
    if (to >= 0) net.intersections[to].incoming.push_back(l.id);
    return l.id;
  };
  r.lane_ab = make_lane(a + d * ra + right * off, b - d * rb + right * off, node_a, node_b);
  r.lane_ba = make_lane(b - d * rb - right * off, a + d * ra - right * off, node_b, node_a);
  net.roads.push_back(r);
}

void build_connectors(RoadNetwork &net) {
  net.successors.assign(net.lanes.size(), {});
  for (const auto &node : net.intersections) {
    for (int in_id : node.incoming) {
      const Lane &in = net.lanes[in_id];
      if (in.stub) continue;
      for (int out_id : node.outgoing) {
        const Lane &out = net.lanes[out_id];
        if (out.stub || out.road == in.road) continue;
        const double turn = turn_angle_between(in.heading, out.heading);
        if (std::abs(turn) > road::kMaxTurn + 1e-9) continue;

        Connector c;
        c.id = static_cast<int>(net.connectors.size());
        c.node = node.id;
        c.lane_in = in_id;
        c.lane_out = out_id;
        c.turn_angle = turn;
        const Vec2 p0 = in.end, p3 = out.start;
        const double chord = (p3 - p0).norm();
        double handle = chord / 3.0;
        if (std::abs(turn) > 1e-3) {
          const double radius = chord / (2.0 * std::sin(std::abs(turn) / 2.0));
          handle = 4.0 / 3.0 * std::tan(std::abs(turn) / 4.0) * radius;
        }
        const Vec2 p1 = p0 + unit_vector(in.heading) * handle;
        const Vec2 p2 = p3 - unit_vector(out.heading) * handle;
        const int steps = std::max(4, static_cast<int>(std::ceil(chord * 1.6 / 0.5)));
        c.path.reserve(steps + 1);
        for (int i = 0; i <= steps; ++i) {
          c.path.push_back(i == 0 ? p0 : (i == steps ? p3 : bezier(p0, p1, p2, p3, double(i) / steps)));
        }
        for (std::size_t i = 1; i < c.path.size(); ++i) c.length += (c.path[i] - c.path[i - 1]).norm();
        net.successors[in_id].push_back(c.id);
        net.connectors.push_back(std::move(c));
      }
    }
  }
}

void build_crosswalks(RoadNetwork &net) {
  const double half = road::kRoadHalfWidth + 1.5;
  for (const auto &node : net.intersections) {
    for (const auto &r : net.roads) {
      if (r.stub) continue;
      Vec2 dir;
      if (r.node_a == node.id) dir = r.b - r.a;
      else if (r.node_b == node.id) dir = r.a - r.b;
      else continue;
      dir = dir * (1.0 / dir.norm());
      const Vec2 normal{-dir.y, dir.x};
      const Vec2 center = node.pos + dir * road::kCrosswalkDistance;
      Crosswalk cw;
      cw.id = static_cast<int>(net.crosswalks.size());
      cw.node = node.id;
      cw.road = r.id;
      cw.a = center - normal * half;
      cw.b = center + normal * half;
      net.crosswalks.push_back(cw);
    }
  }
}

} // namespace

RoadNetwork build_town(TownId town, double scale) {
  RoadNetwork net;
  net.town = town;
  const int cols = town == TownId::train ? 4 : 5;
  const int rows = town == TownId::train ? 4 : 3;
  const double block = scale > 0.0 ? scale : (town == TownId::train ? 100.0 : 70.0);
  net.block_size = block;

  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      Intersection n;
      n.id = j * cols + i;
      n.pos = {i * block, j * block};
      n.light_group = n.id;
      net.intersections.push_back(n);
    }
  }
  auto node = [&](int i, int j) { return j * cols + i; };
  auto pos = [&](int i, int j) { return net.intersections[node(i, j)].pos; };

  for (int j = 0; j < rows; ++j)
    for (int i = 0; i + 1 < cols; ++i) add_road(net, node(i, j), node(i + 1, j), pos(i, j), pos(i + 1, j), false);
  for (int i = 0; i < cols; ++i)
    for (int j = 0; j + 1 < rows; ++j) add_road(net, node(i, j), node(i, j + 1), pos(i, j), pos(i, j + 1), false);
  if (town == TownId::test) add_road(net, node(1, 1), node(2, 2), pos(1, 1), pos(2, 2), false);

  const double stub = road::kStubLength;
  for (int i = 0; i < cols; ++i) {
    add_road(net, node(i, 0), -1, pos(i, 0), pos(i, 0) + Vec2{0.0, -stub}, true);
    add_road(net, node(i, rows - 1), -1, pos(i, rows - 1), pos(i, rows - 1) + Vec2{0.0, stub}, true);
  }
  for (int j = 0; j < rows; ++j) {
    add_road(net, node(0, j), -1, pos(0, j), pos(0, j) + Vec2{-stub, 0.0}, true);
    add_road(net, node(cols - 1, j), -1, pos(cols - 1, j), pos(cols - 1, j) + Vec2{stub, 0.0}, true);
  }
  net.bounds_min = {-stub, -stub};
  net.bounds_max = {(cols - 1) * block + stub, (rows - 1) * block + stub};

  build_connectors(net);
  build_crosswalks(net);
  net.validate();
  return net;
}

void RoadNetwork::validate() const {
  auto fail = [](const std::string &msg) { throw Error(ErrorKind::InvalidInput, "road network: " + msg); };
  auto at_boundary = [&](Vec2 p) {
    return std::abs(p.x - bounds_min.x) < 1e-6 || std::abs(p.x - bounds_max.x) < 1e-6 ||
           std::abs(p.y - bounds_min.y) < 1e-6 || std::abs(p.y - bounds_max.y) < 1e-6;
  };
  for (const auto &l : lanes) {
    if (!(l.width > 0.0)) fail("lane " + std::to_string(l.id) + " has non-positive width");
    if (!(l.length > 0.0)) fail("lane " + std::to_string(l.id) + " has non-positive length");
    const auto check_end = [&](int node, Vec2 p) {
      if (node >= 0) {
        if (node >= static_cast<int>(intersections.size())) fail("lane references missing junction");
        const double d = (p - intersections[node].pos).norm();
        if (d > intersections[node].radius + road::kLaneWidth) fail("lane endpoint detached from junction");
      } else if (!at_boundary(p)) {
        fail("lane " + std::to_string(l.id) + " ends in open space");
      }
    };
    check_end(l.from_node, l.start);
    check_end(l.to_node, l.end);
  }
  for (const auto &l : lanes) {
    if (l.stub || successors.empty()) continue;
    const auto &succ = successors[l.id];
    if (std::none_of(succ.begin(), succ.end(), [&](int c) { return !lanes[connectors[c].lane_out].stub; }))
      fail("lane " + std::to_string(l.id) + " is a dead end");
  }
  for (const auto &n : intersections) {
    if (n.signalized && (n.light_group < 0 || n.light_group >= static_cast<int>(intersections.size())))
      fail("light group references missing junction");
  }
}

double RoadNetwork::offroad_depth(Vec2 p) const {
  double depth = kInf;
  for (const auto &r : roads) {
    depth = std::min(depth, project_segment(p, r.a, r.b).distance - road::kRoadHalfWidth);
  }
  for (const auto &n : intersections) depth = std::min(depth, (p - n.pos).norm() - n.radius);
  return depth > 0.0 ? depth : 0.0;
}

int RoadNetwork::junction_at(Vec2 p) const {
  for (const auto &n : intersections) {
    if ((p - n.pos).norm() < n.radius) return n.id;
  }
  return -1;
}

RoadNetwork::RoadProjection RoadNetwork::nearest_road(Vec2 p) const {
  RoadProjection best;
  best.distance = kInf;
  for (const auto &r : roads) {
    const auto proj = project_segment(p, r.a, r.b);
    if (proj.distance < best.distance) {
      best.road = r.id;
      best.distance = proj.distance;
      best.s = proj.t * (r.b - r.a).norm();
      best.lateral = proj.lateral;
    }
  }
  return best;
}

std::vector<Vec2> RoadNetwork::sidewalk_polygon(int lane_id) const {
  const Lane &l = lanes.at(lane_id);
  const Vec2 d = unit_vector(l.heading);
  const Vec2 right{d.y, -d.x};
  const double inner = road::kLaneWidth / 2.0;
  const double outer = inner + road::kSidewalkWidth;
  return {l.start + right * inner, l.end + right * inner, l.end + right * outer, l.start + right * outer};
}

const Connector *RoadNetwork::find_connector(int lane_in, int lane_out) const {
  if (lane_in < 0 || lane_in >= static_cast<int>(successors.size())) return nullptr;
  for (int c : successors[lane_in]) {
    if (connectors[c].lane_out == lane_out) return &connectors[c];
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Routes

Vec2 Route::point_at(double arc) const {
  if (pts.empty()) return {};
  if (arc <= 0.0) return pts.front();
  if (arc >= s.back()) return pts.back();
  const auto it = std::upper_bound(s.begin(), s.end(), arc);
  const std::size_t i = static_cast<std::size_t>(it - s.begin()) - 1;
  const double seg = s[i + 1] - s[i];
  const double u = seg > 0.0 ? (arc - s[i]) / seg : 0.0;
  return pts[i] + (pts[i + 1] - pts[i]) * u;
}

double Route::heading_at(double arc) const {
  if (pts.size() < 2) return 0.0;
  std::size_t i = 0;
  if (arc >= s.back()) {
    i = pts.size() - 2;
  } else if (arc > 0.0) {
    i = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), arc) - s.begin()) - 1;
  }
  i = std::min(i, pts.size() - 2);
  const Vec2 d = pts[i + 1] - pts[i];
  return std::atan2(d.y, d.x);
}

namespace {

RouteProjection project_range(const Route &r, Vec2 p, std::size_t first, std::size_t last) {
  RouteProjection best;
  best.distance = kInf;
  for (std::size_t i = first; i < last && i + 1 < r.pts.size(); ++i) {
    const auto proj = project_segment(p, r.pts[i], r.pts[i + 1]);
    if (proj.distance < best.distance - 1e-12) {
      best.distance = proj.distance;
      best.s = r.s[i] + proj.t * (r.s[i + 1] - r.s[i]);
      best.lateral = proj.lateral;
      best.segment = i;
    }
  }
  return best;
}

} // namespace

RouteProjection Route::project(Vec2 p) const { return project_range(*this, p, 0, pts.size()); }

RouteProjection Route::project_near(Vec2 p, double s_hint, double back, double ahead) const {
  if (pts.size() < 2) return {};
  const double lo = s_hint - back, hi = s_hint + ahead;
  auto first_it = std::upper_bound(s.begin(), s.end(), lo);
  std::size_t first = first_it == s.begin() ? 0 : static_cast<std::size_t>(first_it - s.begin()) - 1;
  auto last_it = std::lower_bound(s.begin(), s.end(), hi);
  std::size_t last = static_cast<std::size_t>(last_it - s.begin()) + 1;
  last = std::min(last, pts.size());
  return project_range(*this, p, first, last);
}

int Route::turn_count() const {
  int n = 0;
  for (const auto &j : junctions) {
    if (std::abs(j.turn_angle) > std::numbers::pi / 6.0) ++n;
  }
  return n;
}

Route build_route(const RoadNetwork &net, const std::vector<int> &lanes, double start_s, double end_s) {
  Route r;
  r.lanes = lanes;
  r.start_s = start_s;
  r.end_s = end_s;
  auto push = [&](Vec2 p) {
    if (!r.pts.empty()) {
      const double d = (p - r.pts.back()).norm();
      if (d < 1e-9) return;
      r.s.push_back(r.s.back() + d);
    } else {
      r.s.push_back(0.0);
    }
    r.pts.push_back(p);
  };
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const Lane &lane = net.lanes.at(lanes[i]);
    const double a = i == 0 ? start_s : 0.0;
    const double b = i + 1 == lanes.size() ? end_s : lane.length;
    push(lane.point_at(a));
    push(lane.point_at(b));
    if (i + 1 < lanes.size()) {
      const Connector *c = net.find_connector(lanes[i], lanes[i + 1]);
      if (!c) {
        throw Error(ErrorKind::InvalidInput, "route: lanes " + std::to_string(lanes[i]) + " -> " +
                                                 std::to_string(lanes[i + 1]) + " are not connected");
      }
      RouteJunction j;
      j.node = c->node;
      j.lane_in = c->lane_in;
      j.lane_out = c->lane_out;
      j.turn_angle = c->turn_angle;
      j.s_lane_end = r.s.back();
      j.s_stop = j.s_lane_end - road::kStopLineSetback;
      for (std::size_t k = 1; k < c->path.size(); ++k) push(c->path[k]);
      j.s_exit = r.s.back();
      r.junctions.push_back(j);
    }
  }
  return r;
}

std::vector<int> shortest_lane_path(const RoadNetwork &net, int start_lane, double start_s, int goal_lane,
                                    double goal_s) {
  if (start_lane == goal_lane && goal_s >= start_s) return {start_lane};
  const std::size_t n = net.lanes.size();
  std::vector<double> dist(n, kInf);
  std::vector<int> prev(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const double first = net.lanes[start_lane].length - start_s;
  for (int c : net.successors[start_lane]) {
    const auto &conn = net.connectors[c];
    const double d = first + conn.length;
    if (d < dist[conn.lane_out]) {
      dist[conn.lane_out] = d;
      prev[conn.lane_out] = -2; // reached straight from the start lane
      pq.push({d, conn.lane_out});
    }
  }
  std::vector<char> done(n, 0);
  while (!pq.empty()) {
    const auto [d, lane] = pq.top();
    pq.pop();
    if (done[lane]) continue;
    done[lane] = 1;
    if (lane == goal_lane) break;
    for (int c : net.successors[lane]) {
      const auto &conn = net.connectors[c];
      const double nd = d + net.lanes[lane].length + conn.length;
      if (nd < dist[conn.lane_out]) {
        dist[conn.lane_out] = nd;
        prev[conn.lane_out] = lane;
        pq.push({nd, conn.lane_out});
      }
    }
  }
  if (dist[goal_lane] == kInf) return {};
  std::vector<int> path;
  int cur = goal_lane;
  while (cur >= 0) {
    path.push_back(cur);
    const int p = prev[cur];
    if (p == -2) break;
    cur = p;
  }
  path.push_back(start_lane);
  std::reverse(path.begin(), path.end());
  return path;
}

Route random_route(const RoadNetwork &net, int start_lane, double start_s, double min_length,
                   std::mt19937_64 &rng) {
  std::vector<int> lanes{start_lane};
  double total = net.lanes[start_lane].length - start_s;
  while (total < min_length) {
    const auto &succ = net.successors[lanes.back()];
    if (succ.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, succ.size() - 1);
    const auto &c = net.connectors[succ[pick(rng)]];
    lanes.push_back(c.lane_out);
    total += c.length + net.lanes[c.lane_out].length;
  }
  return build_route(net, lanes, start_s, net.lanes[lanes.back()].length);
}

LaneMatch match_lane(const RoadNetwork &net, const Pose2D &pose, bool allow_stub) {
  LaneMatch best;
  best.distance = kInf;
  for (const auto &l : net.lanes) {
    if (l.stub && !allow_stub) continue;
    if (std::abs(normalize_angle(pose.heading - l.heading)) > std::numbers::pi / 3.0) continue;
    const auto proj = project_segment(pose.position(), l.start, l.end);
    if (proj.distance < best.distance) {
      best.lane = l.id;
      best.s = proj.t * l.length;
      best.distance = proj.distance;
    }
  }
  return best;
}

} // namespace condtraj
