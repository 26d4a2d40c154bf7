// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/simworld.hpp"

#include "condtraj/error.hpp"
#include "condtraj/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <sstream>

namespace condtraj {

bool TrafficLightState::stop_indicated() const {
  if (phase == LightPhase::red) return true;
  return (green_ticks - ticks_in_phase) * kTickSeconds < sim::kAmberSeconds - 1e-9;
}

namespace {

bool same_route(const Route &a, const Route &b) {
  return a.lanes == b.lanes && a.pts == b.pts && a.s == b.s && a.start_s == b.start_s && a.end_s == b.end_s;
}

} // namespace

bool same_state(const World &a, const World &b) {
  if (a.tick != b.tick || a.clock != b.clock || a.rng_seed != b.rng_seed || !(a.rng == b.rng) ||
      a.ego_index != b.ego_index || a.lights != b.lights || a.agents.size() != b.agents.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    const auto &x = a.agents[i], &y = b.agents[i];
    if (x.agent_id != y.agent_id || x.kind != y.kind || !(x.pose == y.pose) || x.speed != y.speed ||
        !same_route(x.route, y.route) || x.route_s != y.route_s || !(x.control == y.control) ||
        x.committed_junction != y.committed_junction || x.occupied_node != y.occupied_node ||
        x.occupied_approach != y.occupied_approach || x.queued_node != y.queued_node ||
        x.queued_ticks != y.queued_ticks || !(x.ped == y.ped)) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Spawning

namespace {

Vec2 pedestrian_position(const RoadNetwork &net, const PedestrianState &ped) {
  const Crosswalk &cw = net.crosswalks[ped.crosswalk];
  return cw.a + (cw.b - cw.a) * ped.u;
}

bool clear_of(const std::vector<AgentState> &agents, Vec2 p, double min_dist) {
  for (const auto &a : agents) {
    if ((a.pose.position() - p).norm() < min_dist) return false;
  }
  return true;
}

} // namespace

World spawn_scenario(std::shared_ptr<const RoadNetwork> network, int n_cars, int n_pedestrians,
                     std::uint64_t seed, const std::optional<EgoSpec> &ego) {
  if (!network) throw Error(ErrorKind::InvalidArgument, "spawn_scenario: missing road network");
  if (n_cars < 1) throw Error(ErrorKind::InvalidArgument, "spawn_scenario: need at least the ego car");
  if (n_pedestrians < 0) throw Error(ErrorKind::InvalidArgument, "spawn_scenario: negative pedestrian count");
  const RoadNetwork &net = *network;

  World w;
  w.network = network;
  w.rng_seed = seed;
  w.rng.seed(seed);

  std::vector<int> drivable;
  for (const auto &l : net.lanes) {
    if (!l.stub) drivable.push_back(l.id);
  }
  std::uniform_int_distribution<std::size_t> pick_lane(0, drivable.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  constexpr int kMaxAttempts = 2000;
  constexpr double kSpawnSpacing = 10.0;
  for (int i = 0; i < n_cars; ++i) {
    AgentState car;
    car.agent_id = i;
    car.kind = AgentKind::car;
    if (i == 0 && ego) {
      if (ego->route.empty()) throw Error(ErrorKind::InvalidArgument, "spawn_scenario: empty ego route");
      car.route = ego->route;
      const Vec2 p = car.route.point_at(0.0);
      car.pose = {p.x, p.y, car.route.heading_at(0.0)};
      car.speed = ego->initial_speed;
    } else {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
        const Lane &lane = net.lanes[drivable[pick_lane(w.rng)]];
        const double s = 6.0 + unit(w.rng) * (lane.length - 12.0);
        const Vec2 p = lane.point_at(s);
        if (!clear_of(w.agents, p, kSpawnSpacing)) continue;
        car.route = random_route(net, lane.id, s, 2500.0, w.rng);
        car.pose = {p.x, p.y, lane.heading};
        placed = true;
      }
      if (!placed) {
        throw Error(ErrorKind::Spawn, "spawn_scenario: no room for car " + std::to_string(i) + " of " +
                                          std::to_string(n_cars));
      }
    }
    car.route_s = 0.0;
    w.agents.push_back(std::move(car));
  }

  if (n_pedestrians > 0 && net.crosswalks.empty()) {
    throw Error(ErrorKind::Spawn, "spawn_scenario: network has no crosswalks");
  }
  for (int i = 0; i < n_pedestrians; ++i) {
    AgentState ped;
    ped.agent_id = n_cars + i;
    ped.kind = AgentKind::pedestrian;
    bool placed = false;
    std::uniform_int_distribution<std::size_t> pick_cw(0, net.crosswalks.size() - 1);
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      ped.ped.crosswalk = static_cast<int>(pick_cw(w.rng));
      ped.ped.side = unit(w.rng) < 0.5 ? 0 : 1;
      ped.ped.u = ped.ped.side == 0 ? 0.0 : 1.0;
      ped.ped.wait_ticks = static_cast<int>(unit(w.rng) * 50.0);
      const Vec2 p = pedestrian_position(net, ped.ped);
      if (!clear_of(w.agents, p, 2.0 * sim::kCarRadius)) continue;
      const Crosswalk &cw = net.crosswalks[ped.ped.crosswalk];
      const Vec2 d = ped.ped.side == 0 ? cw.b - cw.a : cw.a - cw.b;
      ped.pose = {p.x, p.y, std::atan2(d.y, d.x)};
      placed = true;
    }
    if (!placed) throw Error(ErrorKind::Spawn, "spawn_scenario: no room for pedestrian " + std::to_string(i));
    w.agents.push_back(std::move(ped));
  }

  const int cycle = sim::kGreenTicks + sim::kRedTicks;
  std::uniform_int_distribution<int> offset(0, cycle - 1);
  // Own stream: light timing never depends on the agent population.
  std::mt19937_64 light_rng(derive_seed(seed, "world/lights"));
  w.lights.resize(net.intersections.size());
  for (std::size_t g = 0; g < w.lights.size(); ++g) {
    auto &l = w.lights[g];
    l.group_id = static_cast<int>(g);
    const int o = offset(light_rng);
    if (o < sim::kGreenTicks) {
      l.phase = LightPhase::green;
      l.ticks_in_phase = o;
    } else {
      l.phase = LightPhase::red;
      l.ticks_in_phase = o - sim::kGreenTicks;
    }
  }
  for (auto &a : w.agents) {
    if (a.kind == AgentKind::car) update_route_progress(a, true);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Dynamics

void integrate_car(Pose2D &pose, double &speed, const CarControl &control, double dt) {
  const double v0 = speed;
  const double a = control.accel;
  double dist = 0.0;
  double v1 = v0 + a * dt;
  if (v1 < 0.0) {
    dist = a < 0.0 ? v0 * v0 / (-2.0 * a) : 0.0;
    v1 = 0.0;
  } else if (v1 > sim::kCarSpeedCap) {
    const double tc = a > 0.0 ? std::max(0.0, (sim::kCarSpeedCap - v0) / a) : 0.0;
    dist = v0 * tc + 0.5 * a * tc * tc + sim::kCarSpeedCap * (dt - tc);
    v1 = sim::kCarSpeedCap;
  } else {
    dist = v0 * dt + 0.5 * a * dt * dt;
  }
  const double kappa = std::tan(control.steer) / sim::kWheelbase;
  const double dtheta = dist * kappa;
  // exact arc as chord length times the midpoint heading
  const double half = 0.5 * dtheta;
  const double chord = std::abs(half) < 1e-8 ? dist : dist * std::sin(half) / half;
  pose.x += chord * std::cos(pose.heading + half);
  pose.y += chord * std::sin(pose.heading + half);
  pose.heading = normalize_angle(pose.heading + dtheta);
  speed = v1;
}

void update_route_progress(AgentState &agent, bool global_search) {
  if (agent.route.empty()) return;
  const auto proj = global_search ? agent.route.project(agent.pose.position())
                                  : agent.route.project_near(agent.pose.position(), agent.route_s);
  agent.route_s = proj.s;
  agent.route_lateral = proj.lateral;
}

namespace {

void update_occupancy(const RoadNetwork &net, AgentState &car) {
  const int node = net.junction_at(car.pose.position());
  if (node != car.occupied_node) {
    car.occupied_node = node;
    car.occupied_approach = -1;
    if (node >= 0) {
      for (const auto &j : car.route.junctions) {
        if (j.node == node && car.route_s >= j.s_lane_end - 5.0 && car.route_s <= j.s_exit + 5.0) {
          car.occupied_approach = j.lane_in;
          break;
        }
      }
    }
  }
}

void update_queue(AgentState &car) {
  for (const auto &j : car.route.junctions) {
    if (j.s_stop < car.route_s - 1e-9) continue;
    if (car.committed_junction < 0 && car.speed < 0.1 && j.s_stop - car.route_s < 3.0) {
      if (car.queued_node != j.node) car.queued_ticks = 0;
      car.queued_node = j.node;
      car.queued_approach = j.lane_in;
      ++car.queued_ticks;
      return;
    }
    break;
  }
  car.queued_node = -1;
  car.queued_approach = -1;
  car.queued_ticks = 0;
}

bool crosswalk_clear(const World &w, const Crosswalk &cw) {
  const Vec2 mid = (cw.a + cw.b) * 0.5;
  const Vec2 d = cw.b - cw.a;
  const double len2 = d.dot(d);
  for (const auto &a : w.agents) {
    if (a.kind != AgentKind::car) continue;
    const Vec2 p = a.pose.position();
    if (a.speed > 0.5 && (p - mid).norm() < 20.0) return false;
    const double t = std::clamp((p - cw.a).dot(d) / len2, 0.0, 1.0);
    if ((p - (cw.a + d * t)).norm() < 3.0) return false;
  }
  return true;
}

void step_pedestrian(World &w, AgentState &ped, double dt) {
  const RoadNetwork &net = w.net();
  auto &st = ped.ped;
  const Crosswalk &cw = net.crosswalks[st.crosswalk];
  const double len = (cw.b - cw.a).norm();
  if (st.crossing) {
    const double du = sim::kPedestrianSpeed * dt / len;
    st.u += st.side == 0 ? du : -du;
    if (st.u >= 1.0 || st.u <= 0.0) {
      st.u = st.u >= 1.0 ? 1.0 : 0.0;
      st.side = 1 - st.side;
      st.crossing = false;
      std::uniform_int_distribution<int> wait(20, 80);
      st.wait_ticks = wait(w.rng);
    }
  } else if (st.wait_ticks > 0) {
    --st.wait_ticks;
  } else if (crosswalk_clear(w, cw)) {
    st.crossing = true;
  }
  const Vec2 p = cw.a + (cw.b - cw.a) * st.u;
  const Vec2 dir = st.side == 0 ? cw.b - cw.a : cw.a - cw.b;
  ped.pose = {p.x, p.y, std::atan2(dir.y, dir.x)};
  ped.speed = st.crossing ? sim::kPedestrianSpeed : 0.0;
}

} // namespace

void step_world(World &world, double dt) {
  if (std::abs(dt - kTickSeconds) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "step_world: the tick is fixed at 0.1 s");
  }
  const RoadNetwork &net = world.net();
  // Pedestrians decide against the pre-step car positions.
  for (auto &a : world.agents) {
    if (a.kind == AgentKind::pedestrian) step_pedestrian(world, a, dt);
  }
  for (auto &a : world.agents) {
    if (a.kind != AgentKind::car) continue;
    integrate_car(a.pose, a.speed, a.control, dt);
    update_route_progress(a);
    if (a.committed_junction >= 0 &&
        a.route_s > a.route.junctions[a.committed_junction].s_exit) {
      a.committed_junction = -1;
    }
    update_occupancy(net, a);
    update_queue(a);
  }
  for (auto &l : world.lights) {
    ++l.ticks_in_phase;
    if (l.phase == LightPhase::green && l.ticks_in_phase >= l.green_ticks) {
      l.phase = LightPhase::red;
      l.ticks_in_phase = 0;
    } else if (l.phase == LightPhase::red && l.ticks_in_phase >= l.red_ticks) {
      l.phase = LightPhase::green;
      l.ticks_in_phase = 0;
    }
  }
  ++world.tick;
  world.clock = static_cast<double>(world.tick) * kTickSeconds;
}

// ---------------------------------------------------------------------------
// Perception along the route

namespace {

std::optional<PathObstacle> scan_path(const World &w, int self, double range, double half_width,
                                      AgentKind kind, bool crossing_only) {
  const AgentState &me = w.agents[self];
  if (me.route.empty()) return std::nullopt;
  std::optional<PathObstacle> best;
  const Vec2 p0 = me.pose.position();
  for (std::size_t i = 0; i < w.agents.size(); ++i) {
    if (static_cast<int>(i) == self) continue;
    const AgentState &o = w.agents[i];
    if (o.kind != kind) continue;
    if (crossing_only && !o.ped.crossing) continue;
    const Vec2 q = o.pose.position();
    if ((q - p0).norm() > range + 3.0) continue;
    const auto proj = me.route.project_near(q, me.route_s, 0.0, range + 2.0);
    if (!(proj.distance < half_width)) continue;
    const double along = proj.s - me.route_s;
    if (along <= 0.0 || along > range) continue;
    if (best && along >= best->distance) continue;
    PathObstacle ob;
    ob.agent_index = static_cast<int>(i);
    ob.distance = along;
    ob.speed_along = o.speed * std::cos(normalize_angle(o.pose.heading - me.route.heading_at(proj.s)));
    best = ob;
  }
  return best;
}

int next_junction_index(const AgentState &a) {
  for (std::size_t j = 0; j < a.route.junctions.size(); ++j) {
    if (a.route.junctions[j].s_stop >= a.route_s - 1e-9) return static_cast<int>(j);
  }
  return -1;
}

bool junction_blocked(const World &w, int self, const RouteJunction &j) {
  for (std::size_t i = 0; i < w.agents.size(); ++i) {
    if (static_cast<int>(i) == self) continue;
    const AgentState &o = w.agents[i];
    if (o.kind != AgentKind::car) continue;
    if (o.committed_junction >= 0) {
      const auto &oj = o.route.junctions[o.committed_junction];
      if (oj.node == j.node && oj.lane_in != j.lane_in) return true;
    }
    if (o.occupied_node == j.node && o.occupied_approach != j.lane_in) return true;
    // Cars that have waited longer at the line from another approach go first.
    if (o.queued_node == j.node && o.queued_approach != j.lane_in) {
      const AgentState &me = w.agents[self];
      const int mine = me.queued_node == j.node ? me.queued_ticks : 0;
      if (o.queued_ticks > mine || (o.queued_ticks == mine && o.agent_id < me.agent_id)) return true;
    }
  }
  return false;
}

double stop_speed(double distance) {
  return std::sqrt(2.0 * sim::kComfortDecel * std::max(0.0, distance));
}

} // namespace

std::optional<PathObstacle> find_leader(const World &world, int agent_index, double range) {
  return scan_path(world, agent_index, range, sim::kCorridorHalfWidth, AgentKind::car, false);
}

// A crossing pedestrian blocks the whole crosswalk where the route passes it.
std::optional<PathObstacle> find_crossing_pedestrian(const World &world, int agent_index, double range) {
  auto best = scan_path(world, agent_index, range, sim::kPedestrianCorridorHalfWidth, AgentKind::pedestrian, true);
  const AgentState &me = world.agents[agent_index];
  if (me.route.empty()) return best;
  const Vec2 p0 = me.pose.position();
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const AgentState &o = world.agents[i];
    if (o.kind != AgentKind::pedestrian || !o.ped.crossing) continue;
    const Crosswalk &cw = world.net().crosswalks[o.ped.crosswalk];
    const Vec2 mid = (cw.a + cw.b) * 0.5;
    if ((mid - p0).norm() > range + 8.0) continue;
    const auto proj = me.route.project_near(mid, me.route_s, 0.0, range + 2.0);
    if (!(proj.distance < road::kRoadHalfWidth)) continue;
    const double along = proj.s - me.route_s;
    if (along <= 0.0 || along > range) continue;
    if (best && along >= best->distance) continue;
    best = PathObstacle{static_cast<int>(i), along, 0.0};
  }
  return best;
}

AutopilotCommand autopilot_command(const AgentState &agent, const World &world) {
  AutopilotCommand cmd;
  cmd.committed_junction = agent.committed_junction;
  if (agent.kind != AgentKind::car || agent.route.empty()) return cmd;
  const Route &route = agent.route;
  int self = -1;
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    if (world.agents[i].agent_id == agent.agent_id) self = static_cast<int>(i);
  }

  // Pure pursuit toward the lookahead point on the route.
  const Vec2 target = route.point_at(agent.route_s + sim::kLookahead);
  const Vec2 local = to_frame(target, agent.pose);
  const double ld = local.norm();
  if (ld > 1e-6) {
    const double alpha = std::atan2(local.y, local.x);
    cmd.steer = std::atan(2.0 * sim::kWheelbase * std::sin(alpha) / ld);
    cmd.steer = std::clamp(cmd.steer, -sim::kMaxSteer, sim::kMaxSteer);
  }

  // Speed planning: the tightest of cruise, goal, light, leader and pedestrian limits.
  const double v = agent.speed;
  double v_target = sim::kTargetSpeed;
  double stop_distance = std::numeric_limits<double>::infinity();

  const double to_goal = route.length() - agent.route_s;
  stop_distance = std::min(stop_distance, to_goal);

  const int jn = next_junction_index(agent);
  if (cmd.committed_junction >= 0 && jn == cmd.committed_junction) {
    const auto &j = route.junctions[jn];
    // A committed car that has nearly stopped short of the line re-evaluates.
    const double d_line = j.s_stop - agent.route_s;
    if (v < 1.0 && d_line > 0.5) cmd.committed_junction = -1;
    const auto &node = world.net().intersections[j.node];
    if (node.signalized && world.lights[node.light_group].phase == LightPhase::red &&
        v * v / (2.0 * sim::kMaxBrake) < d_line - 0.5) {
      cmd.committed_junction = -1;
    }
  }
  if (jn >= 0 && cmd.committed_junction != jn) {
    const auto &j = route.junctions[jn];
    const double d_line = j.s_stop - agent.route_s;
    const auto &light = world.lights[world.net().intersections[j.node].light_group];
    const bool must_stop = (world.net().intersections[j.node].signalized && light.stop_indicated()) ||
                           (self >= 0 && junction_blocked(world, self, j));
    if (must_stop) {
      stop_distance = std::min(stop_distance, d_line - 0.5);
    } else if (d_line <= v * v / (2.0 * sim::kComfortDecel) + 3.0) {
      cmd.committed_junction = jn;
    }
  }

  if (self >= 0) {
    if (auto lead = find_leader(world, self)) {
      const double vl = std::max(0.0, lead->speed_along);
      const double gap = lead->distance - sim::kFollowGap;
      const double vt = gap >= 0.0 ? vl + stop_speed(gap) : std::max(0.0, vl + gap);
      v_target = std::min(v_target, vt);
    }
    if (auto ped = find_crossing_pedestrian(world, self)) {
      stop_distance = std::min(stop_distance, ped->distance - sim::kPedestrianGap);
    }
  }

  v_target = std::min(v_target, stop_speed(stop_distance));
  double accel = 2.0 * (v_target - v);
  if (stop_distance < 20.0 && v > v_target) {
    // kinematic deceleration needed to halt at the stop point
    const double needed = v * v / (2.0 * std::max(stop_distance, 0.05));
    accel = std::min(accel, -needed);
  }
  if (stop_distance <= 0.05) accel = -sim::kMaxBrake;
  cmd.accel = std::clamp(accel, -sim::kMaxBrake, sim::kMaxAccel);
  return cmd;
}

void drive_background(World &world, int skip_index) {
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    if (static_cast<int>(i) == skip_index) continue;
    auto &a = world.agents[i];
    if (a.kind != AgentKind::car) continue;
    const auto cmd = autopilot_command(a, world);
    a.control = {cmd.steer, cmd.accel};
    a.committed_junction = cmd.committed_junction;
  }
}

ContextFeatures compute_context(const World &world, int agent_index) {
  ContextFeatures f;
  f.stop_line_distance() = 50.0;
  f.intersection_distance() = 50.0;
  f.leader_distance() = 50.0;
  f.pedestrian_distance() = 30.0;
  const AgentState &a = world.agents[agent_index];
  if (a.route.empty()) return f;
  const Route &r = a.route;

  for (const auto &j : r.junctions) {
    if (j.s_stop >= a.route_s) {
      const double d = j.s_stop - a.route_s;
      if (d < 50.0) {
        f.stop_line_distance() = d;
        const auto &node = world.net().intersections[j.node];
        f.light_stop() = node.signalized && world.lights[node.light_group].stop_indicated() ? 1.0 : 0.0;
      }
      break;
    }
  }
  for (const auto &j : r.junctions) {
    if (j.s_exit > a.route_s) {
      f.intersection_distance() = std::min(50.0, std::max(0.0, j.s_lane_end - a.route_s));
      break;
    }
  }
  f.lateral_offset() = a.route_lateral;
  f.heading_error() = normalize_angle(a.pose.heading - r.heading_at(a.route_s));
  if (auto lead = find_leader(world, agent_index)) {
    f.leader_distance() = lead->distance;
    f.leader_relative_speed() = lead->speed_along - a.speed;
  }
  if (auto ped = find_crossing_pedestrian(world, agent_index)) {
    f.pedestrian_distance() = ped->distance;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Recording and logs

const AgentSnapshot *EpisodeLog::find_agent(std::size_t tick, int id) const {
  const auto &agents = ticks.at(tick).agents;
  if (id >= 0 && id < static_cast<int>(agents.size()) && agents[id].id == id) return &agents[id];
  for (const auto &a : agents) {
    if (a.id == id) return &a;
  }
  return nullptr;
}

TickRecord snapshot(const World &world) {
  TickRecord rec;
  rec.tick = world.tick;
  rec.agents.reserve(world.agents.size());
  for (const auto &a : world.agents) {
    rec.agents.push_back({a.agent_id, a.kind, a.pose, a.speed, a.control});
  }
  rec.lights.reserve(world.lights.size());
  for (const auto &l : world.lights) rec.lights.push_back({l.group_id, l.phase, l.ticks_in_phase});
  rec.ego_ctx = compute_context(world, world.ego_index);
  rec.ego_route_s = world.ego().route_s;
  return rec;
}

EpisodeLog record_episode(std::shared_ptr<const RoadNetwork> network, std::uint64_t seed, double duration_s,
                          const RecordOptions &options) {
  if (!(duration_s > 0.0)) throw Error(ErrorKind::InvalidArgument, "record_episode: duration must be positive");
  std::mt19937_64 rng(derive_seed(seed, "episode/counts"));
  std::uniform_int_distribution<int> cars(options.min_cars, options.max_cars);
  std::uniform_int_distribution<int> peds(options.min_pedestrians, options.max_pedestrians);
  const int n_cars = cars(rng);
  const int n_peds = peds(rng);

  World w = spawn_scenario(network, n_cars, n_peds, seed);
  EpisodeLog log;
  log.meta.seed = seed;
  log.meta.town = network->town;
  log.meta.n_cars = n_cars;
  log.meta.n_pedestrians = n_peds;
  log.meta.ego_id = w.ego().agent_id;

  const long ticks = std::lround(duration_s / kTickSeconds);
  log.ticks.reserve(ticks);
  for (long t = 0; t < ticks; ++t) {
    drive_background(w, -1);
    log.ticks.push_back(snapshot(w));
    step_world(w);
  }
  return log;
}

std::string serialize_episode_log(const EpisodeLog &log) {
  nlohmann::json header = {
      {"format_version", log.meta.format_version},
      {"kind", "episode_log"},
      {"seed", log.meta.seed},
      {"town", to_string(log.meta.town)},
      {"n_cars", log.meta.n_cars},
      {"n_pedestrians", log.meta.n_pedestrians},
      {"tick_s", log.meta.tick_s},
      {"ego_id", log.meta.ego_id},
      {"ticks", log.ticks.size()},
      {"config_hash", log.meta.config_hash},
  };
  std::string out = header.dump();
  out += '\n';
  for (const auto &t : log.ticks) {
    out += "{\"tick\":";
    out += std::to_string(t.tick);
    out += ",\"agents\":[";
    for (std::size_t i = 0; i < t.agents.size(); ++i) {
      const auto &a = t.agents[i];
      if (i) out += ',';
      const double row[] = {a.pose.x, a.pose.y, a.pose.heading, a.speed, a.control.steer, a.control.accel};
      out += '[';
      out += std::to_string(a.id);
      out += ',';
      out += std::to_string(static_cast<int>(a.kind));
      for (double v : row) {
        out += ',';
        append_double(out, v);
      }
      out += ']';
    }
    out += "],\"lights\":[";
    for (std::size_t i = 0; i < t.lights.size(); ++i) {
      const auto &l = t.lights[i];
      if (i) out += ',';
      out += '[' + std::to_string(l.group) + ',' + std::to_string(static_cast<int>(l.phase)) + ',' +
             std::to_string(l.ticks_in_phase) + ']';
    }
    out += "],\"ctx\":";
    append_array(out, t.ego_ctx.values);
    out += ",\"route_s\":";
    append_double(out, t.ego_route_s);
    out += "}\n";
  }
  return out;
}

EpisodeLog parse_episode_log(const std::string &text) {
  EpisodeLog log;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string &msg) {
    throw Error(ErrorKind::Format, "episode log line " + std::to_string(line_no) + ": " + msg);
  };
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      fail(e.what());
    }
    try {
      if (line_no == 1) {
        if (j.value("kind", "") != "episode_log") fail("not an episode log");
        if (j.at("format_version").get<int>() != 1) fail("unsupported format_version");
        log.meta.seed = j.at("seed").get<std::uint64_t>();
        log.meta.town = town_from_string(j.at("town").get<std::string>());
        log.meta.n_cars = j.at("n_cars").get<int>();
        log.meta.n_pedestrians = j.at("n_pedestrians").get<int>();
        log.meta.tick_s = j.at("tick_s").get<double>();
        log.meta.ego_id = j.at("ego_id").get<int>();
        log.meta.config_hash = j.at("config_hash").get<std::string>();
        expected = j.at("ticks").get<std::size_t>();
        continue;
      }
      TickRecord t;
      t.tick = j.at("tick").get<long>();
      for (const auto &row : j.at("agents")) {
        if (row.size() != 8) fail("agent row needs 8 fields");
        AgentSnapshot a;
        a.id = row[0].get<int>();
        a.kind = static_cast<AgentKind>(row[1].get<int>());
        a.pose = {row[2].get<double>(), row[3].get<double>(), row[4].get<double>()};
        a.speed = row[5].get<double>();
        a.control = {row[6].get<double>(), row[7].get<double>()};
        t.agents.push_back(a);
      }
      for (const auto &row : j.at("lights")) {
        t.lights.push_back({row.at(0).get<int>(), static_cast<LightPhase>(row.at(1).get<int>()), row.at(2).get<int>()});
      }
      const auto &ctx = j.at("ctx");
      if (ctx.size() != ContextFeatures::kSize) fail("ctx needs 8 values");
      for (int k = 0; k < ContextFeatures::kSize; ++k) t.ego_ctx.values[k] = ctx[k].get<double>();
      t.ego_route_s = j.at("route_s").get<double>();
      log.ticks.push_back(std::move(t));
    } catch (const nlohmann::json::exception &e) {
      fail(e.what());
    }
  }
  if (line_no == 0) throw Error(ErrorKind::Format, "episode log: empty file");
  if (log.ticks.size() != expected) {
    throw Error(ErrorKind::Format, "episode log truncated: expected " + std::to_string(expected) + " ticks, got " +
                                       std::to_string(log.ticks.size()));
  }
  return log;
}

void write_episode_log(const EpisodeLog &log, const std::string &path) {
  write_file(path, serialize_episode_log(log));
}

EpisodeLog read_episode_log(const std::string &path) { return parse_episode_log(read_file(path)); }

} // namespace condtraj
