// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/control.hpp"

#include "condtraj/augment.hpp"
#include "condtraj/bench.hpp"
#include "condtraj/dataset.hpp"
#include "condtraj/error.hpp"
#include "condtraj/util.hpp"

#include <algorithm>
#include <cmath>

namespace condtraj {

const char *to_string(InfractionKind kind) {
  switch (kind) {
  case InfractionKind::opposite_lane: return "opposite_lane";
  case InfractionKind::sidewalk: return "sidewalk";
  case InfractionKind::collision_static: return "collision_static";
  case InfractionKind::collision_car: return "collision_car";
  case InfractionKind::collision_pedestrian: return "collision_pedestrian";
  case InfractionKind::red_light_run: return "red_light_run";
  }
  return "?";
}

double predicted_arc_length(const PolyTrajectory2D &poly) {
  double len = 0.0;
  Vec2 prev = poly.eval(0.0);
  for (int i = 1; i <= ds::kFutureTicks; ++i) {
    const Vec2 p = poly.eval(i * kTickSeconds);
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

namespace {

double pid_update(PidChannel &ch, double error, double dt) {
  ch.integral = std::clamp(ch.integral + error * dt, -ctl::kIntegralLimit, ctl::kIntegralLimit);
  const double deriv = ch.has_prev ? (error - ch.prev_error) / dt : 0.0;
  ch.prev_error = error;
  ch.has_prev = true;
  return ch.kp * error + ch.ki * ch.integral + ch.kd * deriv;
}

} // namespace

PidOutput pid_track(const PolyTrajectory2D &ego_poly, const AgentState &state, PidState &pid) {
  PidOutput out;
  out.lateral_error = ego_poly.eval(ctl::kLookaheadTime).y;
  out.steer = std::clamp(pid_update(pid.lateral, out.lateral_error, pid.dt), -ctl::kMaxSteer, ctl::kMaxSteer);

  out.target_speed = std::min(predicted_arc_length(ego_poly) / kHorizonSeconds, ctl::kSpeedCap);
  if (out.target_speed < ctl::kStopTarget) {
    // predicted stop: brake fully and drop the speed history
    pid.speed.integral = 0.0;
    pid.speed.has_prev = false;
    out.accel = -ctl::kMaxBrake;
  } else {
    out.accel = pid_update(pid.speed, out.target_speed - state.speed, pid.dt);
  }
  out.accel = std::clamp(out.accel, -ctl::kMaxBrake, ctl::kMaxAccel);
  return out;
}

double task_timeout(double route_length) { return ctl::kTimeoutFactor * route_length / ctl::kTimeoutSpeed; }

namespace {

bool replan(const RoadNetwork &net, AgentState &ego, int goal_lane, double goal_s) {
  const auto m = match_lane(net, ego.pose);
  if (m.lane < 0) return false;
  const auto lanes = shortest_lane_path(net, m.lane, m.s, goal_lane, goal_s);
  if (lanes.empty()) return false;
  Route r = build_route(net, lanes, m.s, goal_s);
  if (r.empty()) return false;
  ego.route = std::move(r);
  ego.committed_junction = -1;
  update_route_progress(ego, true);
  return true;
}

} // namespace

DriveResult drive_task(const DrivePolicy &policy, World world, double timeout_s) {
  if (policy.kind == DrivePolicy::Kind::model && !policy.params) {
    throw Error(ErrorKind::InvalidArgument, "drive_task: model policy without parameters");
  }
  const RoadNetwork &net = world.net();
  const int ego_i = world.ego_index;
  AgentState &ego0 = world.ego();
  if (ego0.route.empty()) throw Error(ErrorKind::InvalidArgument, "drive_task: ego has no route");
  const Vec2 goal = ego0.route.goal();
  const int goal_lane = ego0.route.lanes.back();
  const double goal_s = ego0.route.end_s;

  DriveResult res;
  res.timeout = timeout_s;
  res.route_length = ego0.route.length();
  res.trace.meta.seed = world.rng_seed;
  res.trace.meta.town = net.town;
  res.trace.meta.ego_id = ego0.agent_id;
  for (const auto &a : world.agents) {
    (a.kind == AgentKind::car ? res.trace.meta.n_cars : res.trace.meta.n_pedestrians) += 1;
  }

  PidState pid = policy.pid;
  const long max_ticks = static_cast<long>(std::ceil(timeout_s / kTickSeconds - 1e-9));
  for (long t = 0;; ++t) {
    AgentState &ego = world.ego();
    // The ego's junction claim is always tracked so that other cars yield to
    // it; the ego decides first, as in recording.
    const auto expert = autopilot_command(ego, world);
    ego.committed_junction = expert.committed_junction;
    ego.control = {expert.steer, expert.accel};
    drive_background(world, ego_i);
    res.trace.ticks.push_back(snapshot(world));

    if ((ego.pose.position() - goal).norm() < ctl::kGoalTolerance) {
      res.reached_goal = true;
      break;
    }
    if (net.offroad_depth(ego.pose.position()) + sim::kCarRadius > net.static_obstacle_depth()) {
      res.immobilized = true;
      break;
    }
    if (t >= max_ticks) {
      res.timed_out = true;
      break;
    }

    CarControl cmd;
    if (policy.kind == DrivePolicy::Kind::expert) {
      cmd = {expert.steer, expert.accel};
    } else {
      const std::size_t now = res.trace.ticks.size() - 1;
      Sample s = build_sample_inputs(res.trace.ticks, now, ego.agent_id);
      s.nc = live_navigation_command(ego.route, ego.route_s, net);
      if (policy.sigma_long > 0.0 || policy.sigma_lat > 0.0) {
        s = perturb_positions(s, policy.sigma_long, policy.sigma_lat,
                              derive_seed(policy.noise_seed, "live-noise/" + std::to_string(t)));
      }
      const Prediction pr = forward(s, *policy.params);
      const PidOutput o = pid_track(pr.ego, ego, pid);
      cmd = {o.steer, o.accel};
    }
    ego.control = cmd;
    res.trace.ticks.back().agents[ego_i].control = cmd;

    step_world(world);
    AgentState &after = world.ego();
    if (std::abs(after.route_lateral) > ctl::kReplanOffset && replan(net, after, goal_lane, goal_s)) ++res.replans;
  }
  res.elapsed = world.clock;
  res.distance_m = trace_distance_m(res.trace);
  res.infractions = detect_infractions(res.trace, net);
  const auto lights = count_light_crossings(res.trace, net);
  res.lights_encountered = lights.encountered;
  res.lights_run = lights.run;
  return res;
}

} // namespace condtraj
