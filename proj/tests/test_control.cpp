// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/bench.hpp"
#include "condtraj/control.hpp"
#include "condtraj/error.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace condtraj;

namespace {

std::shared_ptr<const RoadNetwork> train_net() {
  static const auto net = std::make_shared<const RoadNetwork>(build_town(TownId::train));
  return net;
}

PolyTrajectory2D line(double vx, double vy = 0.0) {
  PolyTrajectory2D p;
  p.cx[3] = vx;
  p.cy[3] = vy;
  return p;
}

World route_world(std::uint64_t seed, double min_length, int cars = 1) {
  const auto net = train_net();
  std::mt19937_64 rng(seed);
  int start = -1;
  for (const auto &l : net->lanes) {
    if (!l.stub) {
      start = l.id;
      break;
    }
  }
  return spawn_scenario(net, cars, 0, seed, EgoSpec{random_route(*net, start, 10.0, min_length, rng), 0.0});
}

} // namespace

TEST_CASE("pid is at rest on a perfectly tracked path") {
  PidState pid;
  AgentState st;
  st.speed = 3.0;
  for (int i = 0; i < 10; ++i) {
    const auto o = pid_track(line(3.0), st, pid);
    CHECK(o.steer == 0.0);
    CHECK(std::abs(o.accel) < 1e-12);
    CHECK(o.target_speed == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("speed target and braking") {
  PidState pid;
  AgentState st;
  st.speed = 4.0;
  const auto stop = pid_track(PolyTrajectory2D{}, st, pid);
  CHECK(stop.target_speed == 0.0);
  CHECK(stop.accel == -ctl::kMaxBrake);
  CHECK(pid_track(line(10.0), st, pid).target_speed == ctl::kSpeedCap);
  CHECK(predicted_arc_length(line(3.0, 4.0)) == doctest::Approx(10.0).epsilon(1e-12));
  // quarter circle of radius 4 over 2 s, polyline through 0.1 s samples
  PolyTrajectory2D q;
  const auto pts = [] {
    PointSeries s;
    for (int i = 1; i <= 20; ++i) {
      const double a = 0.25 * M_PI * i / 10.0;
      s.push_back({0.1 * i, 4.0 * std::sin(a), 4.0 - 4.0 * std::cos(a)});
    }
    return s;
  }();
  q = fit_polynomial(pts);
  CHECK(predicted_arc_length(q) == doctest::Approx(2.0 * M_PI).epsilon(0.01));
  CHECK(pid_track(line(3.0, 0.2), st, pid).steer > 0.0);
  PidState fresh;
  CHECK(pid_track(line(3.0, -0.2), st, fresh).steer < 0.0);
}

TEST_CASE("lateral step response settles without large overshoot") {
  Pose2D pose{0.0, 0.5, 0.0};
  double v = 5.0;
  PidState pid;
  double max_neg = 0.0;
  for (int t = 0; t < 40; ++t) {
    PointSeries path; // the y = 0 line driven at 5 m/s, in the car frame
    for (int i = 1; i <= 20; ++i) path.push_back({0.1 * i, pose.x + v * 0.1 * i, 0.0});
    for (auto &q : path) {
      const Vec2 l = to_frame(Vec2{q.x, q.y}, pose);
      q.x = l.x;
      q.y = l.y;
    }
    AgentState st;
    st.pose = pose;
    st.speed = v;
    const auto o = pid_track(fit_polynomial(path), st, pid);
    integrate_car(pose, v, {o.steer, o.accel}, kTickSeconds);
    max_neg = std::max(max_neg, -pose.y);
  }
  CHECK(std::abs(pose.y) < 0.05);
  CHECK(max_neg < 0.3 * 0.5);
}

TEST_CASE("timeout scales with route length") {
  CHECK(task_timeout(400.0) == doctest::Approx(431.65).epsilon(1e-4));
  CHECK(task_timeout(0.0) == 0.0);
}

TEST_CASE("expert reaches the goal cleanly and deterministically") {
  const World w = route_world(3, 150.0);
  DrivePolicy expert;
  const auto r = drive_task(expert, w, task_timeout(w.ego().route.length()));
  CHECK(r.reached_goal);
  CHECK_FALSE(r.timed_out);
  CHECK(r.infractions.empty());
  CHECK(r.distance_m == doctest::Approx(w.ego().route.length()).epsilon(0.05));
  CHECK(r.elapsed == doctest::Approx(0.1 * (r.trace.size() - 1)));
  CHECK(drive_task(expert, w, task_timeout(w.ego().route.length())) == r);
}

TEST_CASE("a model that predicts nothing never moves and times out") {
  const World w = route_world(4, 150.0);
  const auto zeros = ModelParams::zeros();
  DrivePolicy p;
  p.kind = DrivePolicy::Kind::model;
  p.params = &zeros;
  const auto r = drive_task(p, w, 20.0);
  CHECK(r.timed_out);
  CHECK_FALSE(r.reached_goal);
  CHECK(r.trace.size() == 201);
  CHECK(r.distance_m < 1e-9);
  for (const auto &e : r.infractions) {
    CHECK(e.kind != InfractionKind::collision_car);
    CHECK(e.kind != InfractionKind::collision_static);
    CHECK(e.kind != InfractionKind::collision_pedestrian);
  }
  p.params = nullptr;
  CHECK_THROWS_AS(drive_task(p, w, 20.0), Error);
}

TEST_CASE("live samples match offline window extraction") {
  const World w = route_world(5, 200.0, 20);
  const auto params = ModelParams::init(6);
  DrivePolicy p;
  p.kind = DrivePolicy::Kind::model;
  p.params = &params;
  const auto r = drive_task(DrivePolicy{}, w, 30.0);
  REQUIRE(r.trace.size() > 60);
  const auto windows = extract_windows(r.trace, *train_net(), 0);
  REQUIRE_FALSE(windows.empty());
  for (const auto &s : windows) {
    const Sample live = build_sample_inputs(r.trace.ticks, static_cast<std::size_t>(s.center_tick), r.trace.meta.ego_id);
    CHECK(live.E == s.E);
    CHECK(live.V == s.V);
    CHECK(live.mask == s.mask);
    CHECK(live.M == s.M);
    CHECK(live.ctx == s.ctx);
    CHECK(forward(live, params).context == forward(s, params).context);
  }
  CHECK(drive_task(p, w, 10.0) == drive_task(p, w, 10.0));
}
