// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_CONTROL_HPP
#define CONDTRAJ_CONTROL_HPP

#include "condtraj/model.hpp"
#include "condtraj/simworld.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace condtraj {

namespace ctl {
inline constexpr double kLookaheadTime = 0.5;
inline constexpr double kSpeedCap = 5.56;
inline constexpr double kStopTarget = 0.2;
inline constexpr double kMaxSteer = 0.5;
inline constexpr double kMaxAccel = 2.0;
inline constexpr double kMaxBrake = 4.0;
inline constexpr double kIntegralLimit = 10.0;
inline constexpr double kGoalTolerance = 3.0;
inline constexpr double kTimeoutSpeed = 2.78; // 10 kph
inline constexpr double kTimeoutFactor = 3.0;
inline constexpr double kReplanOffset = 5.0;
} // namespace ctl

struct PidChannel {
  double kp = 0.0, ki = 0.0, kd = 0.0;
  double integral = 0.0;
  double prev_error = 0.0;
  bool has_prev = false;
  bool operator==(const PidChannel &) const = default;
};

struct PidState {
  PidChannel lateral{0.8, 0.0, 0.02};
  PidChannel speed{1.0, 0.1, 0.0};
  double dt = kTickSeconds;
  bool operator==(const PidState &) const = default;
};

struct PidOutput {
  double steer = 0.0;
  double accel = 0.0;
  double lateral_error = 0.0;
  double target_speed = 0.0;
};

// Arc length of the polynomial over [0, horizon] (polyline through 0.1 s samples).
double predicted_arc_length(const PolyTrajectory2D &poly);

// `pid` is updated in place.
PidOutput pid_track(const PolyTrajectory2D &ego_poly, const AgentState &state, PidState &pid);

enum class InfractionKind { opposite_lane, sidewalk, collision_static, collision_car, collision_pedestrian, red_light_run };
inline constexpr int kNumInfractionKinds = 6;
const char *to_string(InfractionKind kind);

struct InfractionEvent {
  InfractionKind kind = InfractionKind::sidewalk;
  long tick = 0;
  Vec2 position;
  int other_id = -1;
  bool operator==(const InfractionEvent &) const = default;
};

struct DriveResult {
  bool reached_goal = false;
  bool timed_out = false;
  bool immobilized = false;
  double elapsed = 0.0;
  double timeout = 0.0;
  double route_length = 0.0;
  double distance_m = 0.0;
  int replans = 0;
  EpisodeLog trace;
  std::vector<InfractionEvent> infractions;
  int lights_encountered = 0;
  int lights_run = 0;
  bool operator==(const DriveResult &) const = default;
};

double task_timeout(double route_length);

struct DrivePolicy {
  enum class Kind { expert, model } kind = Kind::expert;
  const ModelParams *params = nullptr;
  double sigma_long = 0.0; // live input noise
  double sigma_lat = 0.0;
  std::uint64_t noise_seed = 0;
  PidState pid;
};

// `world` holds the ego (agent ego_index) with its route already assigned.
DriveResult drive_task(const DrivePolicy &policy, World world, double timeout_s);

} // namespace condtraj

#endif // CONDTRAJ_CONTROL_HPP
