// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_SIMWORLD_HPP
#define CONDTRAJ_SIMWORLD_HPP

#include "condtraj/road_network.hpp"
#include "condtraj/trajectory.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace condtraj {

namespace sim {
inline constexpr double kWheelbase = 2.5;
inline constexpr double kCarRadius = 1.2;
inline constexpr double kPedestrianRadius = 0.4;
inline constexpr double kCarSpeedCap = 8.33;
inline constexpr double kTargetSpeed = 5.56; // 20 kph
inline constexpr double kLookahead = 6.0;
inline constexpr double kFollowGap = 8.0;
inline constexpr double kPedestrianGap = 6.0;
inline constexpr double kMaxSteer = 0.6;
inline constexpr double kMaxBrake = 4.0;
inline constexpr double kMaxAccel = 2.0;
inline constexpr double kComfortDecel = 2.5;
inline constexpr double kPedestrianSpeed = 1.2;
inline constexpr int kGreenTicks = 100;
inline constexpr int kRedTicks = 80;
inline constexpr double kAmberSeconds = 3.0;
inline constexpr double kLeaderRange = 50.0;
inline constexpr double kPedestrianRange = 30.0;
inline constexpr double kCorridorHalfWidth = 1.8;
inline constexpr double kPedestrianCorridorHalfWidth = 2.2;
} // namespace sim

enum class AgentKind { car = 0, pedestrian = 1 };
enum class LightPhase { green = 0, red = 1 };

struct CarControl {
  double steer = 0.0;
  double accel = 0.0;
  bool operator==(const CarControl &) const = default;
};

struct PedestrianState {
  int crosswalk = -1;
  int side = 0; // 0: at/leaving endpoint a, 1: at/leaving endpoint b
  bool crossing = false;
  double u = 0.0; // fraction travelled from a to b
  int wait_ticks = 0;
  bool operator==(const PedestrianState &) const = default;
};

struct AgentState {
  int agent_id = -1;
  AgentKind kind = AgentKind::car;
  Pose2D pose;
  double speed = 0.0;
  Route route;
  double route_s = 0.0;
  double route_lateral = 0.0;
  CarControl control;
  int committed_junction = -1; // index into route.junctions
  int occupied_node = -1;
  int occupied_approach = -1;
  int queued_node = -1; // junction the car is waiting at, stopped at the line
  int queued_approach = -1;
  int queued_ticks = 0;
  PedestrianState ped;
};

struct TrafficLightState {
  int group_id = -1;
  LightPhase phase = LightPhase::green;
  int ticks_in_phase = 0;
  int green_ticks = sim::kGreenTicks;
  int red_ticks = sim::kRedTicks;

  double time_in_phase() const { return ticks_in_phase * kTickSeconds; }
  // Red, or the last seconds of green (the amber window).
  bool stop_indicated() const;
  bool operator==(const TrafficLightState &) const = default;
};

// Eight scalar observations of the ego situation; substitute for camera input.
struct ContextFeatures {
  static constexpr int kSize = 8;
  std::array<double, kSize> values{};

  double &stop_line_distance() { return values[0]; }
  double &light_stop() { return values[1]; }
  double &intersection_distance() { return values[2]; }
  double &lateral_offset() { return values[3]; }
  double &heading_error() { return values[4]; }
  double &leader_distance() { return values[5]; }
  double &leader_relative_speed() { return values[6]; }
  double &pedestrian_distance() { return values[7]; }
  double lateral_offset() const { return values[3]; }
  double heading_error() const { return values[4]; }
  bool operator==(const ContextFeatures &) const = default;
};

struct World {
  std::shared_ptr<const RoadNetwork> network;
  std::vector<AgentState> agents;
  std::vector<TrafficLightState> lights; // indexed by light group
  long tick = 0;
  double clock = 0.0;
  std::uint64_t rng_seed = 0;
  std::mt19937_64 rng;
  int ego_index = 0;

  const RoadNetwork &net() const { return *network; }
  AgentState &ego() { return agents[ego_index]; }
  const AgentState &ego() const { return agents[ego_index]; }
};

// Compares every piece of dynamic state, including the RNG.
bool same_state(const World &a, const World &b);

struct EgoSpec {
  Route route;
  double initial_speed = 0.0;
};

World spawn_scenario(std::shared_ptr<const RoadNetwork> network, int n_cars, int n_pedestrians,
                     std::uint64_t seed, const std::optional<EgoSpec> &ego = std::nullopt);

// Fixed tick: dt must equal 0.1 s.
void step_world(World &world, double dt = kTickSeconds);

// Advances one car under the kinematic bicycle model.
void integrate_car(Pose2D &pose, double &speed, const CarControl &control, double dt);

struct AutopilotCommand {
  double steer = 0.0;
  double accel = 0.0;
  int committed_junction = -1;
};

AutopilotCommand autopilot_command(const AgentState &agent, const World &world);

// Computes autopilot commands for every car except `skip_index`, in agent
// order, recording junction commitments as it goes.
void drive_background(World &world, int skip_index);

struct PathObstacle {
  int agent_index = -1;
  double distance = 0.0;   // along the route, center to center
  double speed_along = 0.0;
};

std::optional<PathObstacle> find_leader(const World &world, int agent_index,
                                        double range = sim::kLeaderRange);
std::optional<PathObstacle> find_crossing_pedestrian(const World &world, int agent_index,
                                                     double range = sim::kPedestrianRange);

ContextFeatures compute_context(const World &world, int agent_index);

// Re-projects a car onto its route (after external pose changes).
void update_route_progress(AgentState &agent, bool global_search = false);

// ---------------------------------------------------------------------------
// Episode logs

struct AgentSnapshot {
  int id = -1;
  AgentKind kind = AgentKind::car;
  Pose2D pose;
  double speed = 0.0;
  CarControl control;
  bool operator==(const AgentSnapshot &) const = default;
};

struct LightSnapshot {
  int group = -1;
  LightPhase phase = LightPhase::green;
  int ticks_in_phase = 0;
  bool operator==(const LightSnapshot &) const = default;
};

struct TickRecord {
  long tick = 0;
  std::vector<AgentSnapshot> agents;
  std::vector<LightSnapshot> lights;
  ContextFeatures ego_ctx;
  double ego_route_s = 0.0;
  bool operator==(const TickRecord &) const = default;
};

struct EpisodeMeta {
  int format_version = 1;
  std::uint64_t seed = 0;
  TownId town = TownId::train;
  int n_cars = 0;
  int n_pedestrians = 0;
  double tick_s = kTickSeconds;
  int ego_id = 0;
  std::string config_hash;
  bool operator==(const EpisodeMeta &) const = default;
};

struct EpisodeLog {
  EpisodeMeta meta;
  std::vector<TickRecord> ticks;

  std::size_t size() const { return ticks.size(); }
  const AgentSnapshot *find_agent(std::size_t tick, int id) const;
  bool operator==(const EpisodeLog &) const = default;
};

TickRecord snapshot(const World &world);

struct RecordOptions {
  int min_cars = 5, max_cars = 15;
  int min_pedestrians = 2, max_pedestrians = 6;
};

EpisodeLog record_episode(std::shared_ptr<const RoadNetwork> network, std::uint64_t seed,
                          double duration_s, const RecordOptions &options = {});

std::string serialize_episode_log(const EpisodeLog &log);
EpisodeLog parse_episode_log(const std::string &text);
void write_episode_log(const EpisodeLog &log, const std::string &path);
EpisodeLog read_episode_log(const std::string &path);

} // namespace condtraj

#endif // CONDTRAJ_SIMWORLD_HPP
