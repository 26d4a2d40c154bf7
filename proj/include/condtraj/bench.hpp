// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_BENCH_HPP
#define CONDTRAJ_BENCH_HPP

#include "condtraj/control.hpp"
#include "condtraj/model.hpp"
#include "condtraj/road_network.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace condtraj {

namespace bench {
inline constexpr int kTasksPerKind = 25;
inline constexpr double kStraightMinLength = 100.0;
inline constexpr double kMinLength = 300.0;
inline constexpr double kOppositeLaneMargin = 0.5;
inline constexpr int kOppositeLaneTicks = 5; // must persist longer than this
inline constexpr int kMinDynamicCars = 5;
} // namespace bench

enum class TaskKind { straight, one_turn, navigation, nav_dynamic };
inline constexpr int kNumTaskKinds = 4;
const char *to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string &name);

struct BenchTask {
  int id = 0;
  TaskKind kind = TaskKind::straight;
  TownId town = TownId::train;
  std::uint64_t seed = 0;
  int start_lane = -1;
  double start_s = 0.0;
  int goal_lane = -1;
  double goal_s = 0.0;
  Pose2D start;
  Pose2D goal;
  double route_length = 0.0;
  int turns = 0;
  int n_cars = 1; // including the ego
  int n_pedestrians = 0;
  bool operator==(const BenchTask &) const = default;
};

std::vector<BenchTask> generate_suite(const RoadNetwork &network, std::uint64_t seed,
                                      int per_kind = bench::kTasksPerKind,
                                      const std::vector<TaskKind> &kinds = {TaskKind::straight, TaskKind::one_turn,
                                                                            TaskKind::navigation,
                                                                            TaskKind::nav_dynamic});

Route task_route(const BenchTask &task, const RoadNetwork &network);
World task_world(const BenchTask &task, std::shared_ptr<const RoadNetwork> network);

struct BenchRun {
  BenchTask task;
  DriveResult result;
};

BenchRun run_task(const BenchTask &task, std::shared_ptr<const RoadNetwork> network, const DrivePolicy &policy);

std::vector<InfractionEvent> detect_infractions(const EpisodeLog &trace, const RoadNetwork &network);

struct LightCount {
  int encountered = 0;
  int run = 0;
};
// A light is encountered each time the ego crosses a signalized stop line;
// it is run when that happens on red.
LightCount count_light_crossings(const EpisodeLog &trace, const RoadNetwork &network);

double trace_distance_m(const EpisodeLog &trace);

struct SuccessCell {
  int successes = 0;
  int total = 0;
  double rate_pct() const { return total ? 100.0 * successes / total : 0.0; }
};

struct TownStats {
  double km = 0.0;
  std::array<int, kNumInfractionKinds> events{};
  int lights_encountered = 0;
  int lights_run = 0;
  // nullopt when no light was encountered
  std::optional<double> red_light_ratio_pct() const;
  // nullopt for zero events ("> km" convention)
  std::optional<double> km_per_event(InfractionKind kind) const;
};

struct BenchReport {
  std::map<std::pair<TaskKind, TownId>, SuccessCell> success;
  std::map<TownId, TownStats> towns;
  std::optional<MaeBlock> offline;
  std::string config_hash;
};

BenchReport aggregate_report(const std::vector<BenchRun> &runs, const std::optional<MaeBlock> &offline = std::nullopt);

// "> X" when no event was seen over X km.
std::string format_km_per_event(const TownStats &stats, InfractionKind kind);
std::string report_json(const BenchReport &report);
std::string report_table(const BenchReport &report);
std::string runs_csv(const std::vector<BenchRun> &runs);

} // namespace condtraj

#endif // CONDTRAJ_BENCH_HPP
