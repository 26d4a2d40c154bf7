// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_DATASET_HPP
#define CONDTRAJ_DATASET_HPP

#include "condtraj/simworld.hpp"
#include "condtraj/trajectory.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace condtraj {

namespace ds {
inline constexpr int kT = 20;      // past ticks per window
inline constexpr int kK = 3;       // sliding window size
inline constexpr int kN = 5;       // predicted neighbors
inline constexpr int kRows = 13;   // longitudinal cells
inline constexpr int kCols = 3;    // lateral cells
inline constexpr int kChannels = 2 * kK;
inline constexpr double kCellLength = 5.0;
inline constexpr double kCellWidth = 3.5;
inline constexpr double kHalfLength = 0.5 * kRows * kCellLength; // 32.5
inline constexpr double kHalfWidth = 0.5 * kCols * kCellWidth;   // 5.25
inline constexpr int kHistorySize = kT * kK * 2;
inline constexpr int kMapSize = kRows * kCols * kT * kChannels;
inline constexpr int kFutureTicks = 20;
inline constexpr int kWindowTicks = kT + kFutureTicks; // 40
inline constexpr double kZoneRadius = 15.0;
inline constexpr int kNavLookaheadTicks = 50;
inline constexpr double kTurnThreshold = 0.5235987755982988; // 30 degrees
inline constexpr int kFormatVersion = 1;
} // namespace ds

// values[(i * K + k) * 2 + axis]; time index i = 0 is the oldest past tick,
// window slot k = 0 the oldest of the K positions.
struct HistoryTensor {
  std::array<double, ds::kHistorySize> values{};

  double &at(int i, int k, int axis) { return values[(i * ds::kK + k) * 2 + axis]; }
  double at(int i, int k, int axis) const { return values[(i * ds::kK + k) * 2 + axis]; }
  Vec2 point(int i, int k) const { return {at(i, k, 0), at(i, k, 1)}; }
  Vec2 current() const { return point(ds::kT - 1, ds::kK - 1); }
  bool operator==(const HistoryTensor &) const = default;
};

struct ProximityCell {
  int row = 0;
  int col = 0;
  int time = 0;
  std::array<double, ds::kChannels> payload{}; // (x, y) x K, oldest first
  bool operator==(const ProximityCell &) const = default;
};

// Dense layout [row][col][time][channel]; stored sparsely, one entry per
// occupied (row, col, time), sorted by that key.
struct ProximityMap {
  std::vector<ProximityCell> cells;

  static std::size_t flat_index(int row, int col, int time, int channel) {
    return ((static_cast<std::size_t>(row) * ds::kCols + col) * ds::kT + time) * ds::kChannels + channel;
  }
  const ProximityCell *find(int row, int col, int time) const;
  bool occupied(int row, int col, int time) const { return find(row, col, time) != nullptr; }
  std::vector<double> dense() const;
  // Cells with any nonzero channel; an all-zero payload reads as empty.
  static ProximityMap from_dense(std::span<const double> values);
  bool operator==(const ProximityMap &) const = default;
};

// Cell for an ego-frame position, or nullopt outside the 65 x 10.5 m extent.
std::optional<std::pair<int, int>> map_cell(Vec2 p);

enum class NavigationCommand { left = 0, right = 1, cross = 2, keep_lane = 3 };
inline constexpr int kNumCommands = 4;
const char *to_string(NavigationCommand nc);
NavigationCommand command_from_string(const std::string &name);
NavigationCommand classify_turn(double heading_change);

struct Sample {
  int episode_id = 0;
  long center_tick = 0;
  bool deviated = false;
  HistoryTensor E;
  std::array<HistoryTensor, ds::kN> V{};
  std::array<bool, ds::kN> mask{};
  std::array<int, ds::kN> neighbor_ids{-1, -1, -1, -1, -1};
  ProximityMap M;
  ContextFeatures ctx;
  NavigationCommand nc = NavigationCommand::keep_lane;
  PointSeries ego_future;                      // kFutureTicks points, ego frame
  std::array<PointSeries, ds::kN> neigh_future; // relative to each neighbor's current position
  bool operator==(const Sample &) const = default;
};

PointSeries zero_future();

// Past positions of one vehicle in a window: track[i] is the position at tick
// center - (T - 1) + i - (K - 1), i in [0, T + K - 1).
using Track = std::array<Vec2, ds::kT + ds::kK - 1>;
HistoryTensor history_from_track(const Track &track);

struct MapTrack {
  int id = -1;
  Track track{};
};
// Bins every track; the vehicle nearer the ego (track of `ego_id`) wins a
// shared cell, ties to the lower id.
ProximityMap build_proximity_map(std::span<const MapTrack> tracks, int ego_id);

// Cars nearest to the ego at the given tick, ascending distance, ties by id.
std::vector<int> select_neighbors(const TickRecord &tick, int ego_id, int n = ds::kN);

// Input side of a sample (E, V, mask, M, ctx) centered at `center`. Ticks
// before the start of `ticks` are padded with the oldest one.
Sample build_sample_inputs(std::span<const TickRecord> ticks, std::size_t center, int ego_id);

NavigationCommand compute_navigation_command(const EpisodeLog &log, std::size_t center_tick,
                                             const RoadNetwork &network);
// Online counterpart driven by the planned route.
NavigationCommand live_navigation_command(const Route &route, double route_s, const RoadNetwork &network);

std::vector<Sample> extract_windows(const EpisodeLog &log, const RoadNetwork &network, int episode_id = 0);

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> validation;
};
// Whole episodes: the last round(fraction * n) episode ids (at least one when
// n >= 2) go to validation.
DatasetSplit split_by_episode(std::vector<Sample> samples, double validation_fraction = 0.1);

struct DatasetHeader {
  int format_version = ds::kFormatVersion;
  std::string config_hash;
  std::size_t count = 0;
};

std::string serialize_sample(const Sample &s);
Sample parse_sample(const std::string &line);
void write_dataset(std::span<const Sample> samples, const std::string &path, const std::string &config_hash = "");
std::vector<Sample> read_dataset(const std::string &path, DatasetHeader *header = nullptr);

} // namespace condtraj

#endif // CONDTRAJ_DATASET_HPP
