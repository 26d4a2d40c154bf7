// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_AUGMENT_HPP
#define CONDTRAJ_AUGMENT_HPP

#include "condtraj/dataset.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace condtraj {

enum class DeviationSide { left, right };

struct DeviationParams {
  double lateral_amplitude = 0.0; // meters, >= 0
  double angular_amplitude = 0.0; // radians, signed (left positive)
  double deviation_start = 1.0;   // seconds before the window center, (0, 2]
  double recovery_duration = 1.0; // seconds, (0, 2]
  DeviationSide side = DeviationSide::left;

  double signed_offset() const { return side == DeviationSide::left ? lateral_amplitude : -lateral_amplitude; }
};

// Below this speed the recovery has no meaningful heading; the sample is skipped.
inline constexpr double kMinRecoverySpeed = 1.0;

double smoothstep(double u);

// Quartic per axis: position p0 and velocity v0 at 0; position, velocity and
// acceleration of `nominal` at tau.
PolyTrajectory2D recovery_polynomial(Vec2 p0, Vec2 v0, const PolyTrajectory2D &nominal, double tau);
// recovery_polynomial minus nominal.
PolyTrajectory2D recovery_correction(Vec2 p0, Vec2 v0, const PolyTrajectory2D &nominal, double tau);

// nullopt: skip-sample signal (nominal speed at the center below kMinRecoverySpeed).
std::optional<Sample> inject_deviation(const Sample &sample, const DeviationParams &params,
                                       const PointSeries &nominal_future);

Sample perturb_positions(const Sample &sample, double sigma_long, double sigma_lat, std::uint64_t seed);

struct MapPerturbStats {
  std::size_t removed_tracks = 0;
  std::size_t free_cells = 0;
  std::size_t added_tracks = 0;
};

// Tracks are recovered by chaining payloads whose windows overlap. The track
// matching `ego` is never removed.
ProximityMap perturb_map_occupancy(const ProximityMap &map, const HistoryTensor &ego, double p_remove, double p_add,
                                   std::uint64_t seed, MapPerturbStats *stats = nullptr);

enum class AugmentMode { none, partial, full };
const char *to_string(AugmentMode mode);
AugmentMode augment_mode_from_string(const std::string &name);

struct AugmentConfig {
  AugmentMode mode = AugmentMode::full;
  double episode_fraction = 0.2;
  std::vector<double> lateral_amplitudes{0.2, 0.4, 0.6, 0.8};
  double orientation_lookahead = 10.0; // heading deviation faces a point this far ahead
  double deviation_start_min = 0.5, deviation_start_max = 2.0;
  double recovery_min = 0.5, recovery_max = 2.0;
  double sigma_long = 0.0, sigma_lat = 0.0;
  double p_remove = 0.0, p_add = 0.0;
};

DeviationParams sample_deviation(const AugmentConfig &config, std::mt19937_64 &rng);

// Episode ids whose samples get deviated: round(fraction * n) ids drawn with
// the seed; partial mode keeps every other one of those (sorted).
std::vector<int> select_deviation_episodes(const std::vector<int> &episode_ids, const AugmentConfig &config,
                                           std::uint64_t seed);

struct AugmentStats {
  std::size_t samples = 0;
  std::size_t deviated = 0;
  std::size_t skipped = 0;
  std::size_t episodes_selected = 0;
};

// Deviation (selected episodes), then map perturbation, then position noise.
std::vector<Sample> augment_dataset(const std::vector<Sample> &samples, const AugmentConfig &config,
                                    std::uint64_t seed, AugmentStats *stats = nullptr);

// Input noise only; used for noisy closed-loop evaluation.
Sample apply_input_noise(const Sample &sample, const AugmentConfig &config, std::uint64_t seed);

} // namespace condtraj

#endif // CONDTRAJ_AUGMENT_HPP
