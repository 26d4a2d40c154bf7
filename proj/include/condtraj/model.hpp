// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_MODEL_HPP
#define CONDTRAJ_MODEL_HPP

#include "condtraj/dataset.hpp"
#include "condtraj/trajectory.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace condtraj {

namespace net {
inline constexpr int kHist = ds::kHistorySize; // 120
inline constexpr int kEnc1 = 64;
inline constexpr int kEnc2 = 32;
inline constexpr int kMap1 = 128;
inline constexpr int kMap2 = 64;
inline constexpr int kCtx = 16;
inline constexpr int kContext = kMap2 + kCtx; // C
inline constexpr int kHeadIn = kContext + kEnc2;
inline constexpr int kHeadHidden = 64;
inline constexpr int kOut = 2 * kPolyCoeffs;
inline constexpr double kPositionScale = 0.1;
} // namespace net

enum LayerId : int {
  kEgoEnc1, kEgoEnc2,
  kNbEnc1, kNbEnc2,
  kMapEnc1, kMapEnc2,
  kCtxEnc,
  kHead0a, kHead0b, kHead1a, kHead1b, kHead2a, kHead2b, kHead3a, kHead3b,
  kNbDec1, kNbDec2,
  kNumLayers
};

struct LayerSpec {
  std::string name;
  int in = 0;
  int out = 0;
  std::size_t w_offset = 0; // W[in][out], input-major
  std::size_t b_offset = 0;
};

struct ModelLayout {
  std::array<LayerSpec, kNumLayers> layers;
  std::size_t size = 0;
  static const ModelLayout &get();
};

struct ModelParams {
  std::vector<double> values;

  static ModelParams zeros();
  // Uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
  static ModelParams init(std::uint64_t seed);
  std::span<double> weights(LayerId id);
  std::span<const double> weights(LayerId id) const;
  std::span<double> bias(LayerId id);
  std::span<const double> bias(LayerId id) const;
  bool operator==(const ModelParams &) const = default;
};

// Fixed input normalization of the eight context features.
const std::array<double, ContextFeatures::kSize> &context_scale();
// Output unit k of each axis is scaled so it moves the 2 s point by ~10 m.
const std::array<double, kPolyCoeffs> &coefficient_scale();

struct Prediction {
  PolyTrajectory2D ego;
  std::array<PolyTrajectory2D, ds::kN> neighbors{};
  std::array<double, net::kContext> context{};
};

// Throws Numerical naming the layer on non-finite activations.
Prediction forward(const Sample &sample, const ModelParams &params);

struct LossOptions {
  double neighbor_weight = 1.0; // 0 ablates neighbor prediction
};

// Mean over the batch of the point loss; grad (if given) is resized and
// overwritten with the analytic gradient.
double loss_and_grad(std::span<const Sample *const> batch, const ModelParams &params, std::vector<double> *grad,
                     const LossOptions &options = {});
double loss_and_grad(std::span<const Sample> batch, const ModelParams &params, std::vector<double> *grad,
                     const LossOptions &options = {});

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  bool operator==(const AdamState &) const = default;
};

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 10;
  std::uint64_t seed = 0;
  double lr_decay = 1.0; // per-epoch multiplier
  double neighbor_weight = 1.0;
};

void adam_step(ModelParams &params, std::span<const double> grad, AdamState &state, const TrainConfig &config,
               double learning_rate);

struct MaeBlock {
  double ego = 0.0;
  double ego_2s = 0.0;
  double neighbors = 0.0;
  double neighbors_2s = 0.0;
  std::size_t samples = 0;
  std::size_t neighbor_tracks = 0;
};

MaeBlock evaluate_mae(std::span<const Sample> samples, const ModelParams &params);
// MAE of an arbitrary predictor (used for oracle plumbing checks).
MaeBlock evaluate_mae(std::span<const Sample> samples, const std::function<Prediction(const Sample &)> &predict);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  MaeBlock val_mae;
  double learning_rate = 0.0;
};

struct TrainResult {
  ModelParams best;
  ModelParams last;
  int best_epoch = -1;
  std::vector<EpochStats> curve;
};

// Validation falls back to the training set when `validation` is empty.
TrainResult train(std::span<const Sample> train_set, std::span<const Sample> validation, const TrainConfig &config,
                  const std::function<void(const EpochStats &)> &on_epoch = {});

void save_checkpoint(const ModelParams &params, const std::string &path, const std::string &config_hash = "");
ModelParams load_checkpoint(const std::string &path, std::string *config_hash = nullptr);
std::string serialize_checkpoint(const ModelParams &params, const std::string &config_hash = "");
ModelParams parse_checkpoint(const std::string &text, std::string *config_hash = nullptr);

} // namespace condtraj

#endif // CONDTRAJ_MODEL_HPP
