// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/model.hpp"

#include "condtraj/error.hpp"
#include "condtraj/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace condtraj {

using namespace net;

const ModelLayout &ModelLayout::get() {
  static const ModelLayout layout = [] {
    ModelLayout l;
    auto set = [&](LayerId id, const char *name, int in, int out) { l.layers[id] = {name, in, out, 0, 0}; };
    set(kEgoEnc1, "ego_encoder.0", kHist, kEnc1);
    set(kEgoEnc2, "ego_encoder.1", kEnc1, kEnc2);
    set(kNbEnc1, "neighbor_encoder.0", kHist, kEnc1);
    set(kNbEnc2, "neighbor_encoder.1", kEnc1, kEnc2);
    set(kMapEnc1, "map_encoder.0", ds::kMapSize, kMap1);
    set(kMapEnc2, "map_encoder.1", kMap1, kMap2);
    set(kCtxEnc, "ctx_encoder.0", ContextFeatures::kSize, kCtx);
    const char *heads[] = {"ego_head.left.0", "ego_head.left.1", "ego_head.right.0", "ego_head.right.1",
                           "ego_head.cross.0", "ego_head.cross.1", "ego_head.keep_lane.0", "ego_head.keep_lane.1"};
    for (int h = 0; h < kNumCommands; ++h) {
      set(static_cast<LayerId>(kHead0a + 2 * h), heads[2 * h], kHeadIn, kHeadHidden);
      set(static_cast<LayerId>(kHead0b + 2 * h), heads[2 * h + 1], kHeadHidden, kOut);
    }
    set(kNbDec1, "neighbor_decoder.0", kHeadIn, kHeadHidden);
    set(kNbDec2, "neighbor_decoder.1", kHeadHidden, kOut);
    std::size_t off = 0;
    for (auto &s : l.layers) {
      s.w_offset = off;
      off += static_cast<std::size_t>(s.in) * s.out;
      s.b_offset = off;
      off += s.out;
    }
    l.size = off;
    return l;
  }();
  return layout;
}

ModelParams ModelParams::zeros() {
  ModelParams p;
  p.values.assign(ModelLayout::get().size, 0.0);
  return p;
}

ModelParams ModelParams::init(std::uint64_t seed) {
  ModelParams p = zeros();
  std::mt19937_64 rng(seed);
  for (const auto &s : ModelLayout::get().layers) {
    const double r = std::sqrt(6.0 / (s.in + s.out));
    std::uniform_real_distribution<double> u(-r, r);
    for (std::size_t i = 0; i < static_cast<std::size_t>(s.in) * s.out; ++i) p.values[s.w_offset + i] = u(rng);
  }
  return p;
}

std::span<double> ModelParams::weights(LayerId id) {
  const auto &s = ModelLayout::get().layers[id];
  return {values.data() + s.w_offset, static_cast<std::size_t>(s.in) * s.out};
}
std::span<const double> ModelParams::weights(LayerId id) const {
  const auto &s = ModelLayout::get().layers[id];
  return {values.data() + s.w_offset, static_cast<std::size_t>(s.in) * s.out};
}
std::span<double> ModelParams::bias(LayerId id) {
  const auto &s = ModelLayout::get().layers[id];
  return {values.data() + s.b_offset, static_cast<std::size_t>(s.out)};
}
std::span<const double> ModelParams::bias(LayerId id) const {
  const auto &s = ModelLayout::get().layers[id];
  return {values.data() + s.b_offset, static_cast<std::size_t>(s.out)};
}

const std::array<double, ContextFeatures::kSize> &context_scale() {
  static const std::array<double, ContextFeatures::kSize> s{1.0 / 50.0, 1.0, 1.0 / 50.0, 1.0 / 2.0,
                                                             1.0 / 0.5,  1.0 / 50.0, 1.0 / 5.0, 1.0 / 30.0};
  return s;
}

const std::array<double, kPolyCoeffs> &coefficient_scale() {
  static const std::array<double, kPolyCoeffs> s{10.0 / 16.0, 10.0 / 8.0, 10.0 / 4.0, 10.0 / 2.0, 10.0};
  return s;
}

namespace {

void check_finite(const double *y, int n, LayerId id) {
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(y[i])) {
      throw Error(ErrorKind::Numerical, "non-finite activation in layer " + ModelLayout::get().layers[id].name);
    }
  }
}

void dense_forward(LayerId id, const double *p, const double *x, double *y, bool act) {
  const auto &s = ModelLayout::get().layers[id];
  const double *W = p + s.w_offset;
  std::copy(p + s.b_offset, p + s.b_offset + s.out, y);
  for (int i = 0; i < s.in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double *row = W + static_cast<std::size_t>(i) * s.out;
    for (int o = 0; o < s.out; ++o) y[o] += xi * row[o];
  }
  if (act) {
    for (int o = 0; o < s.out; ++o) y[o] = std::tanh(y[o]);
  }
  check_finite(y, s.out, id);
}

// dy holds dL/dy on entry and is turned into dL/d(pre-activation).
void dense_backward(LayerId id, const double *p, double *g, const double *x, const double *y, double *dy, double *dx,
                    bool act) {
  const auto &s = ModelLayout::get().layers[id];
  if (act) {
    for (int o = 0; o < s.out; ++o) dy[o] *= 1.0 - y[o] * y[o];
  }
  double *gb = g + s.b_offset;
  for (int o = 0; o < s.out; ++o) gb[o] += dy[o];
  const double *W = p + s.w_offset;
  double *gW = g + s.w_offset;
  for (int i = 0; i < s.in; ++i) {
    const double xi = x[i];
    const double *row = W + static_cast<std::size_t>(i) * s.out;
    if (xi != 0.0) {
      double *grow = gW + static_cast<std::size_t>(i) * s.out;
      for (int o = 0; o < s.out; ++o) grow[o] += xi * dy[o];
    }
    if (dx) {
      double acc = 0.0;
      for (int o = 0; o < s.out; ++o) acc += row[o] * dy[o];
      dx[i] = acc;
    }
  }
}

struct MapInput {
  std::vector<std::pair<std::size_t, double>> nz;
};

MapInput map_input(const ProximityMap &m) {
  MapInput in;
  in.nz.reserve(m.cells.size() * ds::kChannels);
  for (const auto &c : m.cells) {
    for (int ch = 0; ch < ds::kChannels; ++ch) {
      const double v = c.payload[ch] * kPositionScale;
      if (v != 0.0) in.nz.emplace_back(ProximityMap::flat_index(c.row, c.col, c.time, ch), v);
    }
  }
  std::sort(in.nz.begin(), in.nz.end());
  return in;
}

void sparse_forward(LayerId id, const double *p, const MapInput &x, double *y) {
  const auto &s = ModelLayout::get().layers[id];
  std::copy(p + s.b_offset, p + s.b_offset + s.out, y);
  for (const auto &[i, xi] : x.nz) {
    const double *row = p + s.w_offset + i * s.out;
    for (int o = 0; o < s.out; ++o) y[o] += xi * row[o];
  }
  for (int o = 0; o < s.out; ++o) y[o] = std::tanh(y[o]);
  check_finite(y, s.out, id);
}

void sparse_backward(LayerId id, double *g, const MapInput &x, const double *y, double *dy) {
  const auto &s = ModelLayout::get().layers[id];
  for (int o = 0; o < s.out; ++o) dy[o] *= 1.0 - y[o] * y[o];
  for (int o = 0; o < s.out; ++o) g[s.b_offset + o] += dy[o];
  for (const auto &[i, xi] : x.nz) {
    double *grow = g + s.w_offset + i * s.out;
    for (int o = 0; o < s.out; ++o) grow[o] += xi * dy[o];
  }
}

struct NeighborCache {
  std::array<double, kHist> x{};
  std::array<double, kEnc1> h1{};
  std::array<double, kHeadIn> in{};
  std::array<double, kHeadHidden> d1{};
  std::array<double, kOut> out{};
};

struct Cache {
  std::array<double, kHist> xe{};
  std::array<double, kEnc1> e1{};
  MapInput xm;
  std::array<double, kMap1> m1{};
  std::array<double, ContextFeatures::kSize> xc{};
  std::array<double, kCtx> c1{};
  std::array<double, kHeadIn> head_in{}; // C followed by the ego encoding
  std::array<double, kHeadHidden> h1{};
  std::array<double, kOut> out{};
  std::array<NeighborCache, ds::kN> nb{};
};

LayerId head_layer(NavigationCommand nc, int stage) { return static_cast<LayerId>(kHead0a + 2 * static_cast<int>(nc) + stage); }

PolyTrajectory2D to_poly(const std::array<double, kOut> &o) {
  const auto &s = coefficient_scale();
  PolyTrajectory2D p;
  for (int k = 0; k < kPolyCoeffs; ++k) {
    p.cx[k] = o[k] * s[k];
    p.cy[k] = o[kPolyCoeffs + k] * s[k];
  }
  return p;
}

void run_forward(const Sample &smp, const double *p, Cache &c) {
  for (int i = 0; i < kHist; ++i) c.xe[i] = smp.E.values[i] * kPositionScale;
  dense_forward(kEgoEnc1, p, c.xe.data(), c.e1.data(), true);
  dense_forward(kEgoEnc2, p, c.e1.data(), c.head_in.data() + kContext, true);

  c.xm = map_input(smp.M);
  sparse_forward(kMapEnc1, p, c.xm, c.m1.data());
  dense_forward(kMapEnc2, p, c.m1.data(), c.head_in.data(), true);
  const auto &cs = context_scale();
  for (int i = 0; i < ContextFeatures::kSize; ++i) c.xc[i] = smp.ctx.values[i] * cs[i];
  dense_forward(kCtxEnc, p, c.xc.data(), c.c1.data(), true);
  std::copy(c.c1.begin(), c.c1.end(), c.head_in.begin() + kMap2);

  dense_forward(head_layer(smp.nc, 0), p, c.head_in.data(), c.h1.data(), true);
  dense_forward(head_layer(smp.nc, 1), p, c.h1.data(), c.out.data(), false);

  for (int n = 0; n < ds::kN; ++n) {
    auto &nb = c.nb[n];
    std::copy(c.head_in.begin(), c.head_in.begin() + kContext, nb.in.begin());
    if (smp.mask[n]) {
      for (int i = 0; i < kHist; ++i) nb.x[i] = smp.V[n].values[i] * kPositionScale;
      dense_forward(kNbEnc1, p, nb.x.data(), nb.h1.data(), true);
      dense_forward(kNbEnc2, p, nb.h1.data(), nb.in.data() + kContext, true);
    } else {
      std::fill(nb.in.begin() + kContext, nb.in.end(), 0.0);
    }
    dense_forward(kNbDec1, p, nb.in.data(), nb.d1.data(), true);
    dense_forward(kNbDec2, p, nb.d1.data(), nb.out.data(), false);
  }
}

// Point loss of one trajectory; accumulates dL/d(output units) into dout.
double point_loss(const std::array<double, kOut> &out, const PointSeries &gt, double weight,
                  std::array<double, kOut> *dout) {
  const PolyTrajectory2D poly = to_poly(out);
  const auto &s = coefficient_scale();
  double loss = 0.0;
  for (const auto &q : gt) {
    const double ex = eval_poly(poly.cx, q.t) - q.x;
    const double ey = eval_poly(poly.cy, q.t) - q.y;
    loss += ex * ex + ey * ey;
    if (dout) {
      double tp = 1.0; // t^(4-k), built from k = 4 down
      for (int k = kPolyCoeffs - 1; k >= 0; --k) {
        (*dout)[k] += weight * 2.0 * ex * tp * s[k];
        (*dout)[kPolyCoeffs + k] += weight * 2.0 * ey * tp * s[k];
        tp *= q.t;
      }
    }
  }
  return weight * loss;
}

double sample_loss(const Sample &smp, const double *p, double *g, double neighbor_weight) {
  Cache c;
  run_forward(smp, p, c);
  std::array<double, kOut> dout{};
  double loss = point_loss(c.out, smp.ego_future, 1.0, g ? &dout : nullptr);
  std::array<std::array<double, kOut>, ds::kN> dnb{};
  for (int n = 0; n < ds::kN; ++n) {
    if (!smp.mask[n] || neighbor_weight == 0.0) continue;
    loss += point_loss(c.nb[n].out, smp.neigh_future[n], neighbor_weight, g ? &dnb[n] : nullptr);
  }
  if (!g) return loss;

  std::array<double, kHeadIn> dC{}; // gradient wrt C (first kContext entries used)
  {
    std::array<double, kHeadHidden> dh{};
    dense_backward(head_layer(smp.nc, 1), p, g, c.h1.data(), c.out.data(), dout.data(), dh.data(), false);
    std::array<double, kHeadIn> din{};
    dense_backward(head_layer(smp.nc, 0), p, g, c.head_in.data(), c.h1.data(), dh.data(), din.data(), true);
    for (int i = 0; i < kContext; ++i) dC[i] += din[i];
    std::array<double, kEnc2> de2{};
    std::copy(din.begin() + kContext, din.end(), de2.begin());
    std::array<double, kEnc1> de1{};
    dense_backward(kEgoEnc2, p, g, c.e1.data(), c.head_in.data() + kContext, de2.data(), de1.data(), true);
    dense_backward(kEgoEnc1, p, g, c.xe.data(), c.e1.data(), de1.data(), nullptr, true);
  }
  for (int n = 0; n < ds::kN; ++n) {
    if (!smp.mask[n] || neighbor_weight == 0.0) continue;
    auto &nb = c.nb[n];
    std::array<double, kHeadHidden> dh{};
    dense_backward(kNbDec2, p, g, nb.d1.data(), nb.out.data(), dnb[n].data(), dh.data(), false);
    std::array<double, kHeadIn> din{};
    dense_backward(kNbDec1, p, g, nb.in.data(), nb.d1.data(), dh.data(), din.data(), true);
    for (int i = 0; i < kContext; ++i) dC[i] += din[i];
    std::array<double, kEnc2> dcode{};
    std::copy(din.begin() + kContext, din.end(), dcode.begin());
    std::array<double, kEnc1> dh1{};
    dense_backward(kNbEnc2, p, g, nb.h1.data(), nb.in.data() + kContext, dcode.data(), dh1.data(), true);
    dense_backward(kNbEnc1, p, g, nb.x.data(), nb.h1.data(), dh1.data(), nullptr, true);
  }
  std::array<double, kMap2> dm2{};
  std::copy(dC.begin(), dC.begin() + kMap2, dm2.begin());
  std::array<double, kMap1> dm1{};
  dense_backward(kMapEnc2, p, g, c.m1.data(), c.head_in.data(), dm2.data(), dm1.data(), true);
  sparse_backward(kMapEnc1, g, c.xm, c.m1.data(), dm1.data());
  std::array<double, kCtx> dc1{};
  std::copy(dC.begin() + kMap2, dC.begin() + kContext, dc1.begin());
  dense_backward(kCtxEnc, p, g, c.xc.data(), c.c1.data(), dc1.data(), nullptr, true);
  return loss;
}

void check_sample(const Sample &s) {
  if (s.ego_future.size() != static_cast<std::size_t>(ds::kFutureTicks)) {
    throw Error(ErrorKind::Shape, "sample ego future must have 20 points");
  }
  for (int n = 0; n < ds::kN; ++n) {
    if (s.mask[n] && s.neigh_future[n].size() != static_cast<std::size_t>(ds::kFutureTicks)) {
      throw Error(ErrorKind::Shape, "sample neighbor future must have 20 points");
    }
  }
}

} // namespace

Prediction forward(const Sample &sample, const ModelParams &params) {
  if (params.values.size() != ModelLayout::get().size) throw Error(ErrorKind::Shape, "parameter vector size mismatch");
  Cache c;
  run_forward(sample, params.values.data(), c);
  Prediction pr;
  pr.ego = to_poly(c.out);
  for (int n = 0; n < ds::kN; ++n) pr.neighbors[n] = to_poly(c.nb[n].out);
  std::copy(c.head_in.begin(), c.head_in.begin() + kContext, pr.context.begin());
  return pr;
}

double loss_and_grad(std::span<const Sample *const> batch, const ModelParams &params, std::vector<double> *grad,
                     const LossOptions &options) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "loss_and_grad: empty batch");
  if (params.values.size() != ModelLayout::get().size) throw Error(ErrorKind::Shape, "parameter vector size mismatch");
  if (grad) grad->assign(params.values.size(), 0.0);
  double total = 0.0;
  for (const Sample *s : batch) {
    check_sample(*s);
    total += sample_loss(*s, params.values.data(), grad ? grad->data() : nullptr, options.neighbor_weight);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  if (grad) {
    for (double &v : *grad) v *= inv;
  }
  const double loss = total * inv;
  if (!std::isfinite(loss)) throw Error(ErrorKind::Numerical, "non-finite loss");
  return loss;
}

double loss_and_grad(std::span<const Sample> batch, const ModelParams &params, std::vector<double> *grad,
                     const LossOptions &options) {
  std::vector<const Sample *> ptrs;
  ptrs.reserve(batch.size());
  for (const auto &s : batch) ptrs.push_back(&s);
  return loss_and_grad(std::span<const Sample *const>(ptrs), params, grad, options);
}

void adam_step(ModelParams &params, std::span<const double> grad, AdamState &state, const TrainConfig &config,
               double learning_rate) {
  const std::size_t n = params.values.size();
  if (grad.size() != n) throw Error(ErrorKind::Shape, "adam_step: gradient size mismatch");
  if (state.m.size() != n) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    state.step = 0;
  }
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  double *p = params.values.data();
  double *m = state.m.data();
  double *v = state.v.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    const double mh = m[i] / c1;
    const double vh = v[i] / c2;
    p[i] -= learning_rate * mh / (std::sqrt(vh) + config.epsilon);
  }
}

MaeBlock evaluate_mae(std::span<const Sample> samples, const std::function<Prediction(const Sample &)> &predict) {
  MaeBlock b;
  for (const auto &s : samples) {
    const Prediction pr = predict(s);
    const PointSeries ego = sample_trajectory(pr.ego);
    b.ego += mae(ego, s.ego_future);
    b.ego_2s += mae_at(ego, s.ego_future, kHorizonSeconds);
    ++b.samples;
    for (int n = 0; n < ds::kN; ++n) {
      if (!s.mask[n]) continue;
      const PointSeries nb = sample_trajectory(pr.neighbors[n]);
      b.neighbors += mae(nb, s.neigh_future[n]);
      b.neighbors_2s += mae_at(nb, s.neigh_future[n], kHorizonSeconds);
      ++b.neighbor_tracks;
    }
  }
  if (b.samples) {
    b.ego /= static_cast<double>(b.samples);
    b.ego_2s /= static_cast<double>(b.samples);
  }
  if (b.neighbor_tracks) {
    b.neighbors /= static_cast<double>(b.neighbor_tracks);
    b.neighbors_2s /= static_cast<double>(b.neighbor_tracks);
  }
  return b;
}

MaeBlock evaluate_mae(std::span<const Sample> samples, const ModelParams &params) {
  return evaluate_mae(samples, [&](const Sample &s) { return forward(s, params); });
}

TrainResult train(std::span<const Sample> train_set, std::span<const Sample> validation, const TrainConfig &config,
                  const std::function<void(const EpochStats &)> &on_epoch) {
  if (train_set.empty()) throw Error(ErrorKind::InsufficientData, "train: empty training set");
  if (config.batch_size < 1 || config.epochs < 1 || !(config.learning_rate > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "train: batch size, epochs and learning rate must be positive");
  }
  const std::span<const Sample> val = validation.empty() ? train_set : validation;
  const LossOptions opts{config.neighbor_weight};

  TrainResult res;
  ModelParams params = ModelParams::init(derive_seed(config.seed, "model/init"));
  AdamState adam;
  std::vector<double> grad;
  std::vector<std::size_t> order(train_set.size());
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<const Sample *> batch;
  std::vector<const Sample *> val_ptrs;
  for (const auto &s : val) val_ptrs.push_back(&s);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(config.seed, "train/shuffle/" + std::to_string(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = config.learning_rate * std::pow(config.lr_decay, epoch);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        batch.push_back(&train_set[order[i]]);
      }
      double loss = 0.0;
      try {
        loss = loss_and_grad(batch, params, &grad, opts);
      } catch (const Error &e) {
        if (e.kind() != ErrorKind::Numerical) throw;
        throw Error(ErrorKind::Numerical, "training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                              std::to_string(batches) + ": " + e.what());
      }
      adam_step(params, grad, adam, config, lr);
      sum += loss;
      ++batches;
    }
    EpochStats st;
    st.epoch = epoch;
    st.learning_rate = lr;
    st.train_loss = sum / static_cast<double>(batches);
    double vsum = 0.0;
    for (std::size_t start = 0; start < val_ptrs.size(); start += 256) {
      const std::size_t end = std::min(val_ptrs.size(), start + 256);
      vsum += loss_and_grad(std::span<const Sample *const>(val_ptrs.data() + start, end - start), params, nullptr,
                            opts) *
              static_cast<double>(end - start);
    }
    st.val_loss = vsum / static_cast<double>(val_ptrs.size());
    st.val_mae = evaluate_mae(val, params);
    res.curve.push_back(st);
    if (on_epoch) on_epoch(st);
    if (st.val_loss < best_val) {
      best_val = st.val_loss;
      res.best = params;
      res.best_epoch = epoch;
    }
  }
  res.last = std::move(params);
  return res;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string serialize_checkpoint(const ModelParams &params, const std::string &config_hash) {
  const auto &layout = ModelLayout::get();
  if (params.values.size() != layout.size) throw Error(ErrorKind::Shape, "parameter vector size mismatch");
  std::string out = "{\"format_version\":1,\"kind\":\"checkpoint\",\"config_hash\":";
  out += nlohmann::json(config_hash).dump();
  out += ",\"parameter_count\":" + std::to_string(layout.size);
  out += ",\"layers\":[";
  for (int id = 0; id < kNumLayers; ++id) {
    const auto &s = layout.layers[id];
    if (id) out += ',';
    out += "{\"name\":\"" + s.name + "\",\"shape\":[" + std::to_string(s.in) + "," + std::to_string(s.out) + "],\"W\":";
    append_array(out, params.weights(static_cast<LayerId>(id)));
    out += ",\"b\":";
    append_array(out, params.bias(static_cast<LayerId>(id)));
    out += '}';
  }
  out += "]}\n";
  return out;
}

ModelParams parse_checkpoint(const std::string &text, std::string *config_hash) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Format, std::string("checkpoint is not valid JSON (truncated?): ") + e.what());
  }
  try {
    if (j.value("kind", "") != "checkpoint") throw Error(ErrorKind::Format, "not a checkpoint file");
    if (j.at("format_version").get<int>() != 1) throw Error(ErrorKind::Format, "unsupported checkpoint format_version");
    const auto &layout = ModelLayout::get();
    const auto &layers = j.at("layers");
    if (layers.size() != kNumLayers) throw Error(ErrorKind::Format, "checkpoint layer count mismatch");
    ModelParams p = ModelParams::zeros();
    for (int id = 0; id < kNumLayers; ++id) {
      const auto &s = layout.layers[id];
      const auto &L = layers[id];
      if (L.at("name").get<std::string>() != s.name || L.at("shape").at(0).get<int>() != s.in ||
          L.at("shape").at(1).get<int>() != s.out) {
        throw Error(ErrorKind::Format, "checkpoint layer " + std::to_string(id) + " does not match " + s.name);
      }
      const auto &W = L.at("W");
      const auto &b = L.at("b");
      auto dw = p.weights(static_cast<LayerId>(id));
      auto db = p.bias(static_cast<LayerId>(id));
      if (W.size() != dw.size() || b.size() != db.size()) throw Error(ErrorKind::Format, "checkpoint array size mismatch in " + s.name);
      for (std::size_t i = 0; i < dw.size(); ++i) dw[i] = W[i].get<double>();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] = b[i].get<double>();
    }
    if (config_hash) *config_hash = j.at("config_hash").get<std::string>();
    return p;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Format, std::string("checkpoint schema violation: ") + e.what());
  }
}

void save_checkpoint(const ModelParams &params, const std::string &path, const std::string &config_hash) {
  write_file(path, serialize_checkpoint(params, config_hash));
}

ModelParams load_checkpoint(const std::string &path, std::string *config_hash) {
  return parse_checkpoint(read_file(path), config_hash);
}

} // namespace condtraj
