// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/error.hpp"
#include "condtraj/model.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

using namespace condtraj;

namespace {

const std::vector<Sample> &samples() {
  static const std::vector<Sample> s = [] {
    const auto net = std::make_shared<const RoadNetwork>(build_town(TownId::train));
    return extract_windows(record_episode(net, 5, 40.0), *net, 0);
  }();
  return s;
}

// Loss recomputed from forward() with an explicit double loop over points.
double loss_via_forward(const Sample &s, const ModelParams &p, double neighbor_weight = 1.0) {
  const Prediction pr = forward(s, p);
  double l = 0.0;
  for (const auto &q : s.ego_future) {
    const Vec2 e = pr.ego.eval(q.t) - Vec2{q.x, q.y};
    l += e.x * e.x + e.y * e.y;
  }
  for (int n = 0; n < ds::kN; ++n) {
    if (!s.mask[n]) continue;
    for (const auto &q : s.neigh_future[n]) {
      const Vec2 e = pr.neighbors[n].eval(q.t) - Vec2{q.x, q.y};
      l += neighbor_weight * (e.x * e.x + e.y * e.y);
    }
  }
  return l;
}

const Sample &sample_with_neighbors(int min_count) {
  for (const auto &s : samples()) {
    int n = 0;
    for (bool m : s.mask) n += m;
    if (n >= min_count && !s.M.cells.empty()) return s;
  }
  throw std::runtime_error("no sample with enough neighbors");
}

} // namespace

TEST_CASE("layout is contiguous and sized by hand count") {
  const auto &lay = ModelLayout::get();
  std::size_t off = 0;
  for (const auto &l : lay.layers) {
    CHECK(l.w_offset == off);
    CHECK(l.b_offset == off + static_cast<std::size_t>(l.in) * l.out);
    off = l.b_offset + l.out;
  }
  CHECK(off == lay.size);
  auto dense = [](std::size_t i, std::size_t o) { return i * o + o; };
  const std::size_t map_in = 13 * 3 * 20 * 6;
  const std::size_t head_in = 64 + 16 + 32;
  const std::size_t expected = 2 * (dense(120, 64) + dense(64, 32)) + dense(map_in, 128) + dense(128, 64) +
                               dense(8, 16) + 4 * (dense(head_in, 64) + dense(64, 10)) + dense(head_in, 64) +
                               dense(64, 10);
  CHECK(lay.size == expected);
  CHECK(ModelParams::zeros().values.size() == expected);
}

TEST_CASE("zero parameters predict standing still") {
  const auto pr = forward(samples()[0], ModelParams::zeros());
  CHECK(pr.ego == PolyTrajectory2D{});
  for (const auto &n : pr.neighbors) CHECK(n == PolyTrajectory2D{});
}

TEST_CASE("init is deterministic and bounded") {
  const auto a = ModelParams::init(3);
  CHECK(a == ModelParams::init(3));
  CHECK_FALSE(a == ModelParams::init(4));
  const auto &l = ModelLayout::get().layers[kEgoEnc1];
  const double bound = std::sqrt(6.0 / (l.in + l.out));
  for (double w : a.weights(kEgoEnc1)) CHECK(std::abs(w) <= bound);
  for (double b : a.bias(kEgoEnc1)) CHECK(b == 0.0);
}

TEST_CASE("batch loss equals the mean of forward-pass losses") {
  const auto p = ModelParams::init(11);
  std::vector<Sample> batch(samples().begin(), samples().begin() + 8);
  double want = 0.0;
  for (const auto &s : batch) want += loss_via_forward(s, p);
  want /= 8.0;
  const double got = loss_and_grad(batch, p, nullptr);
  CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, want));
  double want_ab = 0.0;
  for (const auto &s : batch) want_ab += loss_via_forward(s, p, 0.0);
  CHECK(std::abs(loss_and_grad(batch, p, nullptr, {0.0}) - want_ab / 8.0) <= 1e-9 * std::max(1.0, want_ab));
}

TEST_CASE("analytic gradient matches central differences") {
  auto p = ModelParams::init(21);
  // larger weights so every layer is well inside tanh's curved region
  for (double &v : p.values) v *= 1.5;
  std::vector<Sample> batch{sample_with_neighbors(2), samples()[40], samples()[90]};
  batch[2].nc = NavigationCommand::left;
  std::vector<double> g;
  loss_and_grad(batch, p, &g);
  const auto &lay = ModelLayout::get();
  std::mt19937_64 rng(4);
  int checked = 0;
  for (const auto &l : lay.layers) {
    const std::size_t n = static_cast<std::size_t>(l.in) * l.out + l.out;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int r = 0; r < 12; ++r) {
      const std::size_t i = l.w_offset + pick(rng);
      const double h = 1e-5;
      const double keep = p.values[i];
      p.values[i] = keep + h;
      const double lp = loss_and_grad(batch, p, nullptr);
      p.values[i] = keep - h;
      const double lm = loss_and_grad(batch, p, nullptr);
      p.values[i] = keep;
      const double fd = (lp - lm) / (2.0 * h);
      INFO(l.name, " index ", i, " fd ", fd, " analytic ", g[i]);
      CHECK(std::abs(fd - g[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
      ++checked;
    }
  }
  CHECK(checked == 12 * kNumLayers);
}

TEST_CASE("only the commanded head receives gradient") {
  const auto p = ModelParams::init(2);
  for (int cmd = 0; cmd < kNumCommands; ++cmd) {
    Sample s = sample_with_neighbors(1);
    s.nc = static_cast<NavigationCommand>(cmd);
    std::vector<double> g;
    loss_and_grad(std::span<const Sample>(&s, 1), p, &g);
    for (int h = 0; h < kNumCommands; ++h) {
      double norm = 0.0;
      for (LayerId id : {static_cast<LayerId>(kHead0a + 2 * h), static_cast<LayerId>(kHead0b + 2 * h)}) {
        const auto &l = ModelLayout::get().layers[id];
        for (std::size_t i = l.w_offset; i < l.b_offset + l.out; ++i) norm += std::abs(g[i]);
      }
      if (h == cmd) CHECK(norm > 0.0);
      else CHECK(norm == 0.0);
    }
    // changing another head leaves the ego prediction untouched
    ModelParams q = p;
    const int other = (cmd + 1) % kNumCommands;
    for (double &w : q.weights(static_cast<LayerId>(kHead0a + 2 * other))) w += 0.3;
    CHECK(forward(s, q).ego == forward(s, p).ego);
    CHECK_FALSE(forward(s, q).ego == forward(s, [&] {
      ModelParams r = p;
      for (double &w : r.weights(static_cast<LayerId>(kHead0a + 2 * cmd))) w += 0.3;
      return r;
    }()).ego);
  }
}

TEST_CASE("neighbor blocks share weights") {
  const auto p = ModelParams::init(8);
  Sample s = sample_with_neighbors(2);
  int a = -1, b = -1;
  for (int n = 0; n < ds::kN; ++n) {
    if (!s.mask[n]) continue;
    (a < 0 ? a : b) = n;
    if (b >= 0) break;
  }
  const auto before = forward(s, p);
  std::swap(s.V[a], s.V[b]);
  const auto after = forward(s, p);
  CHECK(after.neighbors[a] == before.neighbors[b]);
  CHECK(after.neighbors[b] == before.neighbors[a]);
  CHECK(after.ego == before.ego);
}

TEST_CASE("masked neighbors carry no loss") {
  const auto p = ModelParams::init(9);
  Sample s = sample_with_neighbors(1);
  const int masked = ds::kN - 1;
  s.mask[masked] = false;
  s.V[masked] = HistoryTensor{};
  const double l0 = loss_and_grad(std::span<const Sample>(&s, 1), p, nullptr);
  for (auto &q : s.neigh_future[masked]) q.x += 50.0;
  CHECK(loss_and_grad(std::span<const Sample>(&s, 1), p, nullptr) == l0);
  std::vector<double> g;
  loss_and_grad(std::span<const Sample>(&s, 1), p, &g, {0.0});
  for (LayerId id : {kNbEnc1, kNbEnc2, kNbDec1, kNbDec2}) {
    const auto &l = ModelLayout::get().layers[id];
    for (std::size_t i = l.w_offset; i < l.b_offset + l.out; ++i) CHECK(g[i] == 0.0);
  }
}

TEST_CASE("non-finite parameters raise a numerical error") {
  auto p = ModelParams::init(1);
  p.weights(kMapEnc2)[0] = std::nan("");
  CHECK_THROWS_AS(forward(sample_with_neighbors(1), p), Error);
  try {
    forward(sample_with_neighbors(1), p);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::Numerical);
  }
  CHECK_THROWS_AS(forward(samples()[0], ModelParams{}), Error);
}

TEST_CASE("checkpoint round trip is exact") {
  const auto p = ModelParams::init(77);
  std::string hash;
  const auto q = parse_checkpoint(serialize_checkpoint(p, "abc"), &hash);
  CHECK(q == p);
  CHECK(hash == "abc");
  const auto path = (std::filesystem::temp_directory_path() / "condtraj_ckpt_test.json").string();
  save_checkpoint(p, path);
  CHECK(load_checkpoint(path) == p);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(parse_checkpoint("{\"kind\":\"model\"}"), Error);
}

TEST_CASE("adam step against a hand computation") {
  ModelParams p;
  p.values = {1.0, -2.0};
  AdamState st;
  TrainConfig cfg;
  const std::vector<double> g{0.5, -0.1};
  adam_step(p, g, st, cfg, 0.01);
  // first step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
  CHECK(p.values[0] == doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(p.values[1] == doctest::Approx(-2.0 + 0.01 * 0.1 / (0.1 + 1e-8)).epsilon(1e-12));
  CHECK(st.step == 1);
}

TEST_CASE("training lowers the loss and is deterministic") {
  std::vector<Sample> tr(samples().begin(), samples().begin() + 96);
  std::vector<Sample> va(samples().begin() + 150, samples().begin() + 200);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 4;
  cfg.seed = 5;
  const auto r = train(tr, va, cfg);
  REQUIRE(r.curve.size() == 4);
  CHECK(r.curve.back().train_loss < r.curve.front().train_loss);
  CHECK(r.best_epoch >= 0);
  double best = 1e300;
  for (const auto &e : r.curve) best = std::min(best, e.val_loss);
  CHECK(r.curve[r.best_epoch].val_loss == best);
  CHECK(loss_and_grad(va, r.best, nullptr) == doctest::Approx(best).epsilon(1e-9));
  const auto r2 = train(tr, va, cfg);
  CHECK(r2.best == r.best);
  CHECK(r2.last == r.last);
}
