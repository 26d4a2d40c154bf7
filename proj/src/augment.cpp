// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/augment.hpp"

#include "condtraj/error.hpp"
#include "condtraj/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace condtraj {

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

namespace {

// Correction e(t) = (t - tau)^3 (a t + b) with e(0) = e0, e'(0) = e1; it and
// its first two derivatives vanish at tau. Coefficients highest degree first.
std::array<double, kPolyCoeffs> correction_axis(double e0, double e1, double tau) {
  const double t2 = tau * tau, t3 = t2 * tau;
  const double b = -e0 / t3;
  const double a = (3.0 * t2 * b - e1) / t3;
  return {a, b - 3.0 * tau * a, 3.0 * t2 * a - 3.0 * tau * b, 3.0 * t2 * b - t3 * a, -t3 * b};
}

Vec2 payload_point(const ProximityCell &c, int k) { return {c.payload[2 * k], c.payload[2 * k + 1]}; }

std::array<double, ds::kChannels> ego_window(const HistoryTensor &h, int i) {
  std::array<double, ds::kChannels> w{};
  for (int k = 0; k < ds::kK; ++k) {
    w[2 * k] = h.at(i, k, 0);
    w[2 * k + 1] = h.at(i, k, 1);
  }
  return w;
}

// Rebins payloads after a frame change; the entry nearest the ego wins a cell.
ProximityMap rebin(std::vector<ProximityCell> cells, const HistoryTensor &ego) {
  std::map<std::tuple<int, int, int>, std::pair<double, ProximityCell>> best;
  for (auto &c : cells) {
    const auto rc = map_cell(payload_point(c, ds::kK - 1));
    if (!rc) continue;
    c.row = rc->first;
    c.col = rc->second;
    const double d = (payload_point(c, ds::kK - 1) - ego.point(c.time, ds::kK - 1)).norm();
    const auto key = std::make_tuple(c.row, c.col, c.time);
    auto it = best.find(key);
    if (it == best.end() || d < it->second.first ||
        (d == it->second.first && c.payload < it->second.second.payload)) {
      best[key] = {d, c};
    }
  }
  ProximityMap out;
  for (auto &[key, v] : best) out.cells.push_back(v.second);
  return out;
}

} // namespace

PolyTrajectory2D recovery_correction(Vec2 p0, Vec2 v0, const PolyTrajectory2D &nominal, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "recovery duration must be positive");
  const Vec2 e0 = p0 - nominal.eval(0.0);
  const Vec2 e1 = v0 - nominal.velocity(0.0);
  PolyTrajectory2D e;
  e.cx = correction_axis(e0.x, e1.x, tau);
  e.cy = correction_axis(e0.y, e1.y, tau);
  return e;
}

PolyTrajectory2D recovery_polynomial(Vec2 p0, Vec2 v0, const PolyTrajectory2D &nominal, double tau) {
  PolyTrajectory2D r = recovery_correction(p0, v0, nominal, tau);
  for (int i = 0; i < kPolyCoeffs; ++i) {
    r.cx[i] += nominal.cx[i];
    r.cy[i] += nominal.cy[i];
  }
  return r;
}

std::optional<Sample> inject_deviation(const Sample &sample, const DeviationParams &params,
                                       const PointSeries &nominal_future) {
  if (params.lateral_amplitude < 0.0 || !(params.deviation_start > 0.0) || params.deviation_start > 2.0 ||
      !(params.recovery_duration > 0.0) || params.recovery_duration > 2.0) {
    throw Error(ErrorKind::InvalidArgument, "inject_deviation: parameters out of range");
  }
  const double d = params.signed_offset();
  const double alpha = params.angular_amplitude;
  const PolyTrajectory2D nominal = fit_polynomial(nominal_future, kPolyDegree);
  const Vec2 n0 = nominal.eval(0.0);
  const Vec2 nv0 = nominal.velocity(0.0);
  if (nv0.norm() < kMinRecoverySpeed) return std::nullopt;

  const PolyTrajectory2D corr =
      recovery_correction(n0 + Vec2{0.0, d}, rotate(nv0, alpha), nominal, params.recovery_duration);

  const Pose2D frame{0.0, d, alpha};
  Sample out = sample;
  out.deviated = true;

  // Past: smooth lateral ramp ending at the deviated pose, then the new frame.
  for (int i = 0; i < ds::kT; ++i)
    for (int k = 0; k < ds::kK; ++k) {
      const int offset = (i - (ds::kT - 1)) + (k - (ds::kK - 1));
      const double t = offset * kTickSeconds;
      const double w = smoothstep((t + params.deviation_start) / params.deviation_start);
      const Vec2 p = to_frame(sample.E.point(i, k) + Vec2{0.0, d * w}, frame);
      out.E.at(i, k, 0) = p.x;
      out.E.at(i, k, 1) = p.y;
    }
  for (int n = 0; n < ds::kN; ++n) {
    if (!sample.mask[n]) continue;
    for (int i = 0; i < ds::kT; ++i)
      for (int k = 0; k < ds::kK; ++k) {
        const Vec2 p = to_frame(sample.V[n].point(i, k), frame);
        out.V[n].at(i, k, 0) = p.x;
        out.V[n].at(i, k, 1) = p.y;
      }
    for (auto &pt : out.neigh_future[n]) {
      const Vec2 q = rotate({pt.x, pt.y}, -alpha);
      pt.x = q.x;
      pt.y = q.y;
    }
  }

  std::vector<ProximityCell> cells = sample.M.cells;
  for (auto &c : cells) {
    if (c.payload == ego_window(sample.E, c.time)) {
      c.payload = ego_window(out.E, c.time);
      continue;
    }
    for (int k = 0; k < ds::kK; ++k) {
      const Vec2 p = to_frame(payload_point(c, k), frame);
      c.payload[2 * k] = p.x;
      c.payload[2 * k + 1] = p.y;
    }
  }
  out.M = rebin(std::move(cells), out.E);

  out.ctx.lateral_offset() += d;
  out.ctx.heading_error() = normalize_angle(out.ctx.heading_error() + alpha);

  out.ego_future = nominal_future;
  for (auto &pt : out.ego_future) {
    // the nominal points plus the correction equal the recovery quartic up to the fit residual
    const Vec2 src = pt.t < params.recovery_duration ? Vec2{pt.x, pt.y} + corr.eval(pt.t) : Vec2{pt.x, pt.y};
    const Vec2 q = to_frame(src, frame);
    pt.x = q.x;
    pt.y = q.y;
  }
  return out;
}

Sample perturb_positions(const Sample &sample, double sigma_long, double sigma_lat, std::uint64_t seed) {
  if (sigma_long < 0.0 || sigma_lat < 0.0) throw Error(ErrorKind::InvalidArgument, "noise sigmas must be >= 0");
  Sample out = sample;
  if (sigma_long == 0.0 && sigma_lat == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nx(0.0, sigma_long), ny(0.0, sigma_lat);
  auto noise = [&](double &x, double &y) {
    if (sigma_long > 0.0) x += nx(rng);
    if (sigma_lat > 0.0) y += ny(rng);
  };
  auto noise_history = [&](HistoryTensor &h) {
    for (int j = 0; j < ds::kHistorySize; j += 2) noise(h.values[j], h.values[j + 1]);
  };
  noise_history(out.E);
  for (int n = 0; n < ds::kN; ++n) {
    if (out.mask[n]) noise_history(out.V[n]);
  }
  for (auto &c : out.M.cells) {
    for (int k = 0; k < ds::kK; ++k) noise(c.payload[2 * k], c.payload[2 * k + 1]);
  }
  return out;
}

ProximityMap perturb_map_occupancy(const ProximityMap &map, const HistoryTensor &ego, double p_remove, double p_add,
                                   std::uint64_t seed, MapPerturbStats *stats) {
  if (!(p_remove >= 0.0 && p_remove <= 1.0 && p_add >= 0.0 && p_add <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "map perturbation probabilities must lie in [0, 1]");
  }
  MapPerturbStats st;
  if (p_remove == 0.0 && p_add == 0.0) {
    if (stats) *stats = st;
    return map;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Chain cells into tracks: a cell continues a track when its first K-1
  // positions equal the last K-1 positions of the track's previous cell.
  std::vector<std::vector<std::size_t>> by_time(ds::kT);
  for (std::size_t i = 0; i < map.cells.size(); ++i) by_time[map.cells[i].time].push_back(i);
  std::vector<int> track_of(map.cells.size(), -1);
  std::vector<bool> track_is_ego;
  for (int t = 0; t < ds::kT; ++t) {
    for (std::size_t ci : by_time[t]) {
      const auto &c = map.cells[ci];
      int tr = -1;
      if (t > 0) {
        for (std::size_t pi : by_time[t - 1]) {
          const auto &p = map.cells[pi];
          if (std::equal(c.payload.begin(), c.payload.end() - 2, p.payload.begin() + 2)) {
            tr = track_of[pi];
            break;
          }
        }
      }
      if (tr < 0) {
        tr = static_cast<int>(track_is_ego.size());
        track_is_ego.push_back(false);
      }
      track_of[ci] = tr;
      if (c.payload == ego_window(ego, t)) track_is_ego[tr] = true;
    }
  }
  std::vector<bool> removed(track_is_ego.size(), false);
  for (std::size_t tr = 0; tr < track_is_ego.size(); ++tr) {
    if (track_is_ego[tr]) continue;
    if (unit(rng) < p_remove) {
      removed[tr] = true;
      ++st.removed_tracks;
    }
  }
  ProximityMap out;
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    if (!removed[track_of[i]]) out.cells.push_back(map.cells[i]);
  }

  // Spurious slow vehicles in spatial cells left empty at every time index.
  std::set<std::pair<int, int>> used;
  for (const auto &c : out.cells) used.insert({c.row, c.col});
  std::uniform_int_distribution<int> len_dist(3, ds::kT);
  for (int r = 0; r < ds::kRows; ++r)
    for (int col = 0; col < ds::kCols; ++col) {
      if (used.count({r, col})) continue;
      ++st.free_cells;
      if (!(unit(rng) < p_add)) continue;
      ++st.added_tracks;
      const int len = len_dist(rng);
      std::uniform_int_distribution<int> start_dist(0, ds::kT - len);
      const int start = start_dist(rng);
      const double v = (2.0 * unit(rng) - 1.0);
      const double travel = std::abs(v) * (len + ds::kK - 2) * kTickSeconds;
      const double x_lo = -ds::kHalfLength + r * ds::kCellLength + 0.05;
      const double span = ds::kCellLength - 0.1 - travel;
      const double x_start = x_lo + (v < 0.0 ? travel : 0.0) + unit(rng) * span;
      const double y = -ds::kHalfWidth + col * ds::kCellWidth + 0.05 + unit(rng) * (ds::kCellWidth - 0.1);
      for (int t = start; t < start + len; ++t) {
        ProximityCell c{r, col, t, {}};
        for (int k = 0; k < ds::kK; ++k) {
          const int step = (t - start) + k; // positions since the first window slot
          c.payload[2 * k] = x_start + v * step * kTickSeconds;
          c.payload[2 * k + 1] = y;
        }
        out.cells.push_back(c);
      }
    }
  std::sort(out.cells.begin(), out.cells.end(), [](const ProximityCell &a, const ProximityCell &b) {
    return std::tie(a.row, a.col, a.time) < std::tie(b.row, b.col, b.time);
  });
  if (stats) *stats = st;
  return out;
}

const char *to_string(AugmentMode mode) {
  switch (mode) {
  case AugmentMode::none: return "none";
  case AugmentMode::partial: return "partial";
  case AugmentMode::full: return "full";
  }
  return "?";
}

AugmentMode augment_mode_from_string(const std::string &name) {
  if (name == "none") return AugmentMode::none;
  if (name == "partial") return AugmentMode::partial;
  if (name == "full") return AugmentMode::full;
  throw Error(ErrorKind::InvalidArgument, "unknown augmentation mode '" + name + "'");
}

DeviationParams sample_deviation(const AugmentConfig &config, std::mt19937_64 &rng) {
  if (config.lateral_amplitudes.empty()) throw Error(ErrorKind::InvalidArgument, "no lateral amplitudes configured");
  std::uniform_int_distribution<std::size_t> amp(0, config.lateral_amplitudes.size() - 1);
  std::uniform_int_distribution<int> three(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DeviationParams p;
  p.lateral_amplitude = config.lateral_amplitudes[amp(rng)];
  p.side = unit(rng) < 0.5 ? DeviationSide::left : DeviationSide::right;
  const double a = std::atan(p.lateral_amplitude / config.orientation_lookahead);
  const int o = three(rng);
  p.angular_amplitude = o == 0 ? 0.0 : (o == 1 ? a : -a);
  p.deviation_start = config.deviation_start_min + unit(rng) * (config.deviation_start_max - config.deviation_start_min);
  p.recovery_duration = config.recovery_min + unit(rng) * (config.recovery_max - config.recovery_min);
  return p;
}

std::vector<int> select_deviation_episodes(const std::vector<int> &episode_ids, const AugmentConfig &config,
                                           std::uint64_t seed) {
  if (config.mode == AugmentMode::none) return {};
  if (config.episode_fraction < 0.0 || config.episode_fraction > 1.0) {
    throw Error(ErrorKind::InvalidArgument, "episode fraction must lie in [0, 1]");
  }
  std::vector<int> ids(episode_ids);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const auto count = static_cast<std::size_t>(std::lround(config.episode_fraction * static_cast<double>(ids.size())));
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  if (config.mode == AugmentMode::partial) {
    std::vector<int> half;
    for (std::size_t i = 0; i < ids.size(); i += 2) half.push_back(ids[i]);
    return half;
  }
  return ids;
}

Sample apply_input_noise(const Sample &sample, const AugmentConfig &config, std::uint64_t seed) {
  return perturb_positions(sample, config.sigma_long, config.sigma_lat, seed);
}

std::vector<Sample> augment_dataset(const std::vector<Sample> &samples, const AugmentConfig &config,
                                    std::uint64_t seed, AugmentStats *stats) {
  AugmentStats st;
  std::vector<int> ids;
  for (const auto &s : samples) ids.push_back(s.episode_id);
  const auto chosen = select_deviation_episodes(ids, config, derive_seed(seed, "augment/episodes"));
  const std::set<int> selected(chosen.begin(), chosen.end());
  st.episodes_selected = selected.size();

  std::vector<Sample> out;
  out.reserve(samples.size());
  for (const auto &s : samples) {
    const std::string key = std::to_string(s.episode_id) + "/" + std::to_string(s.center_tick);
    Sample cur = s;
    if (selected.count(s.episode_id)) {
      std::mt19937_64 rng(derive_seed(seed, "augment/deviation/" + key));
      const auto params = sample_deviation(config, rng);
      if (auto dev = inject_deviation(s, params, s.ego_future)) {
        cur = std::move(*dev);
        ++st.deviated;
      } else {
        ++st.skipped;
      }
    }
    if (config.p_remove > 0.0 || config.p_add > 0.0) {
      cur.M = perturb_map_occupancy(cur.M, cur.E, config.p_remove, config.p_add, derive_seed(seed, "augment/map/" + key));
    }
    cur = perturb_positions(cur, config.sigma_long, config.sigma_lat, derive_seed(seed, "augment/noise/" + key));
    out.push_back(std::move(cur));
  }
  st.samples = out.size();
  if (stats) *stats = st;
  return out;
}

} // namespace condtraj
