// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/dataset.hpp"

#include "condtraj/error.hpp"
#include "condtraj/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace condtraj {

namespace {

bool cell_less(const ProximityCell &a, const ProximityCell &b) {
  return std::tie(a.row, a.col, a.time) < std::tie(b.row, b.col, b.time);
}

} // namespace

const ProximityCell *ProximityMap::find(int row, int col, int time) const {
  ProximityCell key;
  key.row = row;
  key.col = col;
  key.time = time;
  auto it = std::lower_bound(cells.begin(), cells.end(), key, cell_less);
  if (it == cells.end() || it->row != row || it->col != col || it->time != time) return nullptr;
  return &*it;
}

std::vector<double> ProximityMap::dense() const {
  std::vector<double> out(ds::kMapSize, 0.0);
  for (const auto &c : cells) {
    for (int ch = 0; ch < ds::kChannels; ++ch) out[flat_index(c.row, c.col, c.time, ch)] = c.payload[ch];
  }
  return out;
}

ProximityMap ProximityMap::from_dense(std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(ds::kMapSize)) {
    throw Error(ErrorKind::Shape, "proximity map needs " + std::to_string(ds::kMapSize) + " values");
  }
  ProximityMap m;
  for (int r = 0; r < ds::kRows; ++r)
    for (int c = 0; c < ds::kCols; ++c)
      for (int t = 0; t < ds::kT; ++t) {
        ProximityCell cell{r, c, t, {}};
        bool any = false;
        for (int ch = 0; ch < ds::kChannels; ++ch) {
          cell.payload[ch] = values[flat_index(r, c, t, ch)];
          any = any || cell.payload[ch] != 0.0;
        }
        if (any) m.cells.push_back(cell);
      }
  return m;
}

std::optional<std::pair<int, int>> map_cell(Vec2 p) {
  if (!(p.x >= -ds::kHalfLength && p.x < ds::kHalfLength && p.y >= -ds::kHalfWidth && p.y < ds::kHalfWidth)) {
    return std::nullopt;
  }
  const int row = std::min(ds::kRows - 1, static_cast<int>(std::floor((p.x + ds::kHalfLength) / ds::kCellLength)));
  const int col = std::min(ds::kCols - 1, static_cast<int>(std::floor((p.y + ds::kHalfWidth) / ds::kCellWidth)));
  return std::make_pair(row, col);
}

const char *to_string(NavigationCommand nc) {
  switch (nc) {
  case NavigationCommand::left: return "left";
  case NavigationCommand::right: return "right";
  case NavigationCommand::cross: return "cross";
  case NavigationCommand::keep_lane: return "keep_lane";
  }
  return "?";
}

NavigationCommand command_from_string(const std::string &name) {
  for (int i = 0; i < kNumCommands; ++i) {
    const auto nc = static_cast<NavigationCommand>(i);
    if (name == to_string(nc)) return nc;
  }
  throw Error(ErrorKind::Format, "unknown navigation command '" + name + "'");
}

NavigationCommand classify_turn(double heading_change) {
  if (heading_change > ds::kTurnThreshold) return NavigationCommand::left;
  if (heading_change < -ds::kTurnThreshold) return NavigationCommand::right;
  return NavigationCommand::cross;
}

PointSeries zero_future() {
  PointSeries out(ds::kFutureTicks);
  for (int i = 0; i < ds::kFutureTicks; ++i) out[i].t = (i + 1) * kTickSeconds;
  return out;
}

HistoryTensor history_from_track(const Track &track) {
  HistoryTensor h;
  for (int i = 0; i < ds::kT; ++i)
    for (int k = 0; k < ds::kK; ++k) {
      h.at(i, k, 0) = track[i + k].x;
      h.at(i, k, 1) = track[i + k].y;
    }
  return h;
}

ProximityMap build_proximity_map(std::span<const MapTrack> tracks, int ego_id) {
  const MapTrack *ego = nullptr;
  for (const auto &t : tracks) {
    if (t.id == ego_id) ego = &t;
  }
  ProximityMap m;
  for (int i = 0; i < ds::kT; ++i) {
    const Vec2 ego_p = ego ? ego->track[i + ds::kK - 1] : Vec2{};
    // (row, col) -> (distance, id, track)
    std::map<std::pair<int, int>, std::tuple<double, int, const MapTrack *>> best;
    for (const auto &t : tracks) {
      const Vec2 p = t.track[i + ds::kK - 1];
      const auto cell = map_cell(p);
      if (!cell) continue;
      const double d = (p - ego_p).norm();
      auto it = best.find(*cell);
      if (it == best.end() || d < std::get<0>(it->second) ||
          (d == std::get<0>(it->second) && t.id < std::get<1>(it->second))) {
        best[*cell] = {d, t.id, &t};
      }
    }
    for (const auto &[rc, v] : best) {
      ProximityCell c{rc.first, rc.second, i, {}};
      const MapTrack *t = std::get<2>(v);
      for (int k = 0; k < ds::kK; ++k) {
        c.payload[2 * k] = t->track[i + k].x;
        c.payload[2 * k + 1] = t->track[i + k].y;
      }
      m.cells.push_back(c);
    }
  }
  std::sort(m.cells.begin(), m.cells.end(), cell_less);
  return m;
}

std::vector<int> select_neighbors(const TickRecord &tick, int ego_id, int n) {
  const AgentSnapshot *ego = nullptr;
  for (const auto &a : tick.agents) {
    if (a.id == ego_id) ego = &a;
  }
  if (!ego) throw Error(ErrorKind::InvalidInput, "select_neighbors: ego missing from tick");
  std::vector<std::pair<double, int>> cand;
  for (const auto &a : tick.agents) {
    if (a.id == ego_id || a.kind != AgentKind::car) continue;
    cand.emplace_back((a.pose.position() - ego->pose.position()).norm(), a.id);
  }
  std::sort(cand.begin(), cand.end());
  std::vector<int> out;
  for (std::size_t i = 0; i < cand.size() && static_cast<int>(i) < n; ++i) out.push_back(cand[i].second);
  return out;
}

namespace {

const AgentSnapshot &agent_at(std::span<const TickRecord> ticks, long index, int id) {
  const TickRecord &t = ticks[static_cast<std::size_t>(std::max(0L, index))];
  if (id >= 0 && id < static_cast<int>(t.agents.size()) && t.agents[id].id == id) return t.agents[id];
  for (const auto &a : t.agents) {
    if (a.id == id) return a;
  }
  throw Error(ErrorKind::InvalidInput, "agent " + std::to_string(id) + " missing at tick " + std::to_string(t.tick));
}

Track past_track(std::span<const TickRecord> ticks, std::size_t center, int id, const Pose2D &frame) {
  Track tr;
  const long first = static_cast<long>(center) - (ds::kT - 1) - (ds::kK - 1);
  for (int i = 0; i < ds::kT + ds::kK - 1; ++i) {
    tr[i] = to_frame(agent_at(ticks, first + i, id).pose.position(), frame);
  }
  return tr;
}

PointSeries fitted_future(const EpisodeLog &log, std::size_t center, int id, const Pose2D &frame, Vec2 origin) {
  PointSeries pts;
  pts.reserve(ds::kFutureTicks + 1);
  for (int k = 0; k <= ds::kFutureTicks; ++k) {
    const Vec2 p = to_frame(agent_at(log.ticks, static_cast<long>(center) + k, id).pose.position(), frame) - origin;
    pts.push_back({k * kTickSeconds, p.x, p.y});
  }
  return sample_trajectory(fit_polynomial(pts, kPolyDegree));
}

} // namespace

Sample build_sample_inputs(std::span<const TickRecord> ticks, std::size_t center, int ego_id) {
  if (center >= ticks.size()) throw Error(ErrorKind::InvalidArgument, "build_sample_inputs: center out of range");
  const TickRecord &now = ticks[center];
  const Pose2D frame = agent_at(ticks, static_cast<long>(center), ego_id).pose;

  Sample s;
  s.center_tick = now.tick;
  s.ctx = now.ego_ctx;
  std::vector<MapTrack> tracks;
  for (const auto &a : now.agents) {
    if (a.kind != AgentKind::car) continue;
    tracks.push_back({a.id, past_track(ticks, center, a.id, frame)});
  }
  for (const auto &t : tracks) {
    if (t.id == ego_id) s.E = history_from_track(t.track);
  }
  const auto neighbors = select_neighbors(now, ego_id);
  for (std::size_t n = 0; n < neighbors.size(); ++n) {
    for (const auto &t : tracks) {
      if (t.id == neighbors[n]) s.V[n] = history_from_track(t.track);
    }
    s.mask[n] = true;
    s.neighbor_ids[n] = neighbors[n];
  }
  s.M = build_proximity_map(tracks, ego_id);
  s.ego_future = zero_future();
  for (auto &f : s.neigh_future) f = zero_future();
  return s;
}

NavigationCommand compute_navigation_command(const EpisodeLog &log, std::size_t center_tick,
                                             const RoadNetwork &network) {
  if (center_tick >= log.ticks.size()) throw Error(ErrorKind::InvalidArgument, "navigation command: tick out of range");
  const int ego = log.meta.ego_id;
  auto pose = [&](std::size_t i) { return agent_at(log.ticks, static_cast<long>(i), ego).pose; };
  auto zone_of = [&](std::size_t i) {
    const Vec2 p = pose(i).position();
    for (const auto &n : network.intersections) {
      if ((p - n.pos).norm() < ds::kZoneRadius) return n.id;
    }
    return -1;
  };
  const std::size_t last = std::min(log.ticks.size() - 1, center_tick + ds::kNavLookaheadTicks);
  std::size_t enter = center_tick;
  int node = -1;
  for (std::size_t i = center_tick; i <= last; ++i) {
    node = zone_of(i);
    if (node >= 0) {
      enter = i;
      break;
    }
  }
  if (node < 0) return NavigationCommand::keep_lane;
  while (enter > 0 && zone_of(enter - 1) == node) --enter;
  std::size_t exit = enter;
  while (exit + 1 < log.ticks.size() && zone_of(exit) == node) ++exit;
  return classify_turn(normalize_angle(pose(exit).heading - pose(enter).heading));
}

NavigationCommand live_navigation_command(const Route &route, double route_s, const RoadNetwork &network) {
  constexpr double kPreview = 27.8; // 5 s at the cruise speed
  for (const auto &j : route.junctions) {
    const double margin = ds::kZoneRadius - network.intersections[j.node].radius;
    const double zone_in = j.s_lane_end - margin;
    const double zone_out = j.s_exit + margin;
    if (route_s > zone_out) continue;
    if (route_s >= zone_in - kPreview) return classify_turn(j.turn_angle);
    break;
  }
  return NavigationCommand::keep_lane;
}

std::vector<Sample> extract_windows(const EpisodeLog &log, const RoadNetwork &network, int episode_id) {
  std::vector<Sample> out;
  if (log.ticks.size() < static_cast<std::size_t>(ds::kWindowTicks)) return out;
  const int ego = log.meta.ego_id;
  out.reserve(log.ticks.size() - ds::kWindowTicks + 1);
  for (std::size_t c = ds::kT - 1; c + ds::kFutureTicks < log.ticks.size(); ++c) {
    Sample s = build_sample_inputs(log.ticks, c, ego);
    s.episode_id = episode_id;
    const Pose2D frame = agent_at(log.ticks, static_cast<long>(c), ego).pose;
    s.ego_future = fitted_future(log, c, ego, frame, {});
    for (int n = 0; n < ds::kN; ++n) {
      if (!s.mask[n]) continue;
      const Vec2 origin = s.V[n].current();
      s.neigh_future[n] = fitted_future(log, c, s.neighbor_ids[n], frame, origin);
    }
    s.nc = compute_navigation_command(log, c, network);
    out.push_back(std::move(s));
  }
  return out;
}

DatasetSplit split_by_episode(std::vector<Sample> samples, double validation_fraction) {
  std::set<int> ids;
  for (const auto &s : samples) ids.insert(s.episode_id);
  const std::size_t n = ids.size();
  std::size_t n_val = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(n)));
  if (n >= 2 && n_val == 0 && validation_fraction > 0.0) n_val = 1;
  if (n_val >= n && n > 0) n_val = n - 1;
  std::set<int> val;
  auto it = ids.rbegin();
  for (std::size_t i = 0; i < n_val; ++i, ++it) val.insert(*it);
  DatasetSplit out;
  for (auto &s : samples) (val.count(s.episode_id) ? out.validation : out.train).push_back(std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void append_points(std::string &out, const PointSeries &pts) {
  out += '[';
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out += ',';
    append_double(out, pts[i].x);
    out += ',';
    append_double(out, pts[i].y);
  }
  out += ']';
}

PointSeries parse_points(const nlohmann::json &j) {
  if (!j.is_array() || j.size() != 2 * ds::kFutureTicks) throw Error(ErrorKind::Format, "future needs 40 values");
  PointSeries out = zero_future();
  for (int i = 0; i < ds::kFutureTicks; ++i) {
    out[i].x = j[2 * i].get<double>();
    out[i].y = j[2 * i + 1].get<double>();
  }
  return out;
}

template <std::size_t N> void parse_fixed(const nlohmann::json &j, std::array<double, N> &dst, const char *what) {
  if (!j.is_array() || j.size() != N) {
    throw Error(ErrorKind::Format, std::string(what) + " needs " + std::to_string(N) + " values");
  }
  for (std::size_t i = 0; i < N; ++i) dst[i] = j[i].get<double>();
}

std::string header_line(const std::string &config_hash, std::size_t count) {
  nlohmann::json h = {
      {"format_version", ds::kFormatVersion},
      {"kind", "dataset"},
      {"T", ds::kT},
      {"K", ds::kK},
      {"N", ds::kN},
      {"map_dims", {ds::kRows, ds::kCols}},
      {"extent_m", {65.0, 10.5}},
      {"map_layout", "row,col,time,channel"},
      {"channel_order", "x0,y0,x1,y1,x2,y2 (oldest first)"},
      {"count", count},
      {"config_hash", config_hash},
  };
  return h.dump() + "\n";
}

} // namespace

std::string serialize_sample(const Sample &s) {
  std::string out;
  out.reserve(16384);
  out += "{\"episode\":" + std::to_string(s.episode_id);
  out += ",\"center\":" + std::to_string(s.center_tick);
  out += ",\"deviated\":";
  out += s.deviated ? "true" : "false";
  out += ",\"nc\":\"";
  out += to_string(s.nc);
  out += "\",\"ids\":[";
  for (int n = 0; n < ds::kN; ++n) {
    if (n) out += ',';
    out += std::to_string(s.neighbor_ids[n]);
  }
  out += "],\"mask\":[";
  for (int n = 0; n < ds::kN; ++n) {
    if (n) out += ',';
    out += s.mask[n] ? '1' : '0';
  }
  out += "],\"ctx\":";
  append_array(out, s.ctx.values);
  out += ",\"E\":";
  append_array(out, s.E.values);
  out += ",\"V\":[";
  for (int n = 0; n < ds::kN; ++n) {
    if (n) out += ',';
    append_array(out, s.V[n].values);
  }
  out += "],\"M\":";
  append_array(out, s.M.dense());
  out += ",\"M_occupied\":[";
  for (std::size_t i = 0; i < s.M.cells.size(); ++i) {
    const auto &c = s.M.cells[i];
    if (i) out += ',';
    out += std::to_string((c.row * ds::kCols + c.col) * ds::kT + c.time);
  }
  out += ']';
  out += ",\"ego_future\":";
  append_points(out, s.ego_future);
  out += ",\"neigh_future\":[";
  for (int n = 0; n < ds::kN; ++n) {
    if (n) out += ',';
    append_points(out, s.neigh_future[n]);
  }
  out += "]}";
  return out;
}

Sample parse_sample(const std::string &line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Format, std::string("malformed JSON: ") + e.what());
  }
  try {
    Sample s;
    s.episode_id = j.at("episode").get<int>();
    s.center_tick = j.at("center").get<long>();
    s.deviated = j.at("deviated").get<bool>();
    s.nc = command_from_string(j.at("nc").get<std::string>());
    const auto &ids = j.at("ids");
    const auto &mask = j.at("mask");
    if (ids.size() != ds::kN || mask.size() != ds::kN) throw Error(ErrorKind::Format, "ids/mask need 5 entries");
    for (int n = 0; n < ds::kN; ++n) {
      s.neighbor_ids[n] = ids[n].get<int>();
      s.mask[n] = mask[n].get<int>() != 0;
    }
    parse_fixed(j.at("ctx"), s.ctx.values, "ctx");
    parse_fixed(j.at("E"), s.E.values, "E");
    const auto &V = j.at("V");
    if (V.size() != ds::kN) throw Error(ErrorKind::Format, "V needs 5 slots");
    for (int n = 0; n < ds::kN; ++n) parse_fixed(V[n], s.V[n].values, "V slot");
    const auto &M = j.at("M");
    if (!M.is_array() || M.size() != static_cast<std::size_t>(ds::kMapSize)) {
      throw Error(ErrorKind::Format, "M needs " + std::to_string(ds::kMapSize) + " values");
    }
    const auto dense = M.get<std::vector<double>>();
    // occupancy is explicit: an all-zero payload (ego standing at the origin) is still a vehicle
    for (const auto &idx : j.at("M_occupied")) {
      const int flat = idx.get<int>();
      if (flat < 0 || flat >= ds::kRows * ds::kCols * ds::kT) throw Error(ErrorKind::Format, "M_occupied out of range");
      ProximityCell c{flat / (ds::kCols * ds::kT), (flat / ds::kT) % ds::kCols, flat % ds::kT, {}};
      for (int ch = 0; ch < ds::kChannels; ++ch) c.payload[ch] = dense[ProximityMap::flat_index(c.row, c.col, c.time, ch)];
      if (!s.M.cells.empty() && !cell_less(s.M.cells.back(), c)) throw Error(ErrorKind::Format, "M_occupied not sorted");
      s.M.cells.push_back(c);
    }
    if (s.M.dense() != dense) throw Error(ErrorKind::Format, "M has values outside occupied cells");
    s.ego_future = parse_points(j.at("ego_future"));
    const auto &nf = j.at("neigh_future");
    if (nf.size() != ds::kN) throw Error(ErrorKind::Format, "neigh_future needs 5 slots");
    for (int n = 0; n < ds::kN; ++n) s.neigh_future[n] = parse_points(nf[n]);
    return s;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Format, std::string("schema violation: ") + e.what());
  }
}

void write_dataset(std::span<const Sample> samples, const std::string &path, const std::string &config_hash) {
  std::string out = header_line(config_hash, samples.size());
  for (const auto &s : samples) {
    out += serialize_sample(s);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<Sample> read_dataset(const std::string &path, DatasetHeader *header) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  DatasetHeader h;
  std::vector<Sample> out;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      if (!have_header) {
        const auto j = nlohmann::json::parse(line);
        if (j.value("kind", "") != "dataset") throw Error(ErrorKind::Format, "not a dataset file");
        h.format_version = j.at("format_version").get<int>();
        if (h.format_version != ds::kFormatVersion) {
          throw Error(ErrorKind::Format, "unsupported format_version " + std::to_string(h.format_version));
        }
        if (j.at("T").get<int>() != ds::kT || j.at("K").get<int>() != ds::kK || j.at("N").get<int>() != ds::kN) {
          throw Error(ErrorKind::Format, "tensor dimensions differ from this build");
        }
        h.count = j.at("count").get<std::size_t>();
        h.config_hash = j.at("config_hash").get<std::string>();
        have_header = true;
        out.reserve(h.count);
        continue;
      }
      out.push_back(parse_sample(line));
    } catch (const Error &e) {
      throw Error(ErrorKind::Format, path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception &e) {
      throw Error(ErrorKind::Format, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorKind::Format, path + ": missing dataset header");
  if (out.size() != h.count) {
    throw Error(ErrorKind::Format, path + ": truncated, header promises " + std::to_string(h.count) +
                                       " samples, found " + std::to_string(out.size()));
  }
  if (header) *header = h;
  return out;
}

} // namespace condtraj
