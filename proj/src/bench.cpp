// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/bench.hpp"

#include "condtraj/error.hpp"
#include "condtraj/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace condtraj {

const char *to_string(TaskKind kind) {
  switch (kind) {
  case TaskKind::straight: return "straight";
  case TaskKind::one_turn: return "one_turn";
  case TaskKind::navigation: return "navigation";
  case TaskKind::nav_dynamic: return "nav_dynamic";
  }
  return "?";
}

TaskKind task_kind_from_string(const std::string &name) {
  for (int i = 0; i < kNumTaskKinds; ++i) {
    if (name == to_string(static_cast<TaskKind>(i))) return static_cast<TaskKind>(i);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown task kind '" + name + "'");
}

Route task_route(const BenchTask &task, const RoadNetwork &network) {
  const auto lanes = shortest_lane_path(network, task.start_lane, task.start_s, task.goal_lane, task.goal_s);
  if (lanes.empty()) throw Error(ErrorKind::InvalidInput, "task " + std::to_string(task.id) + ": goal unreachable");
  return build_route(network, lanes, task.start_s, task.goal_s);
}

namespace {

bool shape_ok(TaskKind kind, const Route &r) {
  const int turns = r.turn_count();
  switch (kind) {
  case TaskKind::straight: return r.length() >= bench::kStraightMinLength && turns == 0;
  case TaskKind::one_turn: return r.length() >= bench::kMinLength && turns == 1;
  case TaskKind::navigation:
  case TaskKind::nav_dynamic: return r.length() >= bench::kMinLength && turns >= 2;
  }
  return false;
}

} // namespace

std::vector<BenchTask> generate_suite(const RoadNetwork &network, std::uint64_t seed, int per_kind,
                                      const std::vector<TaskKind> &kinds) {
  if (per_kind < 0) throw Error(ErrorKind::InvalidArgument, "generate_suite: negative task count");
  std::vector<int> drivable;
  for (const auto &l : network.lanes) {
    if (!l.stub) drivable.push_back(l.id);
  }
  std::vector<BenchTask> suite;
  for (TaskKind kind : kinds) {
    std::mt19937_64 rng(derive_seed(seed, std::string("suite/") + to_string(network.town) + "/" + to_string(kind)));
    std::uniform_int_distribution<std::size_t> pick(0, drivable.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int made = 0;
    for (int attempt = 0; made < per_kind; ++attempt) {
      if (attempt > 200000) throw Error(ErrorKind::InvalidInput, std::string("cannot generate ") + to_string(kind) + " tasks");
      const Lane &a = network.lanes[drivable[pick(rng)]];
      const Lane &b = network.lanes[drivable[pick(rng)]];
      BenchTask t;
      t.start_lane = a.id;
      t.start_s = 6.0 + unit(rng) * (a.length * 0.5 - 6.0);
      t.goal_lane = b.id;
      t.goal_s = b.length * 0.5 + unit(rng) * (b.length * 0.5 - 6.0);
      if (a.id == b.id) continue;
      const auto lanes = shortest_lane_path(network, t.start_lane, t.start_s, t.goal_lane, t.goal_s);
      if (lanes.empty()) continue;
      const Route r = build_route(network, lanes, t.start_s, t.goal_s);
      if (!shape_ok(kind, r)) continue;
      t.id = static_cast<int>(suite.size());
      t.kind = kind;
      t.town = network.town;
      t.seed = derive_seed(seed, "task/" + std::to_string(t.id) + "/" + to_string(network.town));
      t.route_length = r.length();
      t.turns = r.turn_count();
      const Vec2 s0 = r.point_at(0.0), g0 = r.goal();
      t.start = {s0.x, s0.y, r.heading_at(0.0)};
      t.goal = {g0.x, g0.y, r.heading_at(r.length())};
      if (kind == TaskKind::nav_dynamic) {
        std::uniform_int_distribution<int> cars(bench::kMinDynamicCars, 14);
        std::uniform_int_distribution<int> peds(2, 6);
        t.n_cars = 1 + cars(rng);
        t.n_pedestrians = peds(rng);
      }
      suite.push_back(t);
      ++made;
    }
  }
  return suite;
}

World task_world(const BenchTask &task, std::shared_ptr<const RoadNetwork> network) {
  EgoSpec ego;
  ego.route = task_route(task, *network);
  return spawn_scenario(std::move(network), task.n_cars, task.n_pedestrians, task.seed, ego);
}

BenchRun run_task(const BenchTask &task, std::shared_ptr<const RoadNetwork> network, const DrivePolicy &policy) {
  World w = task_world(task, network);
  BenchRun run{task, {}};
  run.result = drive_task(policy, std::move(w), task_timeout(task.route_length));
  return run;
}

// ---------------------------------------------------------------------------
// Infractions

std::vector<InfractionEvent> detect_infractions(const EpisodeLog &trace, const RoadNetwork &network) {
  std::vector<InfractionEvent> events;
  const int ego_id = trace.meta.ego_id;
  int opp_run = 0;
  long opp_start = 0;
  bool sidewalk = false, stat = false;
  std::map<int, bool> touching;

  for (std::size_t t = 0; t < trace.ticks.size(); ++t) {
    const auto *ego = trace.find_agent(t, ego_id);
    if (!ego) throw Error(ErrorKind::InvalidInput, "trace lacks the ego at tick " + std::to_string(t));
    const Vec2 p = ego->pose.position();
    const long tick = trace.ticks[t].tick;

    bool opposite = false;
    if (network.junction_at(p) < 0) {
      const auto rp = network.nearest_road(p);
      if (rp.road >= 0) {
        const Road &road = network.roads[rp.road];
        const Vec2 dir = road.b - road.a;
        const bool forward = dir.dot(unit_vector(ego->pose.heading)) >= 0.0;
        const double left = forward ? rp.lateral : -rp.lateral;
        opposite = left > bench::kOppositeLaneMargin;
      }
    }
    if (opposite) {
      if (opp_run == 0) opp_start = static_cast<long>(t);
      ++opp_run;
      if (opp_run == bench::kOppositeLaneTicks + 1) {
        const auto *first = trace.find_agent(opp_start, ego_id);
        events.push_back({InfractionKind::opposite_lane, trace.ticks[opp_start].tick, first->pose.position(), -1});
      }
    } else {
      opp_run = 0;
    }

    const double depth = network.offroad_depth(p);
    const bool on_sidewalk = depth > 0.0;
    if (on_sidewalk && !sidewalk) events.push_back({InfractionKind::sidewalk, tick, p, -1});
    sidewalk = on_sidewalk;
    const bool hit_static = depth + sim::kCarRadius > network.static_obstacle_depth();
    if (hit_static && !stat) events.push_back({InfractionKind::collision_static, tick, p, -1});
    stat = hit_static;

    for (const auto &a : trace.ticks[t].agents) {
      if (a.id == ego_id) continue;
      const double r = sim::kCarRadius + (a.kind == AgentKind::car ? sim::kCarRadius : sim::kPedestrianRadius);
      const bool now = (a.pose.position() - p).norm() < r;
      bool &was = touching[a.id];
      if (now && !was) {
        events.push_back({a.kind == AgentKind::car ? InfractionKind::collision_car : InfractionKind::collision_pedestrian,
                          tick, p, a.id});
      }
      was = now;
    }
  }

  // Red lights: appended in crossing order after the per-tick scan.
  for (std::size_t t = 1; t < trace.ticks.size(); ++t) {
    const auto *e0 = trace.find_agent(t - 1, ego_id);
    const auto *e1 = trace.find_agent(t, ego_id);
    for (const auto &n : network.intersections) {
      if (!n.signalized) continue;
      for (int lane_id : n.incoming) {
        const Lane &l = network.lanes[lane_id];
        const Vec2 dir = unit_vector(l.heading);
        const double u0 = (e0->pose.position() - l.start).dot(dir);
        const double u1 = (e1->pose.position() - l.start).dot(dir);
        const double w1 = dir.cross(e1->pose.position() - l.start);
        if (!(u0 < l.stop_line_s() && u1 >= l.stop_line_s())) continue;
        if (std::abs(w1) > 0.5 * l.width + 0.5) continue;
        if (std::cos(normalize_angle(e1->pose.heading - l.heading)) <= 0.0) continue;
        const auto &lights = trace.ticks[t - 1].lights;
        if (n.light_group < static_cast<int>(lights.size()) && lights[n.light_group].phase == LightPhase::red) {
          events.push_back({InfractionKind::red_light_run, trace.ticks[t].tick, e1->pose.position(), n.id});
        }
      }
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const InfractionEvent &a, const InfractionEvent &b) { return a.tick < b.tick; });
  return events;
}

LightCount count_light_crossings(const EpisodeLog &trace, const RoadNetwork &network) {
  LightCount c;
  const int ego_id = trace.meta.ego_id;
  for (std::size_t t = 1; t < trace.ticks.size(); ++t) {
    const auto *e0 = trace.find_agent(t - 1, ego_id);
    const auto *e1 = trace.find_agent(t, ego_id);
    for (const auto &n : network.intersections) {
      if (!n.signalized) continue;
      for (int lane_id : n.incoming) {
        const Lane &l = network.lanes[lane_id];
        const Vec2 dir = unit_vector(l.heading);
        const double u0 = (e0->pose.position() - l.start).dot(dir);
        const double u1 = (e1->pose.position() - l.start).dot(dir);
        const double w1 = dir.cross(e1->pose.position() - l.start);
        if (!(u0 < l.stop_line_s() && u1 >= l.stop_line_s())) continue;
        if (std::abs(w1) > 0.5 * l.width + 0.5) continue;
        if (std::cos(normalize_angle(e1->pose.heading - l.heading)) <= 0.0) continue;
        ++c.encountered;
        const auto &lights = trace.ticks[t - 1].lights;
        if (n.light_group < static_cast<int>(lights.size()) && lights[n.light_group].phase == LightPhase::red) ++c.run;
      }
    }
  }
  return c;
}

double trace_distance_m(const EpisodeLog &trace) {
  double d = 0.0;
  for (std::size_t t = 1; t < trace.ticks.size(); ++t) {
    d += (trace.find_agent(t, trace.meta.ego_id)->pose.position() -
          trace.find_agent(t - 1, trace.meta.ego_id)->pose.position())
             .norm();
  }
  return d;
}

// ---------------------------------------------------------------------------
// Report

std::optional<double> TownStats::red_light_ratio_pct() const {
  if (lights_encountered == 0) return std::nullopt;
  return 100.0 * lights_run / lights_encountered;
}

std::optional<double> TownStats::km_per_event(InfractionKind kind) const {
  const int n = events[static_cast<int>(kind)];
  if (n == 0) return std::nullopt;
  return km / n;
}

BenchReport aggregate_report(const std::vector<BenchRun> &runs, const std::optional<MaeBlock> &offline) {
  if (runs.empty()) throw Error(ErrorKind::InvalidArgument, "aggregate_report: no results");
  BenchReport rep;
  rep.offline = offline;
  for (const auto &r : runs) {
    auto &cell = rep.success[{r.task.kind, r.task.town}];
    ++cell.total;
    if (r.result.reached_goal) ++cell.successes;
    auto &town = rep.towns[r.task.town];
    town.km += r.result.distance_m / 1000.0;
    for (const auto &e : r.result.infractions) {
      if (e.kind != InfractionKind::red_light_run) ++town.events[static_cast<int>(e.kind)];
    }
    town.events[static_cast<int>(InfractionKind::red_light_run)] += r.result.lights_run;
    town.lights_encountered += r.result.lights_encountered;
    town.lights_run += r.result.lights_run;
  }
  return rep;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

constexpr InfractionKind kTableInfractions[] = {InfractionKind::opposite_lane, InfractionKind::sidewalk,
                                                InfractionKind::collision_static, InfractionKind::collision_car,
                                                InfractionKind::collision_pedestrian};

} // namespace

std::string format_km_per_event(const TownStats &stats, InfractionKind kind) {
  const auto v = stats.km_per_event(kind);
  return v ? fixed(*v, 2) : "> " + fixed(stats.km, 2);
}

std::string report_json(const BenchReport &report) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["kind"] = "bench_report";
  j["config_hash"] = report.config_hash;
  auto &succ = j["success"] = nlohmann::ordered_json::array();
  for (const auto &[key, cell] : report.success) {
    succ.push_back({{"task", to_string(key.first)},
                    {"town", to_string(key.second)},
                    {"successes", cell.successes},
                    {"total", cell.total},
                    {"rate_pct", cell.rate_pct()}});
  }
  auto &towns = j["towns"] = nlohmann::ordered_json::array();
  for (const auto &[town, st] : report.towns) {
    nlohmann::ordered_json t;
    t["town"] = to_string(town);
    t["km"] = st.km;
    for (int k = 0; k < kNumInfractionKinds; ++k) {
      const auto kind = static_cast<InfractionKind>(k);
      const auto v = st.km_per_event(kind);
      t["infractions"][to_string(kind)] = {{"events", st.events[k]},
                                           {"km_per_event", v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json()},
                                           {"display", format_km_per_event(st, kind)}};
    }
    t["lights_encountered"] = st.lights_encountered;
    t["lights_run"] = st.lights_run;
    const auto ratio = st.red_light_ratio_pct();
    t["red_light_ratio_pct"] = ratio ? nlohmann::ordered_json(*ratio) : nlohmann::ordered_json();
    towns.push_back(t);
  }
  if (report.offline) {
    const auto &m = *report.offline;
    j["offline_mae"] = {{"ego", m.ego}, {"ego_2s", m.ego_2s}, {"neighbors", m.neighbors},
                        {"neighbors_2s", m.neighbors_2s}, {"samples", m.samples}};
  } else {
    j["offline_mae"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string report_table(const BenchReport &report) {
  std::vector<TownId> towns;
  for (const auto &[t, st] : report.towns) towns.push_back(t);
  auto row = [&](const std::string &label, const std::vector<std::string> &cells) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-24s", label.c_str());
    std::string s = buf;
    for (const auto &c : cells) {
      std::snprintf(buf, sizeof buf, "%12s", c.c_str());
      s += buf;
    }
    return s + "\n";
  };
  std::vector<std::string> header;
  for (auto t : towns) header.push_back(to_string(t));

  std::string out = row("Success rate (%)", header);
  const char *labels[] = {"Straight", "One turn", "Navigation", "Nav. dynamic"};
  for (int k = 0; k < kNumTaskKinds; ++k) {
    std::vector<std::string> cells;
    bool any = false;
    for (auto t : towns) {
      auto it = report.success.find({static_cast<TaskKind>(k), t});
      if (it == report.success.end()) {
        cells.push_back("-");
      } else {
        any = true;
        cells.push_back(fixed(it->second.rate_pct(), 1));
      }
    }
    if (any) out += row(labels[k], cells);
  }
  out += "\n" + row("Km between infractions", header);
  const char *inf_labels[] = {"Opposite lane", "Sidewalk", "Collision: static", "Collision: car", "Collision: ped."};
  for (int i = 0; i < 5; ++i) {
    std::vector<std::string> cells;
    for (auto t : towns) cells.push_back(format_km_per_event(report.towns.at(t), kTableInfractions[i]));
    out += row(inf_labels[i], cells);
  }
  std::vector<std::string> red;
  for (auto t : towns) {
    const auto r = report.towns.at(t).red_light_ratio_pct();
    red.push_back(r ? fixed(*r, 1) : "n/a");
  }
  out += "\n" + row("Red lights run (%)", red);
  if (report.offline) {
    const auto &m = *report.offline;
    out += "\n" + row("Offline MAE (m)", {"full", "at 2 s"});
    out += row("Ego", {fixed(m.ego, 3), fixed(m.ego_2s, 3)});
    out += row("Neighbors", {fixed(m.neighbors, 3), fixed(m.neighbors_2s, 3)});
  }
  return out;
}

std::string runs_csv(const std::vector<BenchRun> &runs) {
  std::string out = "task_id,kind,town,seed,route_m,turns,n_cars,n_pedestrians,reached_goal,elapsed_s,distance_m";
  for (int k = 0; k < kNumInfractionKinds; ++k) out += std::string(",") + to_string(static_cast<InfractionKind>(k));
  out += ",lights_encountered,lights_run\n";
  for (const auto &r : runs) {
    std::array<int, kNumInfractionKinds> counts{};
    for (const auto &e : r.result.infractions) ++counts[static_cast<int>(e.kind)];
    out += std::to_string(r.task.id) + "," + to_string(r.task.kind) + "," + to_string(r.task.town) + "," +
           std::to_string(r.task.seed) + "," + fixed(r.task.route_length, 2) + "," + std::to_string(r.task.turns) +
           "," + std::to_string(r.task.n_cars) + "," + std::to_string(r.task.n_pedestrians) + "," +
           (r.result.reached_goal ? "1" : "0") + "," + fixed(r.result.elapsed, 1) + "," +
           fixed(r.result.distance_m, 2);
    for (int c : counts) out += "," + std::to_string(c);
    out += "," + std::to_string(r.result.lights_encountered) + "," + std::to_string(r.result.lights_run) + "\n";
  }
  return out;
}

} // namespace condtraj
