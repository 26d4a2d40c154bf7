// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/pipeline.hpp"

#include "condtraj/error.hpp"
#include "condtraj/util.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace condtraj {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string &key, const std::string &text) {
  double v = 0.0;
  const auto *end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
    throw Error(ErrorKind::Usage, "config: '" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

template <typename Int> Int parse_int(const std::string &key, const std::string &text) {
  Int v = 0;
  const auto *end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw Error(ErrorKind::Usage, "config: '" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

std::string path_in(const std::string &dir, const std::string &name) { return (fs::path(dir) / name).string(); }

// A directory argument resolves to the named file inside it.
std::string resolve(const std::string &path, const std::string &default_name) {
  return fs::is_directory(path) ? path_in(path, default_name) : path;
}

} // namespace

// ---------------------------------------------------------------------------
// RunConfig

RunConfig RunConfig::parse(const std::string &text, const std::string &origin) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Usage, origin + ":" + std::to_string(n) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::Usage, origin + ":" + std::to_string(n) + ": empty key");
    c.set(key, trim(line.substr(eq + 1)));
  }
  return c;
}

RunConfig RunConfig::load(const std::string &path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error &e) {
    throw Error(ErrorKind::Usage, e.what());
  }
  return parse(text, path);
}

void RunConfig::set(const std::string &key, const std::string &value) { values_[key] = value; }

std::string RunConfig::get(const std::string &key, const std::string &fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string RunConfig::require(const std::string &key) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) throw Error(ErrorKind::Usage, "config: missing '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string &key, double fallback) const {
  return has(key) ? parse_double(key, values_.at(key)) : fallback;
}

int RunConfig::get_int(const std::string &key, int fallback) const {
  return has(key) ? parse_int<int>(key, values_.at(key)) : fallback;
}

std::uint64_t RunConfig::get_u64(const std::string &key, std::uint64_t fallback) const {
  return has(key) ? parse_int<std::uint64_t>(key, values_.at(key)) : fallback;
}

bool RunConfig::get_bool(const std::string &key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto &v = values_.at(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::Usage, "config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string &key, const std::vector<double> &fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const auto &item : split_list(values_.at(key))) out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::string> RunConfig::get_list(const std::string &key, const std::vector<std::string> &fallback) const {
  return has(key) ? split_list(values_.at(key)) : fallback;
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto &[k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(canonical())); }

void RunConfig::check_keys(const std::vector<std::string> &allowed, const std::string &command) const {
  for (const auto &[k, v] : values_) {
    if (k == "seed") continue;
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw Error(ErrorKind::Usage, command + ": unknown config key '" + k + "'");
    }
  }
}

AugmentConfig augment_config_from(const RunConfig &c) {
  AugmentConfig a;
  a.mode = augment_mode_from_string(c.get("mode", to_string(a.mode)));
  a.episode_fraction = c.get_double("episode_fraction", a.episode_fraction);
  a.lateral_amplitudes = c.get_doubles("amplitudes", a.lateral_amplitudes);
  a.orientation_lookahead = c.get_double("orientation_lookahead", a.orientation_lookahead);
  a.deviation_start_min = c.get_double("deviation_start_min", a.deviation_start_min);
  a.deviation_start_max = c.get_double("deviation_start_max", a.deviation_start_max);
  a.recovery_min = c.get_double("recovery_min", a.recovery_min);
  a.recovery_max = c.get_double("recovery_max", a.recovery_max);
  a.sigma_long = c.get_double("sigma_long", a.sigma_long);
  a.sigma_lat = c.get_double("sigma_lat", a.sigma_lat);
  a.p_remove = c.get_double("p_remove", a.p_remove);
  a.p_add = c.get_double("p_add", a.p_add);
  if (a.episode_fraction < 0.0 || a.episode_fraction > 1.0) {
    throw Error(ErrorKind::InvalidArgument, "augment: episode_fraction must lie in [0, 1]");
  }
  if (a.sigma_long < 0.0 || a.sigma_lat < 0.0) throw Error(ErrorKind::InvalidArgument, "augment: negative sigma");
  if (a.p_remove < 0.0 || a.p_remove > 1.0 || a.p_add < 0.0 || a.p_add > 1.0) {
    throw Error(ErrorKind::InvalidArgument, "augment: probabilities must lie in [0, 1]");
  }
  return a;
}

TrainConfig train_config_from(const RunConfig &c) {
  TrainConfig t;
  t.learning_rate = c.get_double("learning_rate", t.learning_rate);
  t.batch_size = c.get_int("batch_size", t.batch_size);
  t.beta1 = c.get_double("beta1", t.beta1);
  t.beta2 = c.get_double("beta2", t.beta2);
  t.epsilon = c.get_double("epsilon", t.epsilon);
  t.epochs = c.get_int("epochs", t.epochs);
  t.lr_decay = c.get_double("lr_decay", t.lr_decay);
  t.neighbor_weight = c.get_double("neighbor_weight", t.neighbor_weight);
  t.seed = derive_seed(c.seed(), "train");
  if (t.batch_size < 1 || t.epochs < 0 || !(t.learning_rate > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "train: batch_size >= 1, epochs >= 0 and learning_rate > 0 required");
  }
  return t;
}

// ---------------------------------------------------------------------------
// record / augment / train

std::string cmd_record(const RunConfig &config, const std::string &out_dir) {
  config.check_keys({"episodes", "episode_seconds", "town", "validation_fraction", "min_cars", "max_cars",
                     "min_pedestrians", "max_pedestrians", "keep_logs"},
                    "record");
  const int episodes = config.get_int("episodes", 10);
  const double seconds = config.get_double("episode_seconds", 180.0);
  if (episodes <= 0) throw Error(ErrorKind::InsufficientData, "record: zero episodes give an empty dataset");
  if (!(seconds > 0.0)) throw Error(ErrorKind::InvalidArgument, "record: episode_seconds must be positive");
  RecordOptions opt;
  opt.min_cars = config.get_int("min_cars", opt.min_cars);
  opt.max_cars = config.get_int("max_cars", opt.max_cars);
  opt.min_pedestrians = config.get_int("min_pedestrians", opt.min_pedestrians);
  opt.max_pedestrians = config.get_int("max_pedestrians", opt.max_pedestrians);
  const bool keep_logs = config.get_bool("keep_logs", false);
  const auto net = std::make_shared<const RoadNetwork>(build_town(town_from_string(config.get("town", "train"))));
  const std::string hash = config.hash();

  ensure_directory(out_dir);
  if (keep_logs) ensure_directory(path_in(out_dir, "episodes"));
  std::vector<Sample> all;
  for (int e = 0; e < episodes; ++e) {
    EpisodeLog log = record_episode(net, derive_seed(config.seed(), "record/episode/" + std::to_string(e)), seconds, opt);
    log.meta.config_hash = hash;
    if (keep_logs) {
      char name[32];
      std::snprintf(name, sizeof name, "ep_%03d.jsonl", e);
      write_episode_log(log, path_in(path_in(out_dir, "episodes"), name));
    }
    auto s = extract_windows(log, *net, e);
    all.insert(all.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  if (all.empty()) throw Error(ErrorKind::InsufficientData, "record: episodes too short to hold a window");
  const auto split = split_by_episode(std::move(all), config.get_double("validation_fraction", 0.1));
  write_dataset(split.train, path_in(out_dir, files::kTrain), hash);
  write_dataset(split.validation, path_in(out_dir, files::kValidation), hash);
  return "record: " + std::to_string(episodes) + " episodes, " + std::to_string(split.train.size()) + " train / " +
         std::to_string(split.validation.size()) + " validation samples";
}

std::string cmd_augment(const RunConfig &config, const std::string &out_dir) {
  config.check_keys({"data", "mode", "episode_fraction", "amplitudes", "orientation_lookahead", "deviation_start_min",
                     "deviation_start_max", "recovery_min", "recovery_max", "sigma_long", "sigma_lat", "p_remove",
                     "p_add"},
                    "augment");
  const std::string data = config.require("data");
  const AugmentConfig ac = augment_config_from(config);
  const std::string hash = config.hash();
  const auto train = read_dataset(path_in(data, files::kTrain));
  auto validation = read_dataset(path_in(data, files::kValidation));

  AugmentStats stats;
  const auto augmented = augment_dataset(train, ac, derive_seed(config.seed(), "augment/train"), &stats);
  // Validation inputs see the same sensor noise as training; labels and
  // trajectories stay nominal.
  if (ac.sigma_long > 0.0 || ac.sigma_lat > 0.0) {
    const std::uint64_t base = derive_seed(config.seed(), "augment/validation");
    for (std::size_t i = 0; i < validation.size(); ++i) {
      validation[i] = apply_input_noise(validation[i], ac, derive_seed(base, std::to_string(i)));
    }
  }
  ensure_directory(out_dir);
  write_dataset(augmented, path_in(out_dir, files::kTrain), hash);
  write_dataset(validation, path_in(out_dir, files::kValidation), hash);
  return "augment: mode " + std::string(to_string(ac.mode)) + ", " + std::to_string(stats.deviated) + " of " +
         std::to_string(stats.samples) + " train samples deviated";
}

std::string cmd_train(const RunConfig &config, const std::string &out_dir) {
  config.check_keys({"data", "learning_rate", "batch_size", "beta1", "beta2", "epsilon", "epochs", "lr_decay",
                     "neighbor_weight"},
                    "train");
  const std::string data = config.require("data");
  const TrainConfig tc = train_config_from(config);
  const std::string hash = config.hash();
  const auto train_set = read_dataset(path_in(data, files::kTrain));
  const auto validation = read_dataset(path_in(data, files::kValidation));
  if (train_set.empty()) throw Error(ErrorKind::InsufficientData, "train: empty training set");

  const auto result = train(train_set, validation, tc);
  ensure_directory(out_dir);
  save_checkpoint(result.best, path_in(out_dir, files::kModel), hash);
  std::string curve = "epoch,learning_rate,train_loss,val_loss,val_ego,val_ego_2s,val_neighbors,val_neighbors_2s\n";
  for (const auto &e : result.curve) {
    curve += std::to_string(e.epoch);
    for (double v : {e.learning_rate, e.train_loss, e.val_loss, e.val_mae.ego, e.val_mae.ego_2s, e.val_mae.neighbors,
                     e.val_mae.neighbors_2s}) {
      curve += ",";
      append_double(curve, v);
    }
    curve += "\n";
  }
  write_file(path_in(out_dir, files::kCurve), curve);
  std::string summary = "train: " + std::to_string(train_set.size()) + " samples, " + std::to_string(tc.epochs) +
                        " epochs, best epoch " + std::to_string(result.best_epoch);
  if (!result.curve.empty()) {
    char buf[96];
    const auto &b = result.curve[std::max(result.best_epoch, 0)];
    std::snprintf(buf, sizeof buf, ", val loss %.4f, ego MAE %.3f m", b.val_loss, b.val_mae.ego);
    summary += buf;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// evaluation

std::string mae_json(const MaeBlock &m, const std::string &config_hash) {
  ojson j;
  j["format_version"] = 1;
  j["kind"] = "offline_mae";
  j["config_hash"] = config_hash;
  j["ego"] = m.ego;
  j["ego_2s"] = m.ego_2s;
  j["neighbors"] = m.neighbors;
  j["neighbors_2s"] = m.neighbors_2s;
  j["samples"] = m.samples;
  j["neighbor_tracks"] = m.neighbor_tracks;
  return j.dump(2) + "\n";
}

MaeBlock parse_mae_json(const std::string &text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("kind") != "offline_mae") throw Error(ErrorKind::Format, "not an offline MAE file");
    MaeBlock m;
    m.ego = j.at("ego").get<double>();
    m.ego_2s = j.at("ego_2s").get<double>();
    m.neighbors = j.at("neighbors").get<double>();
    m.neighbors_2s = j.at("neighbors_2s").get<double>();
    m.samples = j.at("samples").get<std::size_t>();
    m.neighbor_tracks = j.at("neighbor_tracks").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Format, std::string("offline MAE file: ") + e.what());
  }
}

std::string cmd_eval_offline(const RunConfig &config, const std::string &out_dir) {
  config.check_keys({"model", "data"}, "eval-offline");
  const std::string model = config.require("model");
  const auto samples = read_dataset(resolve(config.require("data"), files::kValidation));
  if (samples.empty()) throw Error(ErrorKind::InsufficientData, "eval-offline: empty dataset");
  MaeBlock mae;
  if (model == "oracle") {
    // Replays the labels through the polynomial family.
    mae = evaluate_mae(samples, [](const Sample &s) {
      Prediction p;
      p.ego = fit_polynomial(s.ego_future);
      for (int i = 0; i < ds::kN; ++i) p.neighbors[i] = fit_polynomial(s.neigh_future[i]);
      return p;
    });
  } else {
    mae = evaluate_mae(samples, load_checkpoint(resolve(model, files::kModel)));
  }
  ensure_directory(out_dir);
  write_file(path_in(out_dir, files::kOffline), mae_json(mae, config.hash()));
  char buf[160];
  std::snprintf(buf, sizeof buf, "eval-offline: %zu samples, ego %.4f / %.4f m, neighbors %.4f / %.4f m", mae.samples,
                mae.ego, mae.ego_2s, mae.neighbors, mae.neighbors_2s);
  return buf;
}

namespace {

ojson task_json(const BenchTask &t) {
  return {{"id", t.id},
          {"kind", to_string(t.kind)},
          {"town", to_string(t.town)},
          {"seed", t.seed},
          {"start_lane", t.start_lane},
          {"start_s", t.start_s},
          {"goal_lane", t.goal_lane},
          {"goal_s", t.goal_s},
          {"start", {t.start.x, t.start.y, t.start.heading}},
          {"goal", {t.goal.x, t.goal.y, t.goal.heading}},
          {"route_length", t.route_length},
          {"turns", t.turns},
          {"n_cars", t.n_cars},
          {"n_pedestrians", t.n_pedestrians}};
}

BenchTask task_from_json(const nlohmann::json &j) {
  BenchTask t;
  t.id = j.at("id").get<int>();
  t.kind = task_kind_from_string(j.at("kind").get<std::string>());
  t.town = town_from_string(j.at("town").get<std::string>());
  t.seed = j.at("seed").get<std::uint64_t>();
  t.start_lane = j.at("start_lane").get<int>();
  t.start_s = j.at("start_s").get<double>();
  t.goal_lane = j.at("goal_lane").get<int>();
  t.goal_s = j.at("goal_s").get<double>();
  const auto &s = j.at("start");
  const auto &g = j.at("goal");
  t.start = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
  t.goal = {g.at(0).get<double>(), g.at(1).get<double>(), g.at(2).get<double>()};
  t.route_length = j.at("route_length").get<double>();
  t.turns = j.at("turns").get<int>();
  t.n_cars = j.at("n_cars").get<int>();
  t.n_pedestrians = j.at("n_pedestrians").get<int>();
  return t;
}

std::string trace_name(const BenchTask &t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03d.jsonl", to_string(t.town), t.id);
  return buf;
}

void write_report_files(const BenchReport &report, const std::vector<BenchRun> &runs, const std::string &out_dir) {
  write_file(path_in(out_dir, files::kReportJson), report_json(report));
  write_file(path_in(out_dir, files::kReportText), report_table(report));
  write_file(path_in(out_dir, files::kRunsCsv), runs_csv(runs));
}

std::string success_summary(const std::vector<BenchRun> &runs) {
  int ok = 0;
  for (const auto &r : runs) ok += r.result.reached_goal ? 1 : 0;
  return std::to_string(ok) + "/" + std::to_string(runs.size()) + " tasks reached the goal";
}

} // namespace

std::string cmd_eval_closedloop(const RunConfig &config, const std::string &out_dir) {
  config.check_keys({"model", "towns", "kinds", "per_kind", "suite_seed", "sigma_long", "sigma_lat", "offline"},
                    "eval-closedloop");
  const std::string model = config.get("model", "expert");
  const int per_kind = config.get_int("per_kind", bench::kTasksPerKind);
  const std::uint64_t suite_seed = config.get_u64("suite_seed", config.seed());
  std::vector<TaskKind> kinds;
  for (const auto &k : config.get_list("kinds", {"straight", "one_turn", "navigation", "nav_dynamic"})) {
    kinds.push_back(task_kind_from_string(k));
  }
  const std::string hash = config.hash();

  DrivePolicy policy;
  ModelParams params;
  if (model != "expert") {
    params = load_checkpoint(resolve(model, files::kModel));
    policy.kind = DrivePolicy::Kind::model;
    policy.params = &params;
    policy.sigma_long = config.get_double("sigma_long", 0.0);
    policy.sigma_lat = config.get_double("sigma_lat", 0.0);
  }
  std::optional<MaeBlock> offline;
  if (config.has("offline")) offline = parse_mae_json(read_file(resolve(config.get("offline", ""), files::kOffline)));

  ensure_directory(out_dir);
  ensure_directory(path_in(out_dir, files::kTraceDir));
  std::vector<BenchRun> runs;
  ojson results;
  results["format_version"] = 1;
  results["kind"] = "closedloop_results";
  results["config_hash"] = hash;
  results["policy"] = model == "expert" ? "expert" : "model";
  results["runs"] = ojson::array();
  for (const auto &town_name : config.get_list("towns", {"train", "test"})) {
    const auto net = std::make_shared<const RoadNetwork>(build_town(town_from_string(town_name)));
    for (const auto &task : generate_suite(*net, suite_seed, per_kind, kinds)) {
      policy.noise_seed = derive_seed(config.seed(), "closedloop/noise/" + town_name + "/" + std::to_string(task.id));
      BenchRun run = run_task(task, net, policy);
      run.result.trace.meta.config_hash = hash;
      const std::string rel = std::string(files::kTraceDir) + "/" + trace_name(task);
      write_episode_log(run.result.trace, path_in(out_dir, rel));
      ojson r;
      r["task"] = task_json(task);
      r["reached_goal"] = run.result.reached_goal;
      r["timed_out"] = run.result.timed_out;
      r["immobilized"] = run.result.immobilized;
      r["elapsed"] = run.result.elapsed;
      r["timeout"] = run.result.timeout;
      r["replans"] = run.result.replans;
      r["trace"] = rel;
      results["runs"].push_back(std::move(r));
      runs.push_back(std::move(run));
    }
  }
  if (runs.empty()) throw Error(ErrorKind::InvalidArgument, "eval-closedloop: empty suite");
  write_file(path_in(out_dir, files::kResults), results.dump(2) + "\n");
  BenchReport report = aggregate_report(runs, offline);
  report.config_hash = hash;
  write_report_files(report, runs, out_dir);
  return "eval-closedloop: " + success_summary(runs);
}

std::vector<BenchRun> load_runs(const std::string &dir) {
  const std::string path = path_in(dir, files::kResults);
  nlohmann::json results;
  try {
    results = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Format, path + ": " + e.what());
  }
  std::map<TownId, RoadNetwork> nets;
  std::vector<BenchRun> runs;
  try {
    if (results.at("kind") != "closedloop_results") throw Error(ErrorKind::Format, path + ": not a results file");
    for (const auto &r : results.at("runs")) {
      BenchRun run;
      run.task = task_from_json(r.at("task"));
      if (!nets.count(run.task.town)) nets.emplace(run.task.town, build_town(run.task.town));
      const RoadNetwork &net = nets.at(run.task.town);
      DriveResult &d = run.result;
      d.reached_goal = r.at("reached_goal").get<bool>();
      d.timed_out = r.at("timed_out").get<bool>();
      d.immobilized = r.at("immobilized").get<bool>();
      d.elapsed = r.at("elapsed").get<double>();
      d.timeout = r.at("timeout").get<double>();
      d.replans = r.at("replans").get<int>();
      d.route_length = run.task.route_length;
      d.trace = read_episode_log(path_in(dir, r.at("trace").get<std::string>()));
      d.distance_m = trace_distance_m(d.trace);
      d.infractions = detect_infractions(d.trace, net);
      const auto lights = count_light_crossings(d.trace, net);
      d.lights_encountered = lights.encountered;
      d.lights_run = lights.run;
      runs.push_back(std::move(run));
    }
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::Format, path + ": " + e.what());
  }
  return runs;
}

std::string cmd_report(const RunConfig &config, const std::string &out_dir) {
  config.check_keys({"input", "offline"}, "report");
  const auto runs = load_runs(config.require("input"));
  std::optional<MaeBlock> offline;
  if (config.has("offline")) offline = parse_mae_json(read_file(resolve(config.get("offline", ""), files::kOffline)));
  BenchReport report = aggregate_report(runs, offline);
  report.config_hash = config.hash();
  ensure_directory(out_dir);
  write_report_files(report, runs, out_dir);
  return "report: " + success_summary(runs);
}

} // namespace condtraj
