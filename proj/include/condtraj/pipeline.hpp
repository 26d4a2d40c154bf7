// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_PIPELINE_HPP
#define CONDTRAJ_PIPELINE_HPP

#include "condtraj/augment.hpp"
#include "condtraj/bench.hpp"
#include "condtraj/model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace condtraj {

// key = value configuration. Lines starting with '#' are comments.
class RunConfig {
public:
  static RunConfig parse(const std::string &text, const std::string &origin = "<config>");
  static RunConfig load(const std::string &path);

  void set(const std::string &key, const std::string &value);
  bool has(const std::string &key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string> &values() const { return values_; }

  std::string get(const std::string &key, const std::string &fallback) const;
  std::string require(const std::string &key) const;
  double get_double(const std::string &key, double fallback) const;
  int get_int(const std::string &key, int fallback) const;
  std::uint64_t get_u64(const std::string &key, std::uint64_t fallback) const;
  bool get_bool(const std::string &key, bool fallback) const;
  std::vector<double> get_doubles(const std::string &key, const std::vector<double> &fallback) const;
  std::vector<std::string> get_list(const std::string &key, const std::vector<std::string> &fallback) const;

  std::uint64_t seed() const { return get_u64("seed", 0); }
  // Sorted "key=value" lines; the hash of this text tags every artifact.
  std::string canonical() const;
  std::string hash() const;

  // Throws Usage naming the first key outside `allowed`.
  void check_keys(const std::vector<std::string> &allowed, const std::string &command) const;

private:
  std::map<std::string, std::string> values_;
};

AugmentConfig augment_config_from(const RunConfig &config);
TrainConfig train_config_from(const RunConfig &config);

// Artifact names inside an output directory.
namespace files {
inline constexpr const char *kTrain = "train.jsonl";
inline constexpr const char *kValidation = "validation.jsonl";
inline constexpr const char *kModel = "model.json";
inline constexpr const char *kCurve = "curve.csv";
inline constexpr const char *kOffline = "offline.json";
inline constexpr const char *kResults = "results.json";
inline constexpr const char *kReportJson = "report.json";
inline constexpr const char *kReportText = "report.txt";
inline constexpr const char *kRunsCsv = "runs.csv";
inline constexpr const char *kTraceDir = "traces";
} // namespace files

// Each command writes into `out_dir` and returns a one-line summary.
std::string cmd_record(const RunConfig &config, const std::string &out_dir);
std::string cmd_augment(const RunConfig &config, const std::string &out_dir);
std::string cmd_train(const RunConfig &config, const std::string &out_dir);
std::string cmd_eval_offline(const RunConfig &config, const std::string &out_dir);
std::string cmd_eval_closedloop(const RunConfig &config, const std::string &out_dir);
std::string cmd_report(const RunConfig &config, const std::string &out_dir);

// Rebuilds the runs of an eval-closedloop directory from its results file
// and traces.
std::vector<BenchRun> load_runs(const std::string &dir);

std::string mae_json(const MaeBlock &mae, const std::string &config_hash);
MaeBlock parse_mae_json(const std::string &text);

} // namespace condtraj

#endif // CONDTRAJ_PIPELINE_HPP
