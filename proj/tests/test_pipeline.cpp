// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/error.hpp"
#include "condtraj/pipeline.hpp"
#include "condtraj/util.hpp"

#include "doctest.h"
#include "json.hpp"

#include <filesystem>

using namespace condtraj;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Usage;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name) : path(fs::temp_directory_path() / ("condtraj_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string &sub) const { return (path / sub).string(); }
};

} // namespace

TEST_CASE("config parsing") {
  const auto c = RunConfig::parse("# comment\n seed = 7\nepochs=3\n\nkinds = straight, navigation\nflag = true\n");
  CHECK(c.seed() == 7);
  CHECK(c.get_int("epochs", 0) == 3);
  CHECK(c.get_int("missing", 11) == 11);
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_list("kinds", {}) == std::vector<std::string>{"straight", "navigation"});
  CHECK(c.canonical() == "epochs=3\nflag=true\nkinds=straight, navigation\nseed=7\n");
  CHECK(c.hash().size() == 16);
  CHECK(c.hash() == RunConfig::parse("kinds = straight, navigation\nflag=true\nepochs = 3\nseed=7").hash());
  CHECK(c.hash() != RunConfig::parse("seed = 8\nepochs=3\nkinds = straight, navigation\nflag = true").hash());
  CHECK(kind_of([] { RunConfig::parse("novalue\n"); }) == ErrorKind::Usage);
  CHECK(kind_of([&] { c.get_int("kinds", 0); }) == ErrorKind::Usage);
  CHECK(kind_of([&] { c.require("absent"); }) == ErrorKind::Usage);
  CHECK(kind_of([&] { c.check_keys({"epochs", "kinds"}, "train"); }) == ErrorKind::Usage);
  CHECK_NOTHROW(c.check_keys({"epochs", "kinds", "flag"}, "train"));
  CHECK(kind_of([] { RunConfig::load("/nonexistent/config.cfg"); }) == ErrorKind::Usage);
}

TEST_CASE("config to component settings") {
  auto c = RunConfig::parse("seed=3\nmode=partial\nsigma_lat=0.1\nlearning_rate=0.001\nepochs=2");
  const auto a = augment_config_from(c);
  CHECK(a.mode == AugmentMode::partial);
  CHECK(a.sigma_lat == 0.1);
  const auto t = train_config_from(c);
  CHECK(t.learning_rate == 0.001);
  CHECK(t.epochs == 2);
  CHECK(t.seed == derive_seed(3, "train"));
  c.set("episode_fraction", "1.5");
  CHECK(kind_of([&] { augment_config_from(c); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("zero episodes is an insufficient-data error") {
  TempDir d("zero");
  CHECK(kind_of([&] { cmd_record(RunConfig::parse("episodes=0"), d / "rec"); }) == ErrorKind::InsufficientData);
  CHECK(kind_of([&] { cmd_record(RunConfig::parse("episodes=1\nepisode_seconds=3"), d / "rec"); }) ==
        ErrorKind::InsufficientData);
  CHECK(kind_of([&] { cmd_record(RunConfig::parse("episodes=1\nbogus=1"), d / "rec"); }) == ErrorKind::Usage);
  CHECK(kind_of([&] { cmd_train(RunConfig::parse("data=" + (d / "nowhere")), d / "m"); }) == ErrorKind::Io);
}

TEST_CASE("offline MAE file round trip") {
  MaeBlock m{0.25, 0.5, 1.0, 2.0, 12, 30};
  const auto back = parse_mae_json(mae_json(m, "h"));
  CHECK(back.ego == 0.25);
  CHECK(back.neighbors_2s == 2.0);
  CHECK(back.neighbor_tracks == 30);
  CHECK(kind_of([] { parse_mae_json("{\"kind\":\"other\"}"); }) == ErrorKind::Format);
}

TEST_CASE("small end-to-end run") {
  TempDir d("e2e");
  const auto rec_cfg = RunConfig::parse("seed=5\nepisodes=3\nepisode_seconds=30\nvalidation_fraction=0.34");
  cmd_record(rec_cfg, d / "rec");
  cmd_record(rec_cfg, d / "rec2");
  CHECK(read_file(d / "rec/train.jsonl") == read_file(d / "rec2/train.jsonl"));
  CHECK(read_file(d / "rec/validation.jsonl") == read_file(d / "rec2/validation.jsonl"));
  DatasetHeader h;
  const auto train_set = read_dataset(d / "rec/train.jsonl", &h);
  CHECK(h.config_hash == rec_cfg.hash());
  CHECK(train_set.size() + read_dataset(d / "rec/validation.jsonl").size() == 3 * (300 - 39));

  cmd_augment(RunConfig::parse("seed=5\nmode=full\nepisode_fraction=0.5\ndata=" + (d / "rec")), d / "aug");
  int deviated = 0;
  for (const auto &s : read_dataset(d / "aug/train.jsonl")) deviated += s.deviated;
  CHECK(deviated > 0);

  cmd_train(RunConfig::parse("seed=5\nepochs=1\nlearning_rate=0.001\ndata=" + (d / "aug")), d / "model");
  CHECK(fs::exists(d / "model/model.json"));
  CHECK(fs::exists(d / "model/curve.csv"));

  cmd_eval_offline(RunConfig::parse("model=oracle\ndata=" + (d / "rec")), d / "oracle");
  const auto oracle = parse_mae_json(read_file(d / "oracle/offline.json"));
  CHECK(oracle.ego < 0.05);
  CHECK(oracle.samples > 0);
  cmd_eval_offline(RunConfig::parse("model=" + (d / "model") + "\ndata=" + (d / "rec")), d / "off");
  const auto learned = parse_mae_json(read_file(d / "off/offline.json"));
  CHECK(learned.ego > oracle.ego);

  const std::string cl = "seed=5\ntowns=train\nkinds=straight\nper_kind=2\noffline=" + (d / "off");
  const auto summary = cmd_eval_closedloop(RunConfig::parse(cl), d / "cl");
  CHECK(summary.find("2/2") != std::string::npos);
  CHECK(fs::exists(d / "cl/traces/train_000.jsonl"));
  const auto report = nlohmann::json::parse(read_file(d / "cl/report.json"));
  CHECK(report.at("kind") == "bench_report");

  // report regenerated from disk matches the one written during evaluation
  cmd_report(RunConfig::parse("input=" + (d / "cl") + "\noffline=" + (d / "off")), d / "rep");
  CHECK(read_file(d / "rep/report.txt") == read_file(d / "cl/report.txt"));
  CHECK(read_file(d / "rep/runs.csv") == read_file(d / "cl/runs.csv"));
  const auto runs = load_runs(d / "cl");
  REQUIRE(runs.size() == 2);
  CHECK(runs[0].result.reached_goal);
}
