// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

// Command-line front end; talks to the library only through the C API.

#include "condtraj/condtraj.h"

#include "CLI11.hpp"

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

struct Options {
  std::string config;
  std::string seed;
  std::string out;
  std::vector<std::string> sets;
};

struct ConfigDeleter {
  void operator()(ct_config *c) const { ct_config_free(c); }
};

int fail(ct_status status) {
  std::fprintf(stderr, "condtraj: %s\n", ct_last_error());
  return static_cast<int>(status);
}

int run(const std::string &command, const Options &opt) {
  ct_config *raw = nullptr;
  ct_status st = opt.config.empty() ? ct_config_new(&raw) : ct_config_load(opt.config.c_str(), &raw);
  if (st != CT_OK) return fail(st);
  std::unique_ptr<ct_config, ConfigDeleter> config(raw);
  if (!opt.seed.empty() && (st = ct_config_set(config.get(), "seed", opt.seed.c_str())) != CT_OK) return fail(st);
  for (const auto &kv : opt.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "condtraj: --set expects key=value, got '%s'\n", kv.c_str());
      return CT_ERR_USAGE;
    }
    st = ct_config_set(config.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != CT_OK) return fail(st);
  }
  char summary[512] = {0};
  st = ct_run(command.c_str(), config.get(), opt.out.c_str(), summary, sizeof summary);
  if (st != CT_OK) return fail(st);
  std::printf("%s\n", summary);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Conditional trajectory prediction: record, augment, train and evaluate"};
  app.set_version_flag("--version", ct_version());
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"record", "Record expert episodes and write train/validation datasets"},
      {"augment", "Apply label augmentation and input randomization to a dataset"},
      {"train", "Train the predictor and write a checkpoint"},
      {"eval-offline", "Compute the offline MAE block of a checkpoint"},
      {"eval-closedloop", "Drive a benchmark suite and write traces and a report"},
      {"report", "Rebuild the benchmark report from a closed-loop run directory"},
  };
  Options opt;
  std::string chosen;
  for (const auto &[name, help] : commands) {
    auto *sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "global seed (overrides the config)");
    sub->add_option("--out", opt.out, "output directory")->required();
    sub->add_option("--set", opt.sets, "extra key=value override (repeatable)");
    sub->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : CT_ERR_USAGE;
  }
  return run(chosen, opt);
}
