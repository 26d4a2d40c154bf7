// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/condtraj.h"

#include "condtraj/error.hpp"
#include "condtraj/model.hpp"
#include "condtraj/pipeline.hpp"

#include <cstring>
#include <exception>
#include <new>
#include <string>

struct ct_config {
  condtraj::RunConfig config;
};

struct ct_model {
  condtraj::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

ct_status status_for(condtraj::ErrorKind kind) {
  using condtraj::ErrorKind;
  switch (kind) {
  case ErrorKind::Usage:
  case ErrorKind::InvalidArgument: return CT_ERR_USAGE;
  case ErrorKind::Numerical: return CT_ERR_NUMERICAL;
  case ErrorKind::InsufficientData:
  case ErrorKind::InvalidInput:
  case ErrorKind::Shape:
  case ErrorKind::Spawn:
  case ErrorKind::Io:
  case ErrorKind::Format: return CT_ERR_DATA;
  }
  return CT_ERR_INTERNAL;
}

template <typename F> ct_status guarded(F &&f) {
  try {
    f();
    g_last_error.clear();
    return CT_OK;
  } catch (const condtraj::Error &e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
  } catch (const std::exception &e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return CT_ERR_INTERNAL;
}

void copy_out(const std::string &s, char *buf, size_t len) {
  if (!buf || len == 0) return;
  const size_t n = std::min(s.size(), len - 1);
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
}

ct_status null_argument(const char *what) {
  g_last_error = std::string("null ") + what;
  return CT_ERR_USAGE;
}

} // namespace

extern "C" {

const char *ct_version(void) { return "1.0.0"; }

const char *ct_last_error(void) { return g_last_error.c_str(); }

ct_status ct_config_new(ct_config **out) {
  if (!out) return null_argument("output pointer");
  return guarded([&] { *out = new ct_config{}; });
}

ct_status ct_config_load(const char *path, ct_config **out) {
  if (!path || !out) return null_argument("argument");
  return guarded([&] { *out = new ct_config{condtraj::RunConfig::load(path)}; });
}

ct_status ct_config_set(ct_config *config, const char *key, const char *value) {
  if (!config || !key || !value) return null_argument("argument");
  return guarded([&] {
    if (!*key) throw condtraj::Error(condtraj::ErrorKind::Usage, "empty config key");
    config->config.set(key, value);
  });
}

ct_status ct_config_hash(const ct_config *config, char *buf, size_t len) {
  if (!config || !buf) return null_argument("argument");
  if (len < 17) {
    g_last_error = "hash buffer shorter than 17 bytes";
    return CT_ERR_USAGE;
  }
  return guarded([&] { copy_out(config->config.hash(), buf, len); });
}

void ct_config_free(ct_config *config) { delete config; }

ct_status ct_run(const char *command, const ct_config *config, const char *out_dir, char *summary,
                 size_t summary_len) {
  if (!command || !config || !out_dir) return null_argument("argument");
  return guarded([&] {
    const std::string cmd = command;
    const auto &c = config->config;
    std::string s;
    if (cmd == "record") s = condtraj::cmd_record(c, out_dir);
    else if (cmd == "augment") s = condtraj::cmd_augment(c, out_dir);
    else if (cmd == "train") s = condtraj::cmd_train(c, out_dir);
    else if (cmd == "eval-offline") s = condtraj::cmd_eval_offline(c, out_dir);
    else if (cmd == "eval-closedloop") s = condtraj::cmd_eval_closedloop(c, out_dir);
    else if (cmd == "report") s = condtraj::cmd_report(c, out_dir);
    else throw condtraj::Error(condtraj::ErrorKind::Usage, "unknown command '" + cmd + "'");
    copy_out(s, summary, summary_len);
  });
}

ct_status ct_model_load(const char *path, ct_model **out) {
  if (!path || !out) return null_argument("argument");
  return guarded([&] { *out = new ct_model{condtraj::load_checkpoint(path)}; });
}

size_t ct_model_parameter_count(const ct_model *model) { return model ? model->params.values.size() : 0; }

void ct_model_free(ct_model *model) { delete model; }

ct_status ct_fit_polynomial(const double *t, const double *x, const double *y, size_t n, double *coeff_x,
                            double *coeff_y) {
  if (!t || !x || !y || !coeff_x || !coeff_y) return null_argument("argument");
  return guarded([&] {
    condtraj::PointSeries pts(n);
    for (size_t i = 0; i < n; ++i) pts[i] = {t[i], x[i], y[i]};
    const auto poly = condtraj::fit_polynomial(pts);
    std::memcpy(coeff_x, poly.cx.data(), sizeof(double) * poly.cx.size());
    std::memcpy(coeff_y, poly.cy.data(), sizeof(double) * poly.cy.size());
  });
}

} // extern "C"
