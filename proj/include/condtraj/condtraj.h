/* SPDX-FileCopyrightText: (c) 2026 condtraj contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CONDTRAJ_H
#define CONDTRAJ_H

#include <stddef.h>

#if defined(CONDTRAJ_BUILDING_LIBRARY)
#define CONDTRAJ_API __attribute__((visibility("default")))
#else
#define CONDTRAJ_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum ct_status {
  CT_OK = 0,
  CT_ERR_USAGE = 1,
  CT_ERR_DATA = 2,
  CT_ERR_NUMERICAL = 3,
  CT_ERR_INTERNAL = 4
} ct_status;

typedef struct ct_config ct_config;
typedef struct ct_model ct_model;

CONDTRAJ_API const char *ct_version(void);

/* Message of the last failed call on this thread ("" if none). */
CONDTRAJ_API const char *ct_last_error(void);

CONDTRAJ_API ct_status ct_config_new(ct_config **out);
/* key = value file */
CONDTRAJ_API ct_status ct_config_load(const char *path, ct_config **out);
CONDTRAJ_API ct_status ct_config_set(ct_config *config, const char *key, const char *value);
/* Writes the 16 hex digit config hash plus NUL; needs len >= 17. */
CONDTRAJ_API ct_status ct_config_hash(const ct_config *config, char *buf, size_t len);
CONDTRAJ_API void ct_config_free(ct_config *config);

/* command: record, augment, train, eval-offline, eval-closedloop, report.
 * A one-line summary is copied into `summary` (truncated) when non-NULL. */
CONDTRAJ_API ct_status ct_run(const char *command, const ct_config *config, const char *out_dir, char *summary,
                              size_t summary_len);

CONDTRAJ_API ct_status ct_model_load(const char *path, ct_model **out);
CONDTRAJ_API size_t ct_model_parameter_count(const ct_model *model);
CONDTRAJ_API void ct_model_free(ct_model *model);

/* Least-squares degree-4 fit of n (t, x, y) samples. Coefficients are
 * written highest degree first, 5 per axis. */
CONDTRAJ_API ct_status ct_fit_polynomial(const double *t, const double *x, const double *y, size_t n, double *coeff_x,
                                         double *coeff_y);

#ifdef __cplusplus
}
#endif

#endif /* CONDTRAJ_H */
