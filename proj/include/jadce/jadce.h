/* jadce - joint activity detection and channel estimation for grant-free access
 * Copyright (C) 2026 the jadce authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 * ------------------------------------------------------------------------ */

/* Stable C surface of the jadce shared library.  All functions return a
 * status code; on failure jadce_last_error() carries a thread-local message.
 * Objects cross the boundary as opaque handles with explicit _free calls;
 * strings and buffers returned through out-parameters are owned by the
 * caller and released with jadce_string_free / jadce_buffer_free. */

#ifndef JADCE_H
#define JADCE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define JADCE_API __declspec(dllexport)
#else
#define JADCE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum jadce_status {
    JADCE_OK = 0,
    JADCE_ERR_INVALID_ARGUMENT = 1,
    JADCE_ERR_DIMENSION_MISMATCH = 2,
    JADCE_ERR_NUMERICAL = 3,
    JADCE_ERR_IO = 4,
    JADCE_ERR_SCHEMA = 5,
    JADCE_ERR_HASH_MISMATCH = 6,
    JADCE_ERR_INTERNAL = 7
} jadce_status;

JADCE_API const char *jadce_version(void);
JADCE_API const char *jadce_status_name(jadce_status status);

/* Message of the most recent failing call on this thread; never NULL. */
JADCE_API const char *jadce_last_error(void);

JADCE_API void jadce_string_free(char *s);
JADCE_API void jadce_buffer_free(double *buf);

typedef struct jadce_dataset jadce_dataset;
typedef struct jadce_checkpoint jadce_checkpoint;

/* --- configuration ------------------------------------------------------ */

/* Validate config_json and return it with every omitted field filled in with
 * its default, so callers can read the effective experiment settings.  The
 * empty object "{}" yields the default experiment. */
JADCE_API jadce_status jadce_config_normalize(const char *config_json, char **out_json);

/* --- datasets ----------------------------------------------------------- */

/* Generate the train (test_split = 0) or test (test_split != 0) split of the
 * experiment described by config_json.  Splits share the signature matrix but
 * draw from disjoint sample streams. */
JADCE_API jadce_status jadce_dataset_generate(const char *config_json, int test_split,
                                              jadce_dataset **out);
JADCE_API jadce_status jadce_dataset_load(const char *path, jadce_dataset **out);
JADCE_API jadce_status jadce_dataset_save(const jadce_dataset *ds, const char *path);

/* Shape, realized SNR, and support statistics as a JSON document. */
JADCE_API jadce_status jadce_dataset_summary(const jadce_dataset *ds, char **out_json);
JADCE_API void jadce_dataset_free(jadce_dataset *ds);

/* --- training ----------------------------------------------------------- */

/* Layer-wise training of `variant` on the dataset, per the train section of
 * config_json.  Pass a partially trained checkpoint as `resume` to continue
 * an interrupted schedule (NULL starts fresh).  Deterministic: identical
 * inputs produce an identical checkpoint. */
JADCE_API jadce_status jadce_train(const char *config_json, const char *variant,
                                   const jadce_dataset *train_data,
                                   const jadce_checkpoint *resume, jadce_checkpoint **out);

JADCE_API jadce_status jadce_checkpoint_load(const char *path, jadce_checkpoint **out);
JADCE_API jadce_status jadce_checkpoint_save(const jadce_checkpoint *cp, const char *path);

/* Variant, depth, completed stages, and per-stage losses as JSON. */
JADCE_API jadce_status jadce_checkpoint_info(const jadce_checkpoint *cp, char **out_json);

/* Per-epoch training losses: stage,depth,phase,epoch,train_loss. */
JADCE_API jadce_status jadce_checkpoint_loss_csv(const jadce_checkpoint *cp, char **out_csv);
JADCE_API void jadce_checkpoint_free(jadce_checkpoint *cp);

/* --- evaluation --------------------------------------------------------- */

/* Evaluate the checkpoints plus the classical baseline on the test split.
 * The training split calibrates the detection threshold and the baseline's
 * penalty weight.  out_metrics_csv receives one row per (method, layer);
 * out_summary_json the aggregate report.  Either out pointer may be NULL. */
JADCE_API jadce_status jadce_evaluate(const char *config_json, const jadce_dataset *train_data,
                                      const jadce_dataset *test_data,
                                      const jadce_checkpoint *const *checkpoints,
                                      size_t n_checkpoints, char **out_metrics_csv,
                                      char **out_summary_json);

/* Run the checkpoint's network on one sample for `depth` layers (-1 = all).
 * The estimate is returned column-major, rows x cols. */
JADCE_API jadce_status jadce_forward(const jadce_checkpoint *cp, const jadce_dataset *ds,
                                     size_t sample_index, int depth, double **out_estimate,
                                     size_t *out_rows, size_t *out_cols);

/* Device activity flags from a lifted estimate (column-major rows x cols,
 * rows even); out_active must hold rows/2 bytes. */
JADCE_API jadce_status jadce_detect_activity(const double *x_lift, size_t rows, size_t cols,
                                             double tau, uint8_t *out_active);

/* --- self checks -------------------------------------------------------- */

/* Run the release-gate property checks.  Returns JADCE_OK when every check
 * passes, JADCE_ERR_NUMERICAL otherwise; the report (one line per check with
 * timing) is returned either way. */
JADCE_API jadce_status jadce_verify(char **out_report);

#ifdef __cplusplus
}
#endif

#endif /* JADCE_H */
