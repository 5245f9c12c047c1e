/*
 * Copyright 2026 The fedstat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the fedstat library: dataset loading, client statistics,
 * statistics pooling, and the four experiment commands (train, synth,
 * stats, report). All state lives behind opaque handles; every fallible
 * call returns a status code and leaves a human-readable message in
 * fedstat_last_error() on failure.
 *
 * Status values double as process exit codes, which is how the bundled CLI
 * reports failures to shells.
 */

#ifndef FEDSTAT_FEDSTAT_H_
#define FEDSTAT_FEDSTAT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FEDSTAT_API __declspec(dllexport)
#else
#define FEDSTAT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fedstat_status {
  FEDSTAT_OK = 0,
  FEDSTAT_ERROR_INTERNAL = 1, /* bug or unexpected failure */
  FEDSTAT_ERROR_CONFIG = 2,   /* invalid configuration or arguments */
  FEDSTAT_ERROR_DATA = 3,     /* unreadable or inconsistent input data */
  FEDSTAT_ERROR_NUMERIC = 4   /* non-finite values during training */
} fedstat_status;

/* Library version as "major.minor.patch". Static storage, never NULL. */
FEDSTAT_API const char* fedstat_version(void);

/* Message from the last failing call on this thread, empty string if none.
 * The pointer stays valid until the next fedstat call on the same thread. */
FEDSTAT_API const char* fedstat_last_error(void);

typedef struct fedstat_dataset fedstat_dataset;
typedef struct fedstat_local_stats fedstat_local_stats;
typedef struct fedstat_global_stats fedstat_global_stats;

/* ---- datasets ---------------------------------------------------------- */

/* Loads a labeled CSV file. label_column names the class column;
 * feature_columns (may be NULL when count is 0) selects and orders the
 * feature columns, empty meaning every other column. Non-numeric feature
 * cells drop the whole row unless strict is nonzero, in which case they
 * fail the load. The handle must be released with fedstat_dataset_free. */
FEDSTAT_API fedstat_status fedstat_dataset_load_csv(
    const char* path, const char* label_column, const char* const* feature_columns,
    size_t num_feature_columns, int strict, fedstat_dataset** out);

FEDSTAT_API void fedstat_dataset_free(fedstat_dataset* ds);

FEDSTAT_API size_t fedstat_dataset_rows(const fedstat_dataset* ds);
FEDSTAT_API size_t fedstat_dataset_num_features(const fedstat_dataset* ds);
FEDSTAT_API size_t fedstat_dataset_num_classes(const fedstat_dataset* ds);
FEDSTAT_API size_t fedstat_dataset_dropped_rows(const fedstat_dataset* ds);

/* NULL when index is out of range. Pointers stay valid while ds lives. */
FEDSTAT_API const char* fedstat_dataset_feature_name(const fedstat_dataset* ds,
                                                     size_t index);
FEDSTAT_API const char* fedstat_dataset_class_name(const fedstat_dataset* ds,
                                                   size_t index);

/* Copies one row into caller buffers: out_features needs room for
 * fedstat_dataset_num_features(ds) doubles; out_label receives the encoded
 * class index. Either output may be NULL to skip it. */
FEDSTAT_API fedstat_status fedstat_dataset_row(const fedstat_dataset* ds, size_t row,
                                               double* out_features, int* out_label);

/* ---- client statistics -------------------------------------------------- */

/* Per-feature mean and population variance of a dataset, tagged with the
 * client id it describes. */
FEDSTAT_API fedstat_status fedstat_local_stats_compute(const fedstat_dataset* ds,
                                                       int client_id,
                                                       fedstat_local_stats** out);
FEDSTAT_API fedstat_status fedstat_local_stats_read(const char* path,
                                                    fedstat_local_stats** out);
FEDSTAT_API fedstat_status fedstat_local_stats_write(const fedstat_local_stats* s,
                                                     const char* path);
FEDSTAT_API void fedstat_local_stats_free(fedstat_local_stats* s);

FEDSTAT_API int fedstat_local_stats_client_id(const fedstat_local_stats* s);
FEDSTAT_API size_t fedstat_local_stats_count(const fedstat_local_stats* s);
FEDSTAT_API size_t fedstat_local_stats_num_features(const fedstat_local_stats* s);

/* Copies the per-feature moments into caller buffers sized
 * fedstat_local_stats_num_features(s). Either output may be NULL. */
FEDSTAT_API fedstat_status fedstat_local_stats_values(const fedstat_local_stats* s,
                                                      double* out_mean,
                                                      double* out_variance);

/* Pools client statistics into the moments of the concatenated data. */
FEDSTAT_API fedstat_status fedstat_global_stats_aggregate(
    const fedstat_local_stats* const* parts, size_t num_parts,
    fedstat_global_stats** out);
FEDSTAT_API fedstat_status fedstat_global_stats_read(const char* path,
                                                     fedstat_global_stats** out);
FEDSTAT_API fedstat_status fedstat_global_stats_write(const fedstat_global_stats* s,
                                                      const char* path);
FEDSTAT_API void fedstat_global_stats_free(fedstat_global_stats* s);

FEDSTAT_API size_t fedstat_global_stats_count(const fedstat_global_stats* s);
FEDSTAT_API size_t fedstat_global_stats_num_features(const fedstat_global_stats* s);
FEDSTAT_API fedstat_status fedstat_global_stats_values(const fedstat_global_stats* s,
                                                       double* out_mean,
                                                       double* out_variance);

/* ---- experiment commands ------------------------------------------------ */

/* Runs every strategy in the config file (or only strategy_filter when it
 * is non-NULL, a name like "StatAvg" or a comma-separated list of names)
 * and writes run artifacts under out_dir. seed_override, when non-NULL,
 * replaces the seed from the config file. csv_path_override, when non-NULL,
 * switches the run to that CSV file as its data source;
 * label_column_override and feature_columns_override (NULL / 0 = keep the
 * config values) adjust how it is read. */
FEDSTAT_API fedstat_status fedstat_run_train(
    const char* config_path, const char* out_dir, const uint64_t* seed_override,
    const char* strategy_filter, const char* csv_path_override,
    const char* label_column_override, const char* const* feature_columns_override,
    size_t num_feature_columns_override);

/* Generates the config's synthetic federation and writes per-client
 * train/test CSV files plus a metadata sidecar under out_dir. */
FEDSTAT_API fedstat_status fedstat_run_synth(const char* config_path,
                                             const char* out_dir,
                                             const uint64_t* seed_override);

/* Pools client statistics record files into one shared record file.
 * out_count / out_num_features, when non-NULL, receive the pooled row count
 * and the feature dimension. */
FEDSTAT_API fedstat_status fedstat_run_stats_aggregate(
    const char* const* input_paths, size_t num_inputs, const char* out_path,
    size_t* out_count, size_t* out_num_features);

/* Computes one client's statistics record straight from a CSV file. */
FEDSTAT_API fedstat_status fedstat_run_stats_compute(
    const char* csv_path, const char* label_column,
    const char* const* feature_columns, size_t num_feature_columns, int client_id,
    const char* out_path, size_t* out_count, size_t* out_num_features);

/* Turns a finished run directory into plot-ready CSV files. feature and
 * class_label select an optional per-client histogram (both or neither);
 * bins is the histogram resolution; feature_stats nonzero also writes the
 * per-client feature moment table. */
FEDSTAT_API fedstat_status fedstat_run_report(const char* run_dir, const char* out_dir,
                                              const char* feature,
                                              const char* class_label, int bins,
                                              int feature_stats);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FEDSTAT_FEDSTAT_H_ */
