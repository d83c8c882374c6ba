/* Copyright 2026 The vrisk Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the vrisk library. Objects are opaque handles released with
 * their *_free function. Every fallible call returns a vrisk_status; on
 * failure vrisk_last_error() describes the problem for the calling thread.
 * Strings returned through char** are heap copies owned by the caller and
 * released with vrisk_string_free.
 */
#ifndef VRISK_VRISK_H_
#define VRISK_VRISK_H_

#include <stddef.h>
#include <stdint.h>

#if defined(VRISK_BUILDING_LIBRARY)
#define VRISK_API __attribute__((visibility("default")))
#else
#define VRISK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vrisk_status {
  VRISK_OK = 0,
  VRISK_ERR_INVALID_ARGUMENT = 1,
  VRISK_ERR_PARSE = 2,
  VRISK_ERR_INVARIANT = 3,
  VRISK_ERR_COVERAGE = 4,
  VRISK_ERR_NOT_FOUND = 5,
  VRISK_ERR_MISSING_ARTIFACT = 6,
  VRISK_ERR_IO = 7,
  VRISK_ERR_INTERNAL = 8
} vrisk_status;

typedef struct vrisk_dataset vrisk_dataset;
typedef struct vrisk_forest vrisk_forest;
typedef struct vrisk_pipeline vrisk_pipeline;

VRISK_API const char* vrisk_version(void);
VRISK_API const char* vrisk_status_name(vrisk_status status);
/* Process exit code: 0 success, 1 usage, 2 data or invariant, 3 internal. */
VRISK_API int vrisk_exit_code(vrisk_status status);
/* Message of the last failed call on this thread; "" if none. */
VRISK_API const char* vrisk_last_error(void);
VRISK_API void vrisk_string_free(char* s);
/* Worker threads for parallel stages; 0 = hardware concurrency. */
VRISK_API vrisk_status vrisk_set_jobs(unsigned jobs);

/* Default run configuration as JSON. */
VRISK_API vrisk_status vrisk_default_config(char** json_out);

/* --- pipeline ------------------------------------------------------------ */

/* config_json may be NULL for defaults. Relative input paths resolve against
 * config_dir (NULL = current directory). */
VRISK_API vrisk_status vrisk_pipeline_open(const char* config_json, const char* config_dir, const char* out_dir,
                                           int force, vrisk_pipeline** out);
/* Overrides; only valid before the first vrisk_pipeline_run. */
VRISK_API vrisk_status vrisk_pipeline_set_seed(vrisk_pipeline* p, uint64_t seed);
VRISK_API vrisk_status vrisk_pipeline_set_mode(vrisk_pipeline* p, const char* mode);
/* Stage names: ingest, build-dataset, resample, train, rank, filter, search,
 * select, baseline, synth, run-all, report. summary_json may be NULL. */
VRISK_API vrisk_status vrisk_pipeline_run(vrisk_pipeline* p, const char* stage, char** summary_json);
VRISK_API vrisk_status vrisk_pipeline_config(const vrisk_pipeline* p, char** json_out);
VRISK_API void vrisk_pipeline_free(vrisk_pipeline* p);

/* --- datasets ------------------------------------------------------------ */

VRISK_API vrisk_status vrisk_dataset_read_csv(const char* path, vrisk_dataset** out);
VRISK_API vrisk_status vrisk_dataset_shape(const vrisk_dataset* d, size_t* n_samples, size_t* n_factors);
VRISK_API vrisk_status vrisk_dataset_factor_id(const vrisk_dataset* d, size_t factor, char** id_out);
/* Copies row i (n_factors values) into out. */
VRISK_API vrisk_status vrisk_dataset_row(const vrisk_dataset* d, size_t i, double* out, size_t out_len);
/* Copies the n_samples labels (0 Low, 1 Medium, 2 High). */
VRISK_API vrisk_status vrisk_dataset_labels(const vrisk_dataset* d, int* out, size_t out_len);
VRISK_API void vrisk_dataset_free(vrisk_dataset* d);

/* --- forests and SHAP ---------------------------------------------------- */

/* config_json: forest options (n_trees, max_depth, min_samples_leaf, mtry,
 * bootstrap, seed); NULL for defaults. */
VRISK_API vrisk_status vrisk_forest_fit(const vrisk_dataset* d, const char* config_json, vrisk_forest** out);
VRISK_API vrisk_status vrisk_forest_load(const char* path, vrisk_forest** out);
VRISK_API vrisk_status vrisk_forest_save(const vrisk_forest* f, const char* path);
VRISK_API vrisk_status vrisk_forest_shape(const vrisk_forest* f, size_t* n_features, size_t* n_classes,
                                          size_t* n_trees);
VRISK_API vrisk_status vrisk_forest_predict_proba(const vrisk_forest* f, const double* x, size_t n_features,
                                                  double* proba, size_t n_classes);
/* Exact path-dependent SHAP values: phi is n_features x n_classes row-major,
 * base_values has n_classes entries. */
VRISK_API vrisk_status vrisk_forest_shap(const vrisk_forest* f, const double* x, size_t n_features, double* phi,
                                         double* base_values, size_t n_classes);
VRISK_API void vrisk_forest_free(vrisk_forest* f);

#ifdef __cplusplus
}
#endif

#endif /* VRISK_VRISK_H_ */
