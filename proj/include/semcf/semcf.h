/*
 * Copyright 2026 The semcf Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Stable C interface to the semcf engine.
 *
 * Every call returns a semcf_status. On failure a message is available from
 * semcf_last_error() until the next call on the same thread. Strings handed
 * out through char** parameters are owned by the caller and released with
 * semcf_free_string(). */

#ifndef SEMCF_SEMCF_H_
#define SEMCF_SEMCF_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SEMCF_BUILDING_LIBRARY)
#define SEMCF_API __attribute__((visibility("default")))
#else
#define SEMCF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum semcf_status {
  SEMCF_OK = 0,
  SEMCF_ERR_INTERNAL = 1,
  SEMCF_ERR_USAGE = 2,         /* invalid argument or unknown id */
  SEMCF_ERR_DATA = 3,          /* unreadable or malformed input */
  SEMCF_ERR_SEARCH_FAILED = 4, /* search ended without flipping */
} semcf_status;

typedef struct semcf_bundle semcf_bundle;
typedef struct semcf_trace semcf_trace;

SEMCF_API const char* semcf_last_error(void);
SEMCF_API const char* semcf_version(void);
SEMCF_API void semcf_free_string(char* s);

/* `path` is a bundle directory or its manifest.json. */
SEMCF_API semcf_status semcf_bundle_open(const char* path, semcf_bundle** out);
SEMCF_API void semcf_bundle_close(semcf_bundle* bundle);
SEMCF_API size_t semcf_bundle_num_images(const semcf_bundle* bundle);
SEMCF_API size_t semcf_bundle_num_warnings(const semcf_bundle* bundle);
/* NULL when out of range. Valid while the bundle is open. */
SEMCF_API const char* semcf_bundle_warning(const semcf_bundle* bundle, size_t index);

/* Mode and normalization names as accepted by the CLI. */
typedef struct semcf_search_options {
  double lambda;
  double temperature;
  double k_fraction;
  int max_edits; /* <= 0: one per query cell */
  const char* mode;          /* "soft", "hard" or "none" */
  const char* normalization; /* "pooled" or "per_image" */
  int reuse_cells;
  int hard_clusters;
  uint64_t seed;
  int jobs;
} semcf_search_options;

SEMCF_API void semcf_search_options_default(semcf_search_options* options);

/* Runs one search. Returns SEMCF_ERR_SEARCH_FAILED with a valid *out when
 * the search completed without a flip. */
SEMCF_API semcf_status semcf_explain(const semcf_bundle* bundle, const char* query_id,
                                     const char* const* distractor_ids, size_t num_distractors,
                                     const semcf_search_options* options, semcf_trace** out);

/* Picks `count` distractors of `class_name` by a seeded shuffle. */
SEMCF_API semcf_status semcf_explain_class(const semcf_bundle* bundle, const char* query_id,
                                           const char* class_name, int count,
                                           const semcf_search_options* options,
                                           semcf_trace** out);

SEMCF_API semcf_status semcf_trace_load(const char* path, semcf_trace** out);
SEMCF_API semcf_status semcf_trace_save(const semcf_trace* trace, const char* path);
SEMCF_API semcf_status semcf_trace_to_json(const semcf_trace* trace, char** out);
SEMCF_API void semcf_trace_free(semcf_trace* trace);
SEMCF_API int semcf_trace_success(const semcf_trace* trace);
SEMCF_API size_t semcf_trace_num_edits(const semcf_trace* trace);
/* Candidate of edit `index`; returns SEMCF_ERR_USAGE when out of range. */
SEMCF_API semcf_status semcf_trace_edit(const semcf_trace* trace, size_t index, int* query_cell,
                                        int* distractor_image, int* distractor_cell);

/* Adds the attribute ranking for the trace's first edit. */
SEMCF_API semcf_status semcf_attr_explain(const semcf_bundle* bundle, semcf_trace* trace,
                                          int top_attributes);

/* Aggregate report over every *.json trace in `trace_dir`. `scope` is
 * "single" or "all". */
SEMCF_API semcf_status semcf_evaluate(const semcf_bundle* bundle, const char* trace_dir,
                                      const char* scope, int dilation, char** report_json);

SEMCF_API semcf_status semcf_cluster_eval(const semcf_bundle* bundle, int k, uint64_t seed,
                                          char** result_json);

/* `method` is "confusion" or "attributes". */
SEMCF_API semcf_status semcf_select_pairs(const semcf_bundle* bundle, const char* method,
                                          char** pairs_json);

SEMCF_API semcf_status semcf_benchmark(const semcf_bundle* bundle, int num_distractors,
                                       double k_fraction, int max_edits, int repeats, int jobs,
                                       char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* SEMCF_SEMCF_H_ */
