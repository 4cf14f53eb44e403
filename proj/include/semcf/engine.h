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

// Bundle-level workflows behind the C API and the command-line tool.

#ifndef SEMCF_ENGINE_H_
#define SEMCF_ENGINE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semcf/bundle.h"
#include "semcf/metrics.h"
#include "semcf/search.h"
#include "semcf/trace_io.h"

namespace semcf {

// Target class is the (shared) class of the distractors.
SearchCase MakeSearchCase(const Bundle& bundle, const std::string& query_id,
                          std::span<const std::string> distractor_ids);

// `count` images of `class_name` other than `exclude_id`, picked by a seeded
// shuffle of bundle order.
std::vector<std::string> PickDistractors(const Bundle& bundle, const std::string& class_name,
                                         int count, std::uint64_t seed,
                                         const std::string& exclude_id);

TraceDocument Explain(const Bundle& bundle, const std::string& query_id,
                      std::span<const std::string> distractor_ids, const SearchConfig& config);

// Annotations for a trace, from the keypoints and masks in the bundle.
CaseAnnotations AnnotationsFor(const Bundle& bundle, const EditTrace& trace);

// Aggregate metrics over traces (already ordered by the caller). Adds the
// top-1 attribute score when traces carry rankings and the bundle has
// class attributes.
MetricsReport Evaluate(const Bundle& bundle, std::span<const TraceDocument> traces,
                       MetricScope scope, int dilation = 0);

// Loads every *.json trace under `dir`, sorted by file name.
std::vector<TraceDocument> LoadTraceDirectory(const std::filesystem::path& dir);

struct ClusterEvalResult {
  int k = 0;
  std::uint64_t seed = 0;
  int cells = 0;
  int iterations = 0;
  double inertia = 0.0;
  double accuracy = 0.0;
};

// Clusters the embedding cells of every image and scores part purity
// against the projected keypoints.
ClusterEvalResult ClusterEval(const Bundle& bundle, int k, std::uint64_t seed);
std::string ClusterEvalToJson(const ClusterEvalResult& result);

// Ranks attributes for the first edit of `doc` and stores the top
// `top_attributes` entries (all when <= 0) in it.
void AttrExplain(const Bundle& bundle, TraceDocument& doc, int top_attributes);

enum class PairMethod { kConfusion, kAttributes };
PairMethod ParsePairMethod(std::string_view name);

// (c, c') for every class that has a distractor class under `method`.
std::vector<std::pair<int, int>> SelectPairs(const Bundle& bundle, PairMethod method);
std::string PairsToJson(const Bundle& bundle, PairMethod method,
                        std::span<const std::pair<int, int>> pairs);

struct BenchmarkResult {
  std::string query_id;
  int target_class = 0;
  int num_distractors = 0;
  double k_fraction = 0.0;
  std::vector<std::int64_t> candidates_per_edit;
  std::int64_t head_evaluations = 0;
  std::int64_t dot_products = 0;
  int edits = 0;
  int repeats = 0;
  double best_seconds = 0.0;  // fastest repeat, whole search
  double seconds_per_edit = 0.0;
};

// Times `max_edits` greedy edits (soft mode) on the first image as query
// against the first `num_distractors` images of another class.
BenchmarkResult Benchmark(const Bundle& bundle, int num_distractors, double k_fraction,
                          int max_edits = 1, int repeats = 3, int jobs = 1);
std::string BenchmarkToJson(const BenchmarkResult& result);

}  // namespace semcf

#endif  // SEMCF_ENGINE_H_
