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

// Greedy counterfactual search.
//
// Each iteration picks the single cell replacement maximizing
//
//   log g_target(edited grid) + lambda * log L_s(query cell, distractor cell)
//
// over the surviving candidates, commits it, and stops as soon as the head's
// argmax becomes the target class. The semantic table is built once per case.

#ifndef SEMCF_SEARCH_H_
#define SEMCF_SEARCH_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcf/decision_head.h"
#include "semcf/semantic.h"
#include "semcf/tensor.h"

namespace semcf {

inline constexpr double kDefaultLambda = 0.4;
// Probabilities are clamped to this before taking logs.
inline constexpr double kProbabilityFloor = 1e-30;

enum class ConstraintMode {
  kSoft,  // lambda-weighted likelihood term plus top-k% prefilter
  kHard,  // same-cluster candidates only, classification term only
  kNone,  // classification term only over every candidate
};

std::string_view ConstraintModeName(ConstraintMode mode);
ConstraintMode ParseConstraintMode(std::string_view name);

struct SearchConfig {
  double lambda = kDefaultLambda;
  double temperature = kDefaultTemperature;
  double k_fraction = kDefaultTopKFraction;
  // <= 0 means one edit per query cell.
  int max_edits = 0;
  ConstraintMode mode = ConstraintMode::kSoft;
  Normalization normalization = Normalization::kPooled;
  bool reuse_cells = false;
  // Cluster count and seed for hard mode when the caller supplies no
  // clustering.
  int hard_clusters = 50;
  std::uint64_t seed = 0;
  // Worker threads for candidate scoring. Never changes results.
  int jobs = 1;

  // Throws Error(kInvalidArgument).
  void Validate() const;
  bool operator==(const SearchConfig&) const = default;
};

struct Edit {
  Candidate candidate;
  double class_prob_after = 0.0;
  // Absent when the semantic term is not part of the objective.
  std::optional<double> semantic_likelihood;
  double combined_score = 0.0;

  bool operator==(const Edit&) const = default;
};

struct SearchStats {
  // Every evaluation of g, including the checks on committed grids.
  std::int64_t head_evaluations = 0;
  // Cell dot products spent building the semantic table.
  std::int64_t dot_products = 0;
  // Candidates scored by g in each iteration.
  std::vector<std::int64_t> candidates_per_edit;

  bool operator==(const SearchStats&) const = default;
};

struct EditTrace {
  std::string query_id;
  int query_class = -1;  // head prediction on the unedited grid
  int target_class = -1;
  std::vector<std::string> distractor_ids;
  std::vector<Edit> edits;
  bool success = false;
  ProbVector final_probs;
  SearchStats stats;

  bool operator==(const EditTrace&) const = default;
};

// Everything one search needs. Distractor vectors are parallel.
struct SearchCase {
  std::string query_id;
  FeatureGrid query_features;
  EmbeddingGrid query_embedding;
  std::vector<std::string> distractor_ids;
  std::vector<FeatureGrid> distractor_features;
  std::vector<EmbeddingGrid> distractor_embeddings;
  int target_class = 0;
  // Optional clustering covering the query and distractors (hard mode).
  const ClusterAssignment* clusters = nullptr;
};

double CombinedScore(double class_prob, std::optional<double> likelihood, double lambda);

// Candidate pool before blocked-cell filtering: the top-k% of `table` in
// soft mode, every pair in none mode. Hard mode needs a clustering; use
// HardConstraintCandidates.
std::vector<Candidate> CandidatePool(const SimilarityTable* table, int query_cells,
                                     int num_images, const SearchConfig& config);

// Best edit among the `pool` entries whose query cell is not blocked.
// `table` is required in soft mode and ignored otherwise. `blocked` is
// indexed by query cell; an empty vector blocks nothing. Throws
// Error(kSearchFailed) when no candidate survives.
Edit SingleBestEdit(const DecisionHead& head, const FeatureGrid& query_grid,
                    std::span<const FeatureGrid> distractor_grids, const SimilarityTable* table,
                    std::span<const Candidate> pool, const SearchConfig& config,
                    int target_class, const std::vector<bool>& blocked,
                    SearchStats* stats = nullptr);

// Convenience overload building the pool from `table` and `config`.
Edit SingleBestEdit(const DecisionHead& head, const FeatureGrid& query_grid,
                    std::span<const FeatureGrid> distractor_grids, const SimilarityTable& table,
                    const SearchConfig& config, int target_class,
                    const std::vector<bool>& blocked);

// Brute-force reference: naive ApplyEdit + Forward on every candidate, with
// the likelihoods evaluated straight from the embeddings. No prefilter.
// Supports soft and none modes; meant for small instances.
Edit OracleBestEdit(const DecisionHead& head, const FeatureGrid& query_grid,
                    std::span<const FeatureGrid> distractor_grids,
                    const EmbeddingGrid& query_embedding,
                    std::span<const EmbeddingGrid> distractor_embeddings,
                    const SearchConfig& config, int target_class,
                    const std::vector<bool>& blocked);

// Runs the full greedy loop. A search that exhausts max_edits (or the
// candidate pool) without flipping the decision returns success = false.
EditTrace FindCounterfactual(const DecisionHead& head, const SearchCase& search_case,
                             const SearchConfig& config);

}  // namespace semcf

#endif  // SEMCF_SEARCH_H_
