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

// Semantic consistency between query and distractor cells, measured in the
// auxiliary embedding space: the temperature-softmax likelihood table, the
// top-k% candidate prefilter, K-Means over embedding cells and the
// same-cluster (hard) candidate set.

#ifndef SEMCF_SEMANTIC_H_
#define SEMCF_SEMANTIC_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcf/decision_head.h"
#include "semcf/tensor.h"

namespace semcf {

inline constexpr double kDefaultTemperature = 0.1;
inline constexpr double kDefaultTopKFraction = 0.10;

// Softmax scope over distractor cells when several distractors are used.
enum class Normalization {
  kPooled,    // one softmax over all n*hw distractor cells
  kPerImage,  // one softmax per distractor image
};

std::string_view NormalizationName(Normalization n);
Normalization ParseNormalization(std::string_view name);

struct SimilarityTable {
  int query_cells = 0;
  int num_images = 0;
  int cells_per_image = 0;
  double temperature = kDefaultTemperature;
  Normalization normalization = Normalization::kPooled;
  // query_cells x (num_images * cells_per_image); same column order as
  // PairwiseDot.
  Matrix likelihood;

  double at(const Candidate& c) const {
    return likelihood.at(c.query_cell, c.distractor_image * cells_per_image + c.distractor_cell);
  }
  std::int64_t num_pairs() const {
    return static_cast<std::int64_t>(query_cells) * num_images * cells_per_image;
  }
};

// Throws Error(kInvalidArgument) on a non-positive temperature, no
// distractors or mismatched embeddings.
SimilarityTable BuildSimilarityTable(const EmbeddingGrid& query,
                                     std::span<const EmbeddingGrid> distractors,
                                     double temperature = kDefaultTemperature,
                                     Normalization normalization = Normalization::kPooled);

// ceil(k_fraction * total), computed so that exact products such as
// 0.1 * 10 do not round up. Throws if k_fraction is outside (0, 1].
std::int64_t PrefilterCount(double k_fraction, std::int64_t total);

// The PrefilterCount(k) most likely pairs over the whole table (not per
// row). Ties go to the lexicographically smaller candidate. The result is
// returned in lexicographic order.
std::vector<Candidate> PrefilterTopK(const SimilarityTable& table, double k_fraction);

// Every (query_cell, image, cell) triple in lexicographic order.
std::vector<Candidate> AllCandidates(int query_cells, int num_images, int cells_per_image);

struct KMeansOptions {
  int max_iterations = 300;
  // Stop once (previous - current) / previous inertia drops below this.
  double relative_tolerance = 1e-4;
};

struct ClusterAssignment {
  int k = 0;
  Matrix centers;           // k x dims
  std::vector<int> labels;  // one per input row
  std::uint64_t seed = 0;
  double inertia = 0.0;
  int iterations = 0;
  std::vector<double> inertia_history;  // after every assignment step

  // Set when the rows are the stacked cells of several images.
  std::vector<std::string> image_ids;
  int cells_per_image = 0;

  // Throws Error(kInvalidArgument) for an id not covered by the assignment.
  std::span<const int> ImageLabels(std::string_view image_id) const;
};

// Lloyd's algorithm with k-means++ seeding. Points are the rows of `points`.
// Empty clusters are re-seeded with the point farthest from its center.
// Bitwise deterministic for a fixed seed.
ClusterAssignment KMeansCells(const Matrix& points, int k, std::uint64_t seed,
                              const KMeansOptions& options = {});

// Stacks the cells of every grid (in order) and clusters them.
ClusterAssignment ClusterImageCells(std::span<const EmbeddingGrid> grids,
                                    std::span<const std::string> image_ids, int k,
                                    std::uint64_t seed, const KMeansOptions& options = {});

// All (i, m, j) where query cell i and cell j of distractor m share a
// cluster, in lexicographic order.
std::vector<Candidate> HardConstraintCandidates(const ClusterAssignment& assignment,
                                                std::string_view query_id,
                                                std::span<const std::string> distractor_ids);

}  // namespace semcf

#endif  // SEMCF_SEMANTIC_H_
