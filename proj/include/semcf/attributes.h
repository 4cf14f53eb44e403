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

// Attribute-level explanations for single-edit counterfactuals on
// gap_linear heads.
//
// The target class weight row is decomposed greedily over the attribute
// classifiers of the parts detected at the edited cells (interpretable basis
// decomposition). Each attribute then gets
//
//   s_t  = alpha_t * (q_t . gap(query)  + b_t)
//   s'_t = alpha_t * (q_t . gap(edited) + b_t)
//
// and attributes are ranked by s'_t - s_t.

#ifndef SEMCF_ATTRIBUTES_H_
#define SEMCF_ATTRIBUTES_H_

#include <span>
#include <string>
#include <vector>

#include "semcf/decision_head.h"
#include "semcf/tensor.h"

namespace semcf {

// Linear part-attribute classifiers on pooled features.
struct AttributeBank {
  int dims = 0;
  std::vector<float> weights;  // T x dims
  std::vector<float> biases;   // T
  std::vector<std::string> names;
  std::vector<int> attr_to_part;  // part id of each attribute

  int size() const { return static_cast<int>(names.size()); }
  std::span<const float> row(int t) const {
    return std::span<const float>(weights).subspan(static_cast<std::size_t>(t) * dims, dims);
  }
  // Throws Error(kInvalidArgument) on inconsistent array sizes.
  void Validate() const;
  bool operator==(const AttributeBank&) const = default;
};

// Class x attribute fractions -> 1 where strictly above one half.
Matrix DenoiseAttributes(const Matrix& raw);

// Per-cell part probabilities from a multi-label parts detector.
struct PartProbGrid {
  int height = 0;
  int width = 0;
  int num_parts = 0;
  std::vector<float> probs;  // cell-major, num_parts per cell

  std::span<const float> cell(int i) const {
    return std::span<const float>(probs).subspan(static_cast<std::size_t>(i) * num_parts,
                                                 num_parts);
  }
  bool operator==(const PartProbGrid&) const = default;
};

// The k most probable parts at `cell` (ties to the lower part id), in
// descending probability order.
std::vector<int> DetectPartsTopK(const PartProbGrid& grid, int cell, int k = 3);

struct Decomposition {
  std::vector<double> alpha;  // one coefficient per bank attribute
  double residual_norm = 0.0;
  std::vector<double> residual_history;  // norm after each accepted term
  std::vector<int> picked;               // attribute chosen at each step
};

// Greedy positive-projection decomposition of `class_weight` over the unit-
// normalized rows of the allowed attributes. max_terms <= 0 means
// |allowed|. Throws on an empty allowed set, an out-of-range id or a
// zero-norm attribute row.
Decomposition IbdDecompose(std::span<const float> class_weight, const AttributeBank& bank,
                           std::span<const int> allowed, int max_terms = 0);

struct AttributeImportance {
  int attribute = 0;
  double s = 0.0;
  double s_prime = 0.0;
  double delta = 0.0;

  bool operator==(const AttributeImportance&) const = default;
};

// Ranked importances (delta descending, ties to the lower attribute id) for
// the attributes of the parts detected at the edited query cell and at the
// source distractor cell. `edited` must differ from `query` only at
// best_edit.query_cell.
std::vector<AttributeImportance> RankAttributes(const FeatureGrid& query,
                                                const FeatureGrid& edited,
                                                const DecisionHead& head,
                                                const AttributeBank& bank, int target_class,
                                                const Candidate& best_edit,
                                                const PartProbGrid& query_parts,
                                                const PartProbGrid& distractor_parts,
                                                int parts_per_cell = 3, int max_terms = 0);

// Attributes held by exactly one of the two classes in a denoised matrix.
std::vector<int> DiscriminativeAttributes(const Matrix& denoised, int c, int c_prime);

struct DiscriminativeCase {
  int top1_attribute = 0;
  std::vector<int> ground_truth;
};

struct DiscriminativeScore {
  double accuracy = 0.0;
  int evaluated = 0;
  int skipped = 0;  // cases with an empty ground-truth set
};

// Throws when every case is skipped.
DiscriminativeScore Top1DiscriminativeAccuracy(std::span<const DiscriminativeCase> cases);

}  // namespace semcf

#endif  // SEMCF_ATTRIBUTES_H_
