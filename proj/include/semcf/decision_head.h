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

// The decision network g evaluated on (edited) feature grids.
//
// Two architectures are supported:
//   gap_linear:  logits = W * mean_over_cells(grid) + b
//   flatten_mlp: dense layers over the flattened hw*d grid with ReLU between
//                layers; the last layer emits the class logits.

#ifndef SEMCF_DECISION_HEAD_H_
#define SEMCF_DECISION_HEAD_H_

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcf/tensor.h"

namespace semcf {

enum class HeadKind { kGapLinear, kFlattenMlp };

std::string_view HeadKindName(HeadKind kind);
// Throws Error(kData) on an unknown name.
HeadKind ParseHeadKind(std::string_view name);

// y = W x + b, W is outputs x inputs row-major.
struct DenseLayer {
  int outputs = 0;
  int inputs = 0;
  std::vector<float> weights;
  std::vector<float> bias;

  std::span<const float> row(int o) const {
    return std::span<const float>(weights).subspan(static_cast<std::size_t>(o) * inputs, inputs);
  }
  bool operator==(const DenseLayer&) const = default;
};

// One single-cell replacement: query cell `query_cell` takes the content of
// cell `distractor_cell` of distractor image `distractor_image`. Ordering is
// lexicographic on (query_cell, distractor_image, distractor_cell) and is
// the tie-break order used everywhere.
struct Candidate {
  int query_cell = 0;
  int distractor_image = 0;
  int distractor_cell = 0;

  auto operator<=>(const Candidate&) const = default;
};

class DecisionHead {
 public:
  DecisionHead() = default;
  // Validates layer chaining and finiteness; throws Error(kInvalidArgument).
  DecisionHead(HeadKind kind, GridShape input_shape, std::vector<DenseLayer> layers,
               std::vector<std::string> class_names);

  HeadKind kind() const { return kind_; }
  const GridShape& input_shape() const { return input_shape_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  int num_classes() const { return static_cast<int>(class_names_.size()); }

  std::vector<double> Logits(const FeatureGrid& grid) const;
  ProbVector Forward(const FeatureGrid& grid) const;

  // Throws Error(kInvalidArgument) if `grid` cannot be fed to this head.
  void CheckInput(const FeatureGrid& grid) const;

  bool operator==(const DecisionHead&) const = default;

 private:
  HeadKind kind_ = HeadKind::kGapLinear;
  GridShape input_shape_;
  std::vector<DenseLayer> layers_;
  std::vector<std::string> class_names_;
};

// Single-cell replacement: cell `query_cell` of `base` takes the features of
// `distractor_cell` in `distractors[distractor_image]`. `base` is left untouched.
FeatureGrid ApplyEdit(const FeatureGrid& base, std::span<const FeatureGrid> distractors,
                      const Candidate& cand);

// g_target(ApplyEdit(base, cand)) for every candidate, in input order.
// Uses incremental updates instead of re-running the head per candidate:
// pooled logits for gap_linear, first-layer pre-activations for flatten_mlp.
// `jobs` > 1 splits the candidates across threads; results do not depend on
// it.
std::vector<double> ScoreCandidates(const DecisionHead& head, const FeatureGrid& base,
                                    std::span<const FeatureGrid> distractors,
                                    std::span<const Candidate> cands, int target_class,
                                    int jobs = 1);

}  // namespace semcf

#endif  // SEMCF_DECISION_HEAD_H_
