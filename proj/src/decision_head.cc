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

#include "semcf/decision_head.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "parallel.h"
#include "semcf/error.h"

namespace semcf {

namespace {

// y = W x + b in double.
std::vector<double> Dense(const DenseLayer& layer, std::span<const double> x) {
  std::vector<double> y(layer.outputs);
  for (int o = 0; o < layer.outputs; ++o) {
    const auto w = layer.row(o);
    double acc = layer.bias[o];
    for (int i = 0; i < layer.inputs; ++i) acc += static_cast<double>(w[i]) * x[i];
    y[o] = acc;
  }
  return y;
}

void Relu(std::vector<double>& v) {
  for (double& x : v) x = std::max(x, 0.0);
}

// Softmax probability of one class, with the same max subtraction as
// StableSoftmax.
double TargetProbability(std::span<const double> logits, int target) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - max_logit);
  return std::exp(logits[target] - max_logit) / total;
}

void CheckCandidate(const FeatureGrid& base, std::span<const FeatureGrid> distractors,
                    const Candidate& cand) {
  const int hw = base.cells();
  if (cand.query_cell < 0 || cand.query_cell >= hw) {
    ThrowInvalid("candidate query cell " + std::to_string(cand.query_cell) + " out of range");
  }
  if (cand.distractor_image < 0 ||
      cand.distractor_image >= static_cast<int>(distractors.size())) {
    ThrowInvalid("candidate distractor image " + std::to_string(cand.distractor_image) +
                 " out of range");
  }
  const FeatureGrid& src = distractors[cand.distractor_image];
  if (cand.distractor_cell < 0 || cand.distractor_cell >= src.cells()) {
    ThrowInvalid("candidate distractor cell " + std::to_string(cand.distractor_cell) +
                 " out of range");
  }
  if (src.channels() != base.channels()) {
    ThrowInvalid("distractor channel count differs from the query");
  }
}

}  // namespace

std::string_view HeadKindName(HeadKind kind) {
  switch (kind) {
    case HeadKind::kGapLinear:
      return "gap_linear";
    case HeadKind::kFlattenMlp:
      return "flatten_mlp";
  }
  return "unknown";
}

HeadKind ParseHeadKind(std::string_view name) {
  if (name == "gap_linear") return HeadKind::kGapLinear;
  if (name == "flatten_mlp") return HeadKind::kFlattenMlp;
  ThrowData("unknown head kind '" + std::string(name) + "'");
}

DecisionHead::DecisionHead(HeadKind kind, GridShape input_shape, std::vector<DenseLayer> layers,
                           std::vector<std::string> class_names)
    : kind_(kind),
      input_shape_(input_shape),
      layers_(std::move(layers)),
      class_names_(std::move(class_names)) {
  if (layers_.empty()) ThrowInvalid("head has no layers");
  if (kind_ == HeadKind::kGapLinear && layers_.size() != 1) {
    ThrowInvalid("gap_linear head must have exactly one layer");
  }
  int expected_inputs = kind_ == HeadKind::kGapLinear
                            ? input_shape_.channels
                            : static_cast<int>(input_shape_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    const std::string where = "head layer " + std::to_string(l);
    if (layer.inputs != expected_inputs) {
      ThrowInvalid(where + " expects " + std::to_string(layer.inputs) + " inputs, previous stage gives " +
                   std::to_string(expected_inputs));
    }
    if (layer.weights.size() != static_cast<std::size_t>(layer.outputs) * layer.inputs ||
        layer.bias.size() != static_cast<std::size_t>(layer.outputs)) {
      ThrowInvalid(where + " weight or bias size does not match its shape");
    }
    for (float w : layer.weights) {
      if (!std::isfinite(w)) ThrowInvalid(where + " has a non-finite weight");
    }
    for (float b : layer.bias) {
      if (!std::isfinite(b)) ThrowInvalid(where + " has a non-finite bias");
    }
    expected_inputs = layer.outputs;
  }
  if (expected_inputs != num_classes()) {
    ThrowInvalid("head emits " + std::to_string(expected_inputs) + " logits for " +
                 std::to_string(num_classes()) + " classes");
  }
}

void DecisionHead::CheckInput(const FeatureGrid& grid) const {
  if (grid.shape() != input_shape_) {
    ThrowInvalid("feature grid shape does not match the head input");
  }
}

std::vector<double> DecisionHead::Logits(const FeatureGrid& grid) const {
  CheckInput(grid);
  if (kind_ == HeadKind::kGapLinear) {
    // Pooled in double, matching the incremental path in ScoreCandidates.
    const int d = grid.channels();
    std::vector<double> x(d, 0.0);
    for (int i = 0; i < grid.cells(); ++i) {
      const auto cell = grid.cell(i);
      for (int c = 0; c < d; ++c) x[c] += cell[c];
    }
    for (double& v : x) v /= grid.cells();
    return Dense(layers_.front(), x);
  }
  std::vector<double> x(grid.data().begin(), grid.data().end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    x = Dense(layers_[l], x);
    if (l + 1 < layers_.size()) Relu(x);
  }
  return x;
}

ProbVector DecisionHead::Forward(const FeatureGrid& grid) const {
  return StableSoftmax(Logits(grid), 1.0);
}

FeatureGrid ApplyEdit(const FeatureGrid& base, std::span<const FeatureGrid> distractors,
                      const Candidate& cand) {
  CheckCandidate(base, distractors, cand);
  FeatureGrid out = base;
  out.SetCell(cand.query_cell, distractors[cand.distractor_image].cell(cand.distractor_cell));
  return out;
}

std::vector<double> ScoreCandidates(const DecisionHead& head, const FeatureGrid& base,
                                    std::span<const FeatureGrid> distractors,
                                    std::span<const Candidate> cands, int target_class,
                                    int jobs) {
  if (target_class < 0 || target_class >= head.num_classes()) {
    ThrowInvalid("target class out of range");
  }
  std::vector<double> scores(cands.size());
  if (cands.empty()) return scores;
  head.CheckInput(base);
  for (const auto& g : distractors) head.CheckInput(g);
  for (const auto& c : cands) CheckCandidate(base, distractors, c);

  const int d = base.channels();
  const DenseLayer& first = head.layers().front();

  // Cached activations of the unedited grid at the first layer's output.
  std::vector<double> base_pre;
  double cell_scale = 1.0;
  if (head.kind() == HeadKind::kGapLinear) {
    const int hw = base.cells();
    std::vector<double> pooled(d, 0.0);
    for (int i = 0; i < hw; ++i) {
      const auto cell = base.cell(i);
      for (int c = 0; c < d; ++c) pooled[c] += cell[c];
    }
    for (double& v : pooled) v /= hw;
    base_pre = Dense(first, pooled);
    cell_scale = 1.0 / hw;
  } else {
    std::vector<double> x(base.data().begin(), base.data().end());
    base_pre = Dense(first, x);
  }

  internal::ParallelChunks(cands.size(), jobs, [&](std::size_t begin, std::size_t end) {
    std::vector<double> delta(d);
    std::vector<double> act(base_pre.size());
    for (std::size_t k = begin; k < end; ++k) {
      const Candidate& cand = cands[k];
      const auto old_cell = base.cell(cand.query_cell);
      const auto new_cell = distractors[cand.distractor_image].cell(cand.distractor_cell);
      for (int c = 0; c < d; ++c) {
        delta[c] = (static_cast<double>(new_cell[c]) - old_cell[c]) * cell_scale;
      }
      // Columns of the first layer touched by this cell.
      const int col0 = head.kind() == HeadKind::kGapLinear ? 0 : cand.query_cell * d;
      for (int o = 0; o < first.outputs; ++o) {
        const float* w = first.weights.data() + static_cast<std::size_t>(o) * first.inputs + col0;
        double acc = 0.0;
        for (int c = 0; c < d; ++c) acc += static_cast<double>(w[c]) * delta[c];
        act[o] = base_pre[o] + acc;
      }
      if (head.layers().size() == 1) {
        scores[k] = TargetProbability(act, target_class);
        continue;
      }
      std::vector<double> x = act;
      for (std::size_t l = 1; l < head.layers().size(); ++l) {
        Relu(x);
        x = Dense(head.layers()[l], x);
      }
      scores[k] = TargetProbability(x, target_class);
    }
  });
  return scores;
}

}  // namespace semcf
