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

#include "semcf/tensor.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "semcf/error.h"

namespace semcf {

namespace {

void CheckShape(const GridShape& shape, std::size_t data_size) {
  if (shape.height <= 0 || shape.width <= 0 || shape.channels <= 0) {
    ThrowInvalid("grid dimensions must be positive, got " +
                 std::to_string(shape.height) + "x" + std::to_string(shape.width) +
                 "x" + std::to_string(shape.channels));
  }
  if (data_size != shape.size()) {
    ThrowInvalid("grid data has " + std::to_string(data_size) +
                 " values, expected " + std::to_string(shape.size()));
  }
}

void CheckFinite(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) ThrowInvalid("grid contains a non-finite value");
  }
}

}  // namespace

CellGridBase::CellGridBase(GridShape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  CheckShape(shape_, data_.size());
  CheckFinite(data_);
}

std::span<const float> CellGridBase::cell(int i) const {
  return std::span<const float>(data_).subspan(
      static_cast<std::size_t>(i) * shape_.channels, shape_.channels);
}

FeatureGrid::FeatureGrid(GridShape shape, std::vector<float> data)
    : CellGridBase(shape, std::move(data)) {}

FeatureGrid FeatureGrid::Zeros(GridShape shape) {
  return FeatureGrid(shape, std::vector<float>(shape.size(), 0.0f));
}

void FeatureGrid::SetCell(int i, std::span<const float> values) {
  if (i < 0 || i >= cells()) ThrowInvalid("cell index out of range");
  if (static_cast<int>(values.size()) != channels()) {
    ThrowInvalid("replacement cell has the wrong channel count");
  }
  CheckFinite(values);
  std::copy(values.begin(), values.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(i) * channels());
}

EmbeddingGrid::EmbeddingGrid(GridShape shape, std::vector<float> data)
    : CellGridBase(shape, std::move(data)) {
  const int d = channels();
  for (int i = 0; i < cells(); ++i) {
    float* row = data_.data() + static_cast<std::size_t>(i) * d;
    double sq = 0.0;
    for (int c = 0; c < d; ++c) sq += static_cast<double>(row[c]) * row[c];
    const double norm = std::sqrt(sq);
    if (norm == 0.0) {
      ThrowInvalid("embedding cell " + std::to_string(i) + " has zero norm");
    }
    if (std::abs(norm - 1.0) > kRenormalizeThreshold) {
      for (int c = 0; c < d; ++c) row[c] = static_cast<float>(row[c] / norm);
    }
  }
}

int ProbVector::ArgMax() const {
  if (values_.empty()) return -1;
  return static_cast<int>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

std::vector<float> GlobalAveragePool(const FeatureGrid& grid) {
  const int d = grid.channels();
  const int hw = grid.cells();
  std::vector<double> acc(d, 0.0);
  for (int i = 0; i < hw; ++i) {
    const auto cell = grid.cell(i);
    for (int c = 0; c < d; ++c) acc[c] += cell[c];
  }
  std::vector<float> pooled(d);
  for (int c = 0; c < d; ++c) pooled[c] = static_cast<float>(acc[c] / hw);
  return pooled;
}

ProbVector StableSoftmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) ThrowInvalid("softmax temperature must be positive");
  if (logits.empty()) ThrowInvalid("softmax over an empty vector");
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - max_logit) / temperature);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return ProbVector(std::move(out));
}

Matrix PairwiseDot(const EmbeddingGrid& query, std::span<const EmbeddingGrid> distractors) {
  const int hw = query.cells();
  const int d = query.channels();
  const int n = static_cast<int>(distractors.size());
  for (const auto& g : distractors) {
    if (g.channels() != d) ThrowInvalid("embedding channel counts differ");
    if (!g.shape().SameCells(query.shape())) ThrowInvalid("embedding grid dims differ");
  }
  Matrix out(hw, n * hw);
  for (int i = 0; i < hw; ++i) {
    const auto q = query.cell(i);
    for (int m = 0; m < n; ++m) {
      for (int j = 0; j < hw; ++j) {
        const auto r = distractors[m].cell(j);
        double dot = 0.0;
        for (int c = 0; c < d; ++c) dot += static_cast<double>(q[c]) * r[c];
        out.at(i, m * hw + j) = dot;
      }
    }
  }
  return out;
}

}  // namespace semcf
