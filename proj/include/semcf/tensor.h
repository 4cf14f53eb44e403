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

// Dense primitives shared by the whole engine: spatial cell grids, pooling,
// softmax and cell-to-cell dot products.
//
// Grids are stored cell-major: cell i = row * width + col occupies
// data[i * channels, (i + 1) * channels). Storage is float32, every reduction
// accumulates in double.

#ifndef SEMCF_TENSOR_H_
#define SEMCF_TENSOR_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace semcf {

struct GridShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  int cells() const { return height * width; }
  std::size_t size() const {
    return static_cast<std::size_t>(cells()) * static_cast<std::size_t>(channels);
  }
  bool SameCells(const GridShape& other) const {
    return height == other.height && width == other.width;
  }
  bool operator==(const GridShape&) const = default;
};

// Common storage for the two grid kinds. Not used directly.
class CellGridBase {
 public:
  const GridShape& shape() const { return shape_; }
  int cells() const { return shape_.cells(); }
  int channels() const { return shape_.channels; }

  std::span<const float> cell(int i) const;
  std::span<const float> data() const { return data_; }

  bool operator==(const CellGridBase& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 protected:
  CellGridBase() = default;
  CellGridBase(GridShape shape, std::vector<float> data);

  GridShape shape_;
  std::vector<float> data_;
};

// Backbone features f(I): an h x w x d grid of finite values.
class FeatureGrid : public CellGridBase {
 public:
  FeatureGrid() = default;
  // Throws Error(kInvalidArgument) on a size mismatch or non-finite value.
  FeatureGrid(GridShape shape, std::vector<float> data);

  static FeatureGrid Zeros(GridShape shape);

  // Overwrites one cell with `values` (channels() entries, all finite).
  void SetCell(int i, std::span<const float> values);
};

// Auxiliary-model embeddings u(I). Every cell row has unit L2 norm.
class EmbeddingGrid : public CellGridBase {
 public:
  // Rows whose norm is off by more than this are rescaled at construction.
  static constexpr double kRenormalizeThreshold = 1e-6;

  EmbeddingGrid() = default;
  // Renormalizes rows; throws on zero rows, non-finite values or a size
  // mismatch. Rows already within kRenormalizeThreshold of unit norm are
  // kept bit-for-bit.
  EmbeddingGrid(GridShape shape, std::vector<float> data);
};

// Class probabilities. Entries in [0, 1] summing to one.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> values) : values_(std::move(values)) {}

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  // Lowest index among the maxima.
  int ArgMax() const;

  bool operator==(const ProbVector&) const = default;

 private:
  std::vector<double> values_;
};

// Row-major dense matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  std::span<const double> row(int r) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(r) * cols, cols);
  }
};

// Per-channel mean over all cells.
std::vector<float> GlobalAveragePool(const FeatureGrid& grid);

// softmax(logits / temperature) with max subtraction. Throws on a
// non-positive temperature or an empty input.
ProbVector StableSoftmax(std::span<const double> logits, double temperature = 1.0);

// Dot products between every query cell and every distractor cell.
// Columns are indexed image-major then cell-major: col = m * hw + j.
Matrix PairwiseDot(const EmbeddingGrid& query, std::span<const EmbeddingGrid> distractors);

}  // namespace semcf

#endif  // SEMCF_TENSOR_H_
