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

#include "semcf/semantic.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "semcf/error.h"

namespace semcf {

namespace {

// Uniform double in [0, 1) from the raw generator output, so that results do
// not depend on the standard library's distribution implementation.
double NextUniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = a[c] - b[c];
    acc += diff * diff;
  }
  return acc;
}

Matrix KMeansPlusPlus(const Matrix& points, int k, std::mt19937_64& gen) {
  const int n = points.rows;
  Matrix centers(k, points.cols);
  std::vector<char> chosen(n, 0);
  auto take = [&](int center, int point) {
    chosen[point] = 1;
    const auto row = points.row(point);
    std::copy(row.begin(), row.end(), centers.values.begin() +
                                          static_cast<std::ptrdiff_t>(center) * points.cols);
  };

  take(0, std::min(n - 1, static_cast<int>(NextUniform(gen) * n)));
  std::vector<double> nearest(n);
  for (int p = 0; p < n; ++p) nearest[p] = SquaredDistance(points.row(p), centers.row(0));

  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    int pick = -1;
    if (total > 0.0) {
      const double target = NextUniform(gen) * total;
      double running = 0.0;
      for (int p = 0; p < n; ++p) {
        running += nearest[p];
        if (running > target && nearest[p] > 0.0) {
          pick = p;
          break;
        }
      }
      if (pick < 0) {
        // Rounding at the tail: take the last point with positive weight.
        for (int p = n - 1; p >= 0; --p) {
          if (nearest[p] > 0.0) {
            pick = p;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a center already.
      for (int p = 0; p < n; ++p) {
        if (!chosen[p]) {
          pick = p;
          break;
        }
      }
    }
    take(c, pick);
    for (int p = 0; p < n; ++p) {
      nearest[p] = std::min(nearest[p], SquaredDistance(points.row(p), centers.row(c)));
    }
  }
  return centers;
}

// Nearest center per point (ties to the lower center id); returns inertia.
double AssignLabels(const Matrix& points, const Matrix& centers, std::vector<int>& labels,
                    std::vector<double>& distances) {
  double inertia = 0.0;
  for (int p = 0; p < points.rows; ++p) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c = 0; c < centers.rows; ++c) {
      const double dist = SquaredDistance(points.row(p), centers.row(c));
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    labels[p] = best;
    distances[p] = best_dist;
    inertia += best_dist;
  }
  return inertia;
}

void UpdateCenters(const Matrix& points, const std::vector<int>& labels,
                   const std::vector<double>& distances, Matrix& centers) {
  const int k = centers.rows;
  const int dims = points.cols;
  Matrix sums(k, dims);
  std::vector<int> counts(k, 0);
  for (int p = 0; p < points.rows; ++p) {
    const auto row = points.row(p);
    for (int c = 0; c < dims; ++c) sums.at(labels[p], c) += row[c];
    ++counts[labels[p]];
  }
  std::vector<char> donated(points.rows, 0);
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) {
      for (int j = 0; j < dims; ++j) centers.at(c, j) = sums.at(c, j) / counts[c];
      continue;
    }
    int far = -1;
    for (int p = 0; p < points.rows; ++p) {
      if (donated[p]) continue;
      if (far < 0 || distances[p] > distances[far]) far = p;
    }
    if (far < 0) continue;
    donated[far] = 1;
    const auto row = points.row(far);
    for (int j = 0; j < dims; ++j) centers.at(c, j) = row[j];
  }
}

}  // namespace

std::string_view NormalizationName(Normalization n) {
  return n == Normalization::kPooled ? "pooled" : "per_image";
}

Normalization ParseNormalization(std::string_view name) {
  if (name == "pooled") return Normalization::kPooled;
  if (name == "per_image") return Normalization::kPerImage;
  ThrowInvalid("unknown normalization '" + std::string(name) + "'");
}

SimilarityTable BuildSimilarityTable(const EmbeddingGrid& query,
                                     std::span<const EmbeddingGrid> distractors,
                                     double temperature, Normalization normalization) {
  if (!(temperature > 0.0)) ThrowInvalid("temperature must be positive");
  if (distractors.empty()) ThrowInvalid("similarity table needs at least one distractor");

  SimilarityTable table;
  table.query_cells = query.cells();
  table.num_images = static_cast<int>(distractors.size());
  table.cells_per_image = query.cells();
  table.temperature = temperature;
  table.normalization = normalization;
  table.likelihood = PairwiseDot(query, distractors);

  const int block = normalization == Normalization::kPooled ? table.likelihood.cols
                                                            : table.cells_per_image;
  for (int i = 0; i < table.query_cells; ++i) {
    for (int start = 0; start < table.likelihood.cols; start += block) {
      const auto dots = table.likelihood.row(i).subspan(start, block);
      const ProbVector probs = StableSoftmax(dots, temperature);
      std::copy(probs.values().begin(), probs.values().end(),
                table.likelihood.values.begin() +
                    static_cast<std::ptrdiff_t>(i) * table.likelihood.cols + start);
    }
  }
  return table;
}

std::int64_t PrefilterCount(double k_fraction, std::int64_t total) {
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) {
    ThrowInvalid("prefilter fraction must be in (0, 1]");
  }
  const double exact = k_fraction * static_cast<double>(total);
  const double nearest = std::round(exact);
  std::int64_t count = std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact)
                           ? static_cast<std::int64_t>(nearest)
                           : static_cast<std::int64_t>(std::ceil(exact));
  return std::clamp<std::int64_t>(count, total > 0 ? 1 : 0, total);
}

std::vector<Candidate> PrefilterTopK(const SimilarityTable& table, double k_fraction) {
  const std::int64_t total = table.num_pairs();
  const std::int64_t count = PrefilterCount(k_fraction, total);
  // Flat table index == lexicographic candidate rank.
  std::vector<std::int64_t> order(total);
  std::iota(order.begin(), order.end(), std::int64_t{0});
  const auto& values = table.likelihood.values;
  auto better = [&](std::int64_t a, std::int64_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  };
  if (count < total) {
    std::nth_element(order.begin(), order.begin() + count, order.end(), better);
    order.resize(count);
  }
  std::sort(order.begin(), order.end());

  std::vector<Candidate> out;
  out.reserve(order.size());
  const std::int64_t cols = table.likelihood.cols;
  for (std::int64_t flat : order) {
    const int col = static_cast<int>(flat % cols);
    out.push_back({static_cast<int>(flat / cols), col / table.cells_per_image,
                   col % table.cells_per_image});
  }
  return out;
}

std::vector<Candidate> AllCandidates(int query_cells, int num_images, int cells_per_image) {
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(query_cells) * num_images * cells_per_image);
  for (int i = 0; i < query_cells; ++i) {
    for (int m = 0; m < num_images; ++m) {
      for (int j = 0; j < cells_per_image; ++j) out.push_back({i, m, j});
    }
  }
  return out;
}

std::span<const int> ClusterAssignment::ImageLabels(std::string_view image_id) const {
  for (std::size_t m = 0; m < image_ids.size(); ++m) {
    if (image_ids[m] == image_id) {
      return std::span<const int>(labels).subspan(m * cells_per_image, cells_per_image);
    }
  }
  ThrowInvalid("image '" + std::string(image_id) + "' is not covered by the clustering");
}

ClusterAssignment KMeansCells(const Matrix& points, int k, std::uint64_t seed,
                              const KMeansOptions& options) {
  if (k < 1) ThrowInvalid("k must be at least 1");
  if (k > points.rows) {
    ThrowInvalid("k = " + std::to_string(k) + " exceeds the number of cells (" +
                 std::to_string(points.rows) + ")");
  }
  std::mt19937_64 gen(seed);
  ClusterAssignment out;
  out.k = k;
  out.seed = seed;
  out.centers = KMeansPlusPlus(points, k, gen);
  out.labels.assign(points.rows, 0);
  std::vector<double> distances(points.rows);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double inertia = AssignLabels(points, out.centers, out.labels, distances);
    out.inertia_history.push_back(inertia);
    out.inertia = inertia;
    out.iterations = iter + 1;
    if (iter > 0) {
      const double previous = out.inertia_history[iter - 1];
      if (previous <= 0.0 || (previous - inertia) / previous < options.relative_tolerance) break;
    }
    if (iter + 1 == options.max_iterations) break;
    UpdateCenters(points, out.labels, distances, out.centers);
  }
  return out;
}

ClusterAssignment ClusterImageCells(std::span<const EmbeddingGrid> grids,
                                    std::span<const std::string> image_ids, int k,
                                    std::uint64_t seed, const KMeansOptions& options) {
  if (grids.empty() || grids.size() != image_ids.size()) {
    ThrowInvalid("need one image id per embedding grid");
  }
  const int hw = grids.front().cells();
  const int dims = grids.front().channels();
  Matrix points(static_cast<int>(grids.size()) * hw, dims);
  for (std::size_t m = 0; m < grids.size(); ++m) {
    if (grids[m].shape() != grids.front().shape()) ThrowInvalid("embedding grid shapes differ");
    const auto data = grids[m].data();
    std::copy(data.begin(), data.end(),
              points.values.begin() + static_cast<std::ptrdiff_t>(m) * hw * dims);
  }
  ClusterAssignment out = KMeansCells(points, k, seed, options);
  out.image_ids.assign(image_ids.begin(), image_ids.end());
  out.cells_per_image = hw;
  return out;
}

std::vector<Candidate> HardConstraintCandidates(const ClusterAssignment& assignment,
                                                std::string_view query_id,
                                                std::span<const std::string> distractor_ids) {
  const auto query_labels = assignment.ImageLabels(query_id);
  std::vector<std::span<const int>> distractor_labels;
  for (const auto& id : distractor_ids) distractor_labels.push_back(assignment.ImageLabels(id));

  std::vector<Candidate> out;
  for (int i = 0; i < static_cast<int>(query_labels.size()); ++i) {
    for (int m = 0; m < static_cast<int>(distractor_labels.size()); ++m) {
      for (int j = 0; j < static_cast<int>(distractor_labels[m].size()); ++j) {
        if (query_labels[i] == distractor_labels[m][j]) out.push_back({i, m, j});
      }
    }
  }
  return out;
}

}  // namespace semcf
