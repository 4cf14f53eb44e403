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

#include "semcf/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "semcf/error.h"

namespace semcf {

namespace {

std::span<const Edit> ScopedEdits(const EditTrace& trace, MetricScope scope) {
  std::span<const Edit> edits(trace.edits);
  if (scope == MetricScope::kSingleEdit && !edits.empty()) return edits.first(1);
  return edits;
}

const PartGrid& DistractorGrid(std::span<const PartGrid> grids, int image) {
  if (image < 0 || image >= static_cast<int>(grids.size())) {
    ThrowInvalid("missing part grid for distractor " + std::to_string(image));
  }
  return grids[image];
}

void CheckCell(const PartGrid& grid, int cell) {
  if (cell < 0 || cell >= grid.num_cells() ||
      grid.cells.size() != static_cast<std::size_t>(grid.num_cells())) {
    ThrowInvalid("part grid does not match the trace dims");
  }
}

bool HasKeypoint(const PartGrid& grid, int cell, int dilation) {
  CheckCell(grid, cell);
  const int row = cell / grid.width;
  const int col = cell % grid.width;
  for (int r = std::max(0, row - dilation); r <= std::min(grid.height - 1, row + dilation); ++r) {
    for (int c = std::max(0, col - dilation); c <= std::min(grid.width - 1, col + dilation);
         ++c) {
      if (!grid.cells[r * grid.width + c].empty()) return true;
    }
  }
  return false;
}

bool SharesPart(const std::vector<int>& a, const std::vector<int>& b) {
  for (int p : a) {
    if (std::binary_search(b.begin(), b.end(), p)) return true;
  }
  return false;
}

bool MaskAt(const std::vector<bool>& mask, int cell) {
  if (cell < 0 || cell >= static_cast<int>(mask.size())) {
    ThrowInvalid("mask does not match the trace dims");
  }
  return mask[cell];
}

std::optional<double> Mean(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

}  // namespace

PartGrid ProjectKeypoints(const KeypointSet& keypoints, int height, int width) {
  if (height < 1 || width < 1) ThrowInvalid("grid dims must be positive");
  if (keypoints.image_width <= 0 || keypoints.image_height <= 0) {
    ThrowInvalid("image '" + keypoints.image_id + "' has zero dimensions");
  }
  PartGrid grid;
  grid.height = height;
  grid.width = width;
  grid.cells.resize(static_cast<std::size_t>(height) * width);
  for (const Keypoint& kp : keypoints.points) {
    if (!kp.visible) continue;
    const int row = std::clamp(
        static_cast<int>(std::floor(kp.y * height / keypoints.image_height)), 0, height - 1);
    const int col = std::clamp(
        static_cast<int>(std::floor(kp.x * width / keypoints.image_width)), 0, width - 1);
    grid.cells[row * width + col].push_back(kp.part_id);
  }
  for (auto& parts : grid.cells) {
    std::sort(parts.begin(), parts.end());
    parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  }
  return grid;
}

std::string_view MetricScopeName(MetricScope scope) {
  return scope == MetricScope::kSingleEdit ? "single" : "all";
}

MetricScope ParseMetricScope(std::string_view name) {
  if (name == "single") return MetricScope::kSingleEdit;
  if (name == "all") return MetricScope::kAllEdits;
  ThrowInvalid("unknown metric scope '" + std::string(name) + "'");
}

std::optional<double> NearKp(const EditTrace& trace, const PartGrid& query_parts,
                             std::span<const PartGrid> distractor_parts, MetricScope scope,
                             int dilation) {
  if (dilation < 0) ThrowInvalid("dilation must be >= 0");
  const auto edits = ScopedEdits(trace, scope);
  if (edits.empty()) return std::nullopt;
  int hits = 0;
  for (const Edit& e : edits) {
    const Candidate& c = e.candidate;
    hits += HasKeypoint(query_parts, c.query_cell, dilation);
    hits += HasKeypoint(DistractorGrid(distractor_parts, c.distractor_image), c.distractor_cell,
                        dilation);
  }
  return static_cast<double>(hits) / (2.0 * static_cast<double>(edits.size()));
}

std::optional<double> SameKp(const EditTrace& trace, const PartGrid& query_parts,
                             std::span<const PartGrid> distractor_parts, MetricScope scope) {
  const auto edits = ScopedEdits(trace, scope);
  if (edits.empty()) return std::nullopt;
  int hits = 0;
  for (const Edit& e : edits) {
    const Candidate& c = e.candidate;
    const PartGrid& other = DistractorGrid(distractor_parts, c.distractor_image);
    CheckCell(query_parts, c.query_cell);
    CheckCell(other, c.distractor_cell);
    hits += SharesPart(query_parts.cells[c.query_cell], other.cells[c.distractor_cell]);
  }
  return static_cast<double>(hits) / static_cast<double>(edits.size());
}

std::optional<double> ForegroundFraction(const EditTrace& trace,
                                         const std::vector<bool>& query_mask,
                                         std::span<const std::vector<bool>> distractor_masks,
                                         MetricScope scope) {
  const auto edits = ScopedEdits(trace, scope);
  if (edits.empty()) return std::nullopt;
  int hits = 0;
  for (const Edit& e : edits) {
    const Candidate& c = e.candidate;
    if (c.distractor_image < 0 || c.distractor_image >= static_cast<int>(distractor_masks.size())) {
      ThrowInvalid("missing mask for distractor " + std::to_string(c.distractor_image));
    }
    hits += MaskAt(query_mask, c.query_cell);
    hits += MaskAt(distractor_masks[c.distractor_image], c.distractor_cell);
  }
  return static_cast<double>(hits) / (2.0 * static_cast<double>(edits.size()));
}

double ClusteringAccuracy(std::span<const int> labels,
                          std::span<const std::vector<int>> cell_parts) {
  if (labels.size() != cell_parts.size()) {
    ThrowInvalid("cluster labels and part annotations differ in length");
  }
  // cluster -> part -> member cells holding that part
  std::map<int, std::map<int, std::int64_t>> votes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int part : cell_parts[i]) ++votes[labels[i]][part];
  }
  std::map<int, int> assigned;
  for (const auto& [cluster, counts] : votes) {
    int best_part = counts.begin()->first;
    std::int64_t best_count = counts.begin()->second;
    for (const auto& [part, count] : counts) {
      if (count > best_count) {
        best_count = count;
        best_part = part;
      }
    }
    assigned[cluster] = best_part;
  }

  std::int64_t members = 0;
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& parts = cell_parts[i];
    if (parts.empty()) continue;
    ++members;
    correct += std::find(parts.begin(), parts.end(), assigned.at(labels[i])) != parts.end();
  }
  if (members == 0) ThrowInvalid("no cell carries a part annotation");
  return static_cast<double>(correct) / static_cast<double>(members);
}

double ClusteringAccuracy(const ClusterAssignment& assignment,
                          std::span<const PartGrid> part_grids) {
  std::vector<std::vector<int>> cell_parts;
  for (const PartGrid& g : part_grids) {
    cell_parts.insert(cell_parts.end(), g.cells.begin(), g.cells.end());
  }
  return ClusteringAccuracy(assignment.labels, cell_parts);
}

int SelectDistractorClass(const ConfusionMatrix& cm, int c) {
  if (c < 0 || c >= cm.num_classes) ThrowInvalid("class index out of range");
  int best = -1;
  for (int j = 0; j < cm.num_classes; ++j) {
    if (j == c || cm.at(c, j) <= 0) continue;
    if (best < 0 || cm.at(c, j) > cm.at(c, best)) best = j;
  }
  if (best < 0) {
    ThrowInvalid("class " + std::to_string(c) + " is never confused with another class");
  }
  return best;
}

int SelectDistractorClassByAttributes(const Matrix& class_attributes, int c) {
  if (class_attributes.rows < 2) ThrowInvalid("need at least two classes");
  if (c < 0 || c >= class_attributes.rows) ThrowInvalid("class index out of range");
  int best = -1;
  double best_dist = 0.0;
  for (int j = 0; j < class_attributes.rows; ++j) {
    if (j == c) continue;
    double dist = 0.0;
    for (int t = 0; t < class_attributes.cols; ++t) {
      const double diff = class_attributes.at(c, t) - class_attributes.at(j, t);
      dist += diff * diff;
    }
    if (best < 0 || dist < best_dist) {
      best = j;
      best_dist = dist;
    }
  }
  return best;
}

MetricsReport AggregateReport(std::span<const EditTrace> traces,
                              std::span<const CaseAnnotations> annotations, MetricScope scope,
                              int dilation) {
  if (traces.empty()) ThrowInvalid("no traces to aggregate");
  if (traces.size() != annotations.size()) {
    ThrowInvalid("every trace needs matching annotations");
  }
  MetricsReport report;
  report.scope = scope;
  report.dilation = dilation;
  report.case_count = static_cast<int>(traces.size());

  std::vector<double> near, same, fg, lengths;
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const EditTrace& t = traces[k];
    const CaseAnnotations& a = annotations[k];
    if (t.success) {
      ++report.success_count;
      lengths.push_back(static_cast<double>(t.edits.size()));
    } else {
      ++report.failed_count;
    }
    const auto n = NearKp(t, a.query_parts, a.distractor_parts, scope, dilation);
    if (!n) continue;
    ++report.scored_count;
    near.push_back(*n);
    same.push_back(*SameKp(t, a.query_parts, a.distractor_parts, scope));
    if (a.query_mask && a.distractor_masks) {
      fg.push_back(*ForegroundFraction(t, *a.query_mask, *a.distractor_masks, scope));
    }
  }
  report.near_kp = Mean(near);
  report.same_kp = Mean(same);
  report.mean_edits = Mean(lengths);
  report.foreground = Mean(fg);
  return report;
}

}  // namespace semcf
