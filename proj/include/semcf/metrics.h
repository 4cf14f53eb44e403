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

// Evaluation of counterfactual traces against keypoint and mask annotations,
// clustering accuracy and the query/distractor class-pair selection rules.
//
// Near-KP: fraction of selected regions containing a keypoint. Each edit
//   contributes two regions (the query cell and the distractor cell).
// Same-KP: fraction of edits whose two cells share at least one part.
// Foreground: fraction of selected regions on the object mask.

#ifndef SEMCF_METRICS_H_
#define SEMCF_METRICS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcf/search.h"
#include "semcf/semantic.h"
#include "semcf/tensor.h"

namespace semcf {

struct Keypoint {
  int part_id = 0;
  double x = 0.0;  // pixels
  double y = 0.0;
  bool visible = true;

  bool operator==(const Keypoint&) const = default;
};

struct KeypointSet {
  std::string image_id;
  int image_width = 0;
  int image_height = 0;
  std::vector<Keypoint> points;

  bool operator==(const KeypointSet&) const = default;
};

// Part ids present in each cell (sorted, unique).
struct PartGrid {
  int height = 0;
  int width = 0;
  std::vector<std::vector<int>> cells;

  int num_cells() const { return height * width; }
  bool operator==(const PartGrid&) const = default;
};

// Visible point (x, y) lands in cell (floor(y*h/H), floor(x*w/W)), clamped
// to the grid. Throws Error(kInvalidArgument) on zero image or grid dims.
PartGrid ProjectKeypoints(const KeypointSet& keypoints, int height, int width);

enum class MetricScope { kSingleEdit, kAllEdits };

std::string_view MetricScopeName(MetricScope scope);
MetricScope ParseMetricScope(std::string_view name);

// The following return nullopt when the scope holds no edit. Throws
// Error(kInvalidArgument) when an annotation is missing or mis-sized.

// `dilation` widens "contains a keypoint" to the (2r+1)^2 cell window.
std::optional<double> NearKp(const EditTrace& trace, const PartGrid& query_parts,
                             std::span<const PartGrid> distractor_parts, MetricScope scope,
                             int dilation = 0);
std::optional<double> SameKp(const EditTrace& trace, const PartGrid& query_parts,
                             std::span<const PartGrid> distractor_parts, MetricScope scope);
// Masks hold one flag per cell.
std::optional<double> ForegroundFraction(const EditTrace& trace,
                                         const std::vector<bool>& query_mask,
                                         std::span<const std::vector<bool>> distractor_masks,
                                         MetricScope scope);

// Majority vote: every cluster takes the part found in most of its member
// cells (ties to the lower part id); accuracy is the fraction of member cells
// holding their cluster's part. Cells without parts are ignored. `cell_parts`
// is parallel to `labels`.
double ClusteringAccuracy(std::span<const int> labels,
                          std::span<const std::vector<int>> cell_parts);
// `part_grids` are in the same image order as the assignment's rows.
double ClusteringAccuracy(const ClusterAssignment& assignment,
                          std::span<const PartGrid> part_grids);

struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;  // rows: true class, cols: predicted

  std::int64_t at(int truth, int predicted) const {
    return counts[static_cast<std::size_t>(truth) * num_classes + predicted];
  }
};

// Off-diagonal argmax of row c (lowest index on ties).
int SelectDistractorClass(const ConfusionMatrix& cm, int c);
// Nearest other class by Euclidean distance between attribute rows.
int SelectDistractorClassByAttributes(const Matrix& class_attributes, int c);

// Per-case annotations for AggregateReport. Masks are optional.
struct CaseAnnotations {
  PartGrid query_parts;
  std::vector<PartGrid> distractor_parts;
  std::optional<std::vector<bool>> query_mask;
  std::optional<std::vector<std::vector<bool>>> distractor_masks;
};

struct MetricsReport {
  MetricScope scope = MetricScope::kAllEdits;
  std::optional<double> near_kp;
  std::optional<double> same_kp;
  std::optional<double> mean_edits;  // over successful traces
  std::optional<double> foreground;
  int case_count = 0;
  int success_count = 0;
  int failed_count = 0;
  int scored_count = 0;  // traces with at least one edit in scope
  int dilation = 0;
  // Top-1 attribute discriminativeness over traces carrying a ranking;
  // filled by callers that have class-attribute annotations.
  std::optional<double> attribute_top1;
  int attribute_cases = 0;
  int attribute_skipped = 0;

  bool operator==(const MetricsReport&) const = default;
};

// Means of the per-trace metrics. Throws on an empty list or a size
// mismatch between traces and annotations.
MetricsReport AggregateReport(std::span<const EditTrace> traces,
                              std::span<const CaseAnnotations> annotations, MetricScope scope,
                              int dilation = 0);

}  // namespace semcf

#endif  // SEMCF_METRICS_H_
