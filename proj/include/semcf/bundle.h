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

// On-disk bundle: a `manifest.json` document plus raw tensor blobs.
//
// Blobs are little-endian IEEE-754 float32, row-major, with no header; their
// shapes are implied by the manifest:
//
//   images[].features     h x w x feature_channels
//   images[].embedding    h x w x embedding_channels
//   images[].mask         h x w            (0 = background, else foreground)
//   images[].part_probs   h x w x |parts|
//   head.layers[].weights outputs x inputs
//   head.layers[].bias    outputs
//   attribute_bank        weights T x feature_channels, biases T
//   class_attributes      |classes| x T
//   confusion_matrix      |classes| x |classes| (non-negative integers)
//
// See README.md for a complete manifest example.

#ifndef SEMCF_BUNDLE_H_
#define SEMCF_BUNDLE_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcf/attributes.h"
#include "semcf/decision_head.h"
#include "semcf/metrics.h"
#include "semcf/tensor.h"

namespace semcf {

inline constexpr int kBundleSchemaVersion = 1;

struct ImageRecord {
  std::string id;
  int class_index = 0;
  FeatureGrid features;
  EmbeddingGrid embedding;
  std::optional<KeypointSet> keypoints;  // part ids already alias-merged
  std::optional<std::vector<bool>> mask;
  std::optional<PartProbGrid> part_probs;
  // Keypoints projected onto the grid; set whenever keypoints are.
  std::optional<PartGrid> parts;

  bool operator==(const ImageRecord&) const = default;
};

struct Bundle {
  int schema_version = kBundleSchemaVersion;
  GridShape feature_shape;
  int embedding_channels = 0;
  std::vector<std::string> class_names;
  std::vector<std::string> part_names;
  // alias name -> canonical part name (e.g. left and right wings -> wing).
  std::map<std::string, std::string> part_aliases;
  DecisionHead head;
  std::vector<ImageRecord> images;
  std::optional<AttributeBank> attributes;
  std::optional<Matrix> class_attributes;
  std::optional<ConfusionMatrix> confusion;

  // Load-time notices such as ignored manifest fields. Not serialized.
  std::vector<std::string> warnings;

  // Throw Error(kInvalidArgument) on an unknown id or name.
  const ImageRecord& Image(std::string_view id) const;
  int ClassIndex(std::string_view name) const;
  // Resolves aliases; throws Error(kData) on an unknown part.
  int PartIndex(std::string_view name) const;
};

// Reads and validates a bundle directory (or a manifest path inside it).
// Every problem is reported as Error(kData) with a message naming the
// offending field or blob.
Bundle LoadBundle(const std::filesystem::path& path);

// Writes `bundle` under `dir` with a deterministic manifest and blob layout.
// Image ids must be usable as file names.
void WriteBundle(const Bundle& bundle, const std::filesystem::path& dir);

// Raw float32 blob helpers.
std::vector<float> ReadBlob(const std::filesystem::path& file, std::size_t expected_count);
void WriteBlob(const std::filesystem::path& file, std::span<const float> values);

}  // namespace semcf

#endif  // SEMCF_BUNDLE_H_
