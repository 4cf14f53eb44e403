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

// JSON documents written by the engine: traces (one search, plus optional
// metric values and attribute ranking) and aggregate metric reports. Output
// is byte-deterministic: fixed key order, shortest round-trip doubles, no
// timestamps.

#ifndef SEMCF_TRACE_IO_H_
#define SEMCF_TRACE_IO_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "semcf/attributes.h"
#include "semcf/metrics.h"
#include "semcf/search.h"

namespace semcf {

struct RankedAttribute {
  AttributeImportance importance;
  std::string name;
  std::string part;

  bool operator==(const RankedAttribute&) const = default;
};

struct TraceMetrics {
  std::optional<double> near_kp;
  std::optional<double> same_kp;
  std::optional<double> foreground;

  bool operator==(const TraceMetrics&) const = default;
};

struct TraceDocument {
  EditTrace trace;
  SearchConfig config;
  std::optional<TraceMetrics> metrics;
  std::optional<std::vector<RankedAttribute>> attributes;

  bool operator==(const TraceDocument&) const = default;
};

std::string TraceToJson(const TraceDocument& doc);
// Throws Error(kData) on malformed input.
TraceDocument TraceFromJson(const std::string& text);

// Throw Error(kData) when the file cannot be written or read.
void SaveTrace(const TraceDocument& doc, const std::filesystem::path& path);
TraceDocument LoadTrace(const std::filesystem::path& path);

// Aggregate report. Column order follows Near-KP, Same-KP, #Edits.
std::string ReportToJson(const MetricsReport& report);

// Whole-file helpers.
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace semcf

#endif  // SEMCF_TRACE_IO_H_
