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

#include "semcf/trace_io.h"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "semcf/error.h"

namespace semcf {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kTraceFormat = "semcf.trace";
constexpr const char* kReportFormat = "semcf.report";
constexpr int kDocumentVersion = 1;

ordered_json Optional(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> ReadOptional(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

ordered_json ConfigToJson(const SearchConfig& c) {
  ordered_json j;
  j["lambda"] = c.lambda;
  j["temperature"] = c.temperature;
  j["k_fraction"] = c.k_fraction;
  j["max_edits"] = c.max_edits;
  j["mode"] = std::string(ConstraintModeName(c.mode));
  j["normalization"] = std::string(NormalizationName(c.normalization));
  j["reuse_cells"] = c.reuse_cells;
  j["hard_clusters"] = c.hard_clusters;
  j["seed"] = c.seed;
  return j;
}

SearchConfig ConfigFromJson(const ordered_json& j) {
  SearchConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.temperature = j.at("temperature").get<double>();
  c.k_fraction = j.at("k_fraction").get<double>();
  c.max_edits = j.at("max_edits").get<int>();
  c.mode = ParseConstraintMode(j.at("mode").get<std::string>());
  c.normalization = ParseNormalization(j.at("normalization").get<std::string>());
  c.reuse_cells = j.at("reuse_cells").get<bool>();
  c.hard_clusters = j.at("hard_clusters").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string TraceToJson(const TraceDocument& doc) {
  const EditTrace& t = doc.trace;
  ordered_json j;
  j["format"] = kTraceFormat;
  j["version"] = kDocumentVersion;
  j["query_id"] = t.query_id;
  j["query_class"] = t.query_class;
  j["target_class"] = t.target_class;
  j["distractor_ids"] = t.distractor_ids;
  j["config"] = ConfigToJson(doc.config);
  j["success"] = t.success;
  j["num_edits"] = t.edits.size();
  j["edits"] = ordered_json::array();
  for (const Edit& e : t.edits) {
    ordered_json ej;
    ej["query_cell"] = e.candidate.query_cell;
    ej["distractor_image"] = e.candidate.distractor_image;
    ej["distractor_cell"] = e.candidate.distractor_cell;
    ej["class_prob_after"] = e.class_prob_after;
    ej["semantic_likelihood"] = Optional(e.semantic_likelihood);
    ej["combined_score"] = e.combined_score;
    j["edits"].push_back(ej);
  }
  j["final_probs"] = std::vector<double>(t.final_probs.values().begin(),
                                         t.final_probs.values().end());
  ordered_json stats;
  stats["head_evaluations"] = t.stats.head_evaluations;
  stats["dot_products"] = t.stats.dot_products;
  stats["candidates_per_edit"] = t.stats.candidates_per_edit;
  j["stats"] = stats;
  if (doc.metrics) {
    ordered_json mj;
    mj["near_kp"] = Optional(doc.metrics->near_kp);
    mj["same_kp"] = Optional(doc.metrics->same_kp);
    mj["foreground"] = Optional(doc.metrics->foreground);
    j["metrics"] = mj;
  }
  if (doc.attributes) {
    ordered_json aj = ordered_json::array();
    for (const RankedAttribute& a : *doc.attributes) {
      ordered_json item;
      item["attribute"] = a.importance.attribute;
      item["name"] = a.name;
      item["part"] = a.part;
      item["s"] = a.importance.s;
      item["s_prime"] = a.importance.s_prime;
      item["delta"] = a.importance.delta;
      aj.push_back(item);
    }
    j["attributes"] = aj;
  }
  return j.dump(2) + "\n";
}

TraceDocument TraceFromJson(const std::string& text) {
  TraceDocument doc;
  try {
    const ordered_json j = ordered_json::parse(text);
    if (j.value("format", "") != kTraceFormat) ThrowData("not a trace document");
    if (j.at("version").get<int>() != kDocumentVersion) {
      ThrowData("unsupported trace version " + j.at("version").dump());
    }
    EditTrace& t = doc.trace;
    t.query_id = j.at("query_id").get<std::string>();
    t.query_class = j.at("query_class").get<int>();
    t.target_class = j.at("target_class").get<int>();
    t.distractor_ids = j.at("distractor_ids").get<std::vector<std::string>>();
    doc.config = ConfigFromJson(j.at("config"));
    t.success = j.at("success").get<bool>();
    for (const auto& ej : j.at("edits")) {
      Edit e;
      e.candidate.query_cell = ej.at("query_cell").get<int>();
      e.candidate.distractor_image = ej.at("distractor_image").get<int>();
      e.candidate.distractor_cell = ej.at("distractor_cell").get<int>();
      e.class_prob_after = ej.at("class_prob_after").get<double>();
      e.semantic_likelihood = ReadOptional(ej, "semantic_likelihood");
      e.combined_score = ej.at("combined_score").get<double>();
      t.edits.push_back(e);
    }
    if (j.contains("num_edits") && j.at("num_edits").get<std::size_t>() != t.edits.size()) {
      ThrowData("trace num_edits disagrees with its edit list");
    }
    t.final_probs = ProbVector(j.at("final_probs").get<std::vector<double>>());
    const auto& stats = j.at("stats");
    t.stats.head_evaluations = stats.at("head_evaluations").get<std::int64_t>();
    t.stats.dot_products = stats.at("dot_products").get<std::int64_t>();
    t.stats.candidates_per_edit = stats.at("candidates_per_edit").get<std::vector<std::int64_t>>();
    if (j.contains("metrics")) {
      const auto& mj = j.at("metrics");
      doc.metrics = TraceMetrics{ReadOptional(mj, "near_kp"), ReadOptional(mj, "same_kp"),
                                 ReadOptional(mj, "foreground")};
    }
    if (j.contains("attributes")) {
      std::vector<RankedAttribute> attrs;
      for (const auto& item : j.at("attributes")) {
        RankedAttribute a;
        a.importance.attribute = item.at("attribute").get<int>();
        a.name = item.at("name").get<std::string>();
        a.part = item.at("part").get<std::string>();
        a.importance.s = item.at("s").get<double>();
        a.importance.s_prime = item.at("s_prime").get<double>();
        a.importance.delta = item.at("delta").get<double>();
        attrs.push_back(std::move(a));
      }
      doc.attributes = std::move(attrs);
    }
  } catch (const nlohmann::json::exception& e) {
    ThrowData(std::string("malformed trace document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kData) throw;
    ThrowData(std::string("malformed trace document: ") + e.what());
  }
  return doc;
}

std::string ReadTextFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) ThrowData("cannot write '" + path.string() + "'");
  out << text;
  if (!out) ThrowData("failed writing '" + path.string() + "'");
}

void SaveTrace(const TraceDocument& doc, const fs::path& path) {
  WriteTextFile(path, TraceToJson(doc));
}

TraceDocument LoadTrace(const fs::path& path) {
  try {
    return TraceFromJson(ReadTextFile(path));
  } catch (const Error& e) {
    ThrowData(path.string() + ": " + e.what());
  }
}

std::string ReportToJson(const MetricsReport& r) {
  ordered_json j;
  j["format"] = kReportFormat;
  j["version"] = kDocumentVersion;
  j["scope"] = std::string(MetricScopeName(r.scope));
  j["near_kp"] = Optional(r.near_kp);
  j["same_kp"] = Optional(r.same_kp);
  j["mean_edits"] = Optional(r.mean_edits);
  j["foreground"] = Optional(r.foreground);
  j["case_count"] = r.case_count;
  j["success_count"] = r.success_count;
  j["failed_count"] = r.failed_count;
  j["failure_rate"] =
      r.case_count > 0 ? static_cast<double>(r.failed_count) / r.case_count : 0.0;
  j["scored_count"] = r.scored_count;
  if (r.attribute_top1 || r.attribute_cases > 0 || r.attribute_skipped > 0) {
    ordered_json a;
    a["top1_accuracy"] = Optional(r.attribute_top1);
    a["evaluated"] = r.attribute_cases;
    a["skipped"] = r.attribute_skipped;
    j["attributes"] = a;
  }
  ordered_json meta;
  meta["near_kp_regions"] = "query_and_distractor_cells_counted_separately";
  meta["keypoint_dilation_cells"] = r.dilation;
  meta["mean_edits_over"] = "successful_traces";
  meta["kp_metrics_over"] = "traces_with_scoped_edits";
  j["metadata"] = meta;
  return j.dump(2) + "\n";
}

}  // namespace semcf
