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

#include "semcf/engine.h"

#include <algorithm>
#include <chrono>
#include <random>

#include <nlohmann/json.hpp>

#include "semcf/attributes.h"
#include "semcf/error.h"
#include "semcf/semantic.h"

namespace semcf {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

SearchCase MakeSearchCase(const Bundle& bundle, const std::string& query_id,
                          std::span<const std::string> distractor_ids) {
  if (distractor_ids.empty()) ThrowInvalid("at least one distractor is required");
  const ImageRecord& query = bundle.Image(query_id);
  SearchCase c;
  c.query_id = query.id;
  c.query_features = query.features;
  c.query_embedding = query.embedding;
  int target = -1;
  for (const auto& id : distractor_ids) {
    if (id == query_id) ThrowInvalid("the query cannot be its own distractor");
    const ImageRecord& img = bundle.Image(id);
    if (target >= 0 && img.class_index != target) {
      ThrowInvalid("distractors must all belong to one class");
    }
    target = img.class_index;
    c.distractor_ids.push_back(img.id);
    c.distractor_features.push_back(img.features);
    c.distractor_embeddings.push_back(img.embedding);
  }
  c.target_class = target;
  return c;
}

std::vector<std::string> PickDistractors(const Bundle& bundle, const std::string& class_name,
                                         int count, std::uint64_t seed,
                                         const std::string& exclude_id) {
  const int cls = bundle.ClassIndex(class_name);
  if (count < 1) ThrowInvalid("need at least one distractor");
  std::vector<std::string> pool;
  for (const auto& img : bundle.images) {
    if (img.class_index == cls && img.id != exclude_id) pool.push_back(img.id);
  }
  if (static_cast<int>(pool.size()) < count) {
    ThrowInvalid("class '" + class_name + "' has only " + std::to_string(pool.size()) +
                 " candidate distractor images");
  }
  // Fisher-Yates on raw generator output keeps the pick platform independent.
  std::mt19937_64 gen(seed);
  for (std::size_t i = pool.size(); i > 1; --i) {
    std::swap(pool[i - 1], pool[gen() % i]);
  }
  pool.resize(count);
  return pool;
}

TraceDocument Explain(const Bundle& bundle, const std::string& query_id,
                      std::span<const std::string> distractor_ids, const SearchConfig& config) {
  const SearchCase c = MakeSearchCase(bundle, query_id, distractor_ids);
  TraceDocument doc;
  doc.config = config;
  doc.trace = FindCounterfactual(bundle.head, c, config);
  return doc;
}

CaseAnnotations AnnotationsFor(const Bundle& bundle, const EditTrace& trace) {
  CaseAnnotations a;
  const ImageRecord& query = bundle.Image(trace.query_id);
  if (!query.parts) ThrowData("image '" + query.id + "' has no keypoint annotations");
  a.query_parts = *query.parts;
  bool masks = query.mask.has_value();
  for (const auto& id : trace.distractor_ids) {
    const ImageRecord& img = bundle.Image(id);
    if (!img.parts) ThrowData("image '" + id + "' has no keypoint annotations");
    a.distractor_parts.push_back(*img.parts);
    masks = masks && img.mask.has_value();
  }
  if (masks) {
    a.query_mask = *query.mask;
    a.distractor_masks.emplace();
    for (const auto& id : trace.distractor_ids) a.distractor_masks->push_back(*bundle.Image(id).mask);
  }
  return a;
}

MetricsReport Evaluate(const Bundle& bundle, std::span<const TraceDocument> traces,
                       MetricScope scope, int dilation) {
  std::vector<EditTrace> plain;
  std::vector<CaseAnnotations> annotations;
  for (const auto& doc : traces) {
    plain.push_back(doc.trace);
    annotations.push_back(AnnotationsFor(bundle, doc.trace));
  }
  MetricsReport report = AggregateReport(plain, annotations, scope, dilation);

  if (bundle.class_attributes) {
    const Matrix denoised = DenoiseAttributes(*bundle.class_attributes);
    std::vector<DiscriminativeCase> cases;
    for (const auto& doc : traces) {
      if (!doc.attributes || doc.attributes->empty()) continue;
      const int c = bundle.Image(doc.trace.query_id).class_index;
      cases.push_back({doc.attributes->front().importance.attribute,
                       DiscriminativeAttributes(denoised, c, doc.trace.target_class)});
    }
    if (!cases.empty()) {
      const bool any = std::any_of(cases.begin(), cases.end(),
                                   [](const auto& k) { return !k.ground_truth.empty(); });
      if (any) {
        const DiscriminativeScore score = Top1DiscriminativeAccuracy(cases);
        report.attribute_top1 = score.accuracy;
        report.attribute_cases = score.evaluated;
        report.attribute_skipped = score.skipped;
      } else {
        report.attribute_skipped = static_cast<int>(cases.size());
      }
    }
  }
  return report;
}

std::vector<TraceDocument> LoadTraceDirectory(const fs::path& dir) {
  if (!fs::is_directory(dir)) ThrowData("trace directory '" + dir.string() + "' not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<TraceDocument> out;
  for (const auto& f : files) out.push_back(LoadTrace(f));
  if (out.empty()) ThrowData("no trace files under '" + dir.string() + "'");
  return out;
}

ClusterEvalResult ClusterEval(const Bundle& bundle, int k, std::uint64_t seed) {
  std::vector<EmbeddingGrid> grids;
  std::vector<std::string> ids;
  std::vector<PartGrid> parts;
  for (const auto& img : bundle.images) {
    grids.push_back(img.embedding);
    ids.push_back(img.id);
    if (img.parts) {
      parts.push_back(*img.parts);
    } else {
      PartGrid empty;
      empty.height = bundle.feature_shape.height;
      empty.width = bundle.feature_shape.width;
      empty.cells.resize(empty.num_cells());
      parts.push_back(std::move(empty));
    }
  }
  if (grids.empty()) ThrowData("bundle has no images");
  const ClusterAssignment assignment = ClusterImageCells(grids, ids, k, seed);
  ClusterEvalResult r;
  r.k = k;
  r.seed = seed;
  r.cells = static_cast<int>(assignment.labels.size());
  r.iterations = assignment.iterations;
  r.inertia = assignment.inertia;
  r.accuracy = ClusteringAccuracy(assignment, parts);
  return r;
}

std::string ClusterEvalToJson(const ClusterEvalResult& r) {
  ordered_json j;
  j["format"] = "semcf.cluster_eval";
  j["version"] = 1;
  j["k"] = r.k;
  j["seed"] = r.seed;
  j["cells"] = r.cells;
  j["iterations"] = r.iterations;
  j["inertia"] = r.inertia;
  j["accuracy"] = r.accuracy;
  ordered_json kmeans;
  kmeans["init"] = "k-means++";
  kmeans["max_iterations"] = KMeansOptions{}.max_iterations;
  kmeans["relative_tolerance"] = KMeansOptions{}.relative_tolerance;
  kmeans["empty_cluster_policy"] = "farthest_point";
  j["kmeans"] = kmeans;
  return j.dump(2) + "\n";
}

void AttrExplain(const Bundle& bundle, TraceDocument& doc, int top_attributes) {
  if (!bundle.attributes) ThrowData("bundle has no attribute bank");
  const EditTrace& t = doc.trace;
  if (t.edits.empty()) ThrowInvalid("trace has no edit to explain");
  const Edit& best = t.edits.front();
  if (best.candidate.distractor_image < 0 ||
      best.candidate.distractor_image >= static_cast<int>(t.distractor_ids.size())) {
    ThrowData("trace edit references an unknown distractor");
  }
  const ImageRecord& query = bundle.Image(t.query_id);
  std::vector<FeatureGrid> distractors;
  for (const auto& id : t.distractor_ids) distractors.push_back(bundle.Image(id).features);
  const ImageRecord& source = bundle.Image(t.distractor_ids[best.candidate.distractor_image]);
  if (!query.part_probs || !source.part_probs) {
    ThrowData("attribute explanations need part probabilities for the query and distractor");
  }
  const FeatureGrid edited = ApplyEdit(query.features, distractors, best.candidate);
  const auto ranking =
      RankAttributes(query.features, edited, bundle.head, *bundle.attributes, t.target_class,
                     best.candidate, *query.part_probs, *source.part_probs);
  std::vector<RankedAttribute> out;
  for (const auto& imp : ranking) {
    if (top_attributes > 0 && static_cast<int>(out.size()) >= top_attributes) break;
    out.push_back({imp, bundle.attributes->names[imp.attribute],
                   bundle.part_names.at(bundle.attributes->attr_to_part[imp.attribute])});
  }
  doc.attributes = std::move(out);
}

PairMethod ParsePairMethod(std::string_view name) {
  if (name == "confusion") return PairMethod::kConfusion;
  if (name == "attributes") return PairMethod::kAttributes;
  ThrowInvalid("unknown pair selection method '" + std::string(name) + "'");
}

std::vector<std::pair<int, int>> SelectPairs(const Bundle& bundle, PairMethod method) {
  std::vector<std::pair<int, int>> out;
  const int classes = static_cast<int>(bundle.class_names.size());
  if (method == PairMethod::kConfusion) {
    if (!bundle.confusion) ThrowData("bundle has no confusion matrix");
    for (int c = 0; c < classes; ++c) {
      try {
        out.emplace_back(c, SelectDistractorClass(*bundle.confusion, c));
      } catch (const Error&) {
        // never confused: no pair for this class
      }
    }
  } else {
    if (!bundle.class_attributes) ThrowData("bundle has no class attributes");
    for (int c = 0; c < classes; ++c) {
      out.emplace_back(c, SelectDistractorClassByAttributes(*bundle.class_attributes, c));
    }
  }
  return out;
}

std::string PairsToJson(const Bundle& bundle, PairMethod method,
                        std::span<const std::pair<int, int>> pairs) {
  ordered_json j;
  j["format"] = "semcf.pairs";
  j["version"] = 1;
  j["method"] = method == PairMethod::kConfusion ? "confusion" : "attributes";
  j["pairs"] = ordered_json::array();
  for (const auto& [c, d] : pairs) {
    ordered_json p;
    p["query_class"] = bundle.class_names[c];
    p["distractor_class"] = bundle.class_names[d];
    j["pairs"].push_back(p);
  }
  return j.dump(2) + "\n";
}

BenchmarkResult Benchmark(const Bundle& bundle, int num_distractors, double k_fraction,
                          int max_edits, int repeats, int jobs) {
  if (bundle.images.empty()) ThrowData("bundle has no images");
  if (num_distractors < 1) ThrowInvalid("need at least one distractor");
  if (repeats < 1) repeats = 1;
  const ImageRecord& query = bundle.images.front();

  std::vector<std::string> distractors;
  int target = -1;
  for (const auto& candidate_class : bundle.images) {
    if (candidate_class.class_index == query.class_index) continue;
    std::vector<std::string> ids;
    for (const auto& img : bundle.images) {
      if (img.class_index == candidate_class.class_index) ids.push_back(img.id);
    }
    if (static_cast<int>(ids.size()) >= num_distractors) {
      ids.resize(num_distractors);
      distractors = std::move(ids);
      target = candidate_class.class_index;
      break;
    }
  }
  if (target < 0) {
    ThrowInvalid("no class other than the query's has " + std::to_string(num_distractors) +
                 " images");
  }

  SearchConfig config;
  config.k_fraction = k_fraction;
  config.max_edits = max_edits;
  config.jobs = jobs;
  const SearchCase c = MakeSearchCase(bundle, query.id, distractors);

  BenchmarkResult r;
  r.query_id = query.id;
  r.target_class = target;
  r.num_distractors = num_distractors;
  r.k_fraction = k_fraction;
  r.repeats = repeats;
  r.best_seconds = -1.0;
  for (int rep = 0; rep < repeats; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    const EditTrace trace = FindCounterfactual(bundle.head, c, config);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.best_seconds < 0 || secs < r.best_seconds) r.best_seconds = secs;
    r.candidates_per_edit = trace.stats.candidates_per_edit;
    r.head_evaluations = trace.stats.head_evaluations;
    r.dot_products = trace.stats.dot_products;
    r.edits = static_cast<int>(trace.edits.size());
  }
  r.seconds_per_edit = r.best_seconds / std::max(r.edits, 1);
  return r;
}

std::string BenchmarkToJson(const BenchmarkResult& r) {
  ordered_json j;
  j["format"] = "semcf.benchmark";
  j["version"] = 1;
  j["query_id"] = r.query_id;
  j["target_class"] = r.target_class;
  j["num_distractors"] = r.num_distractors;
  j["k_fraction"] = r.k_fraction;
  j["edits"] = r.edits;
  j["candidates_per_edit"] = r.candidates_per_edit;
  j["head_evaluations"] = r.head_evaluations;
  j["dot_products"] = r.dot_products;
  j["repeats"] = r.repeats;
  // Wall-clock fields; excluded from any byte comparison.
  ordered_json timing;
  timing["best_seconds"] = r.best_seconds;
  timing["seconds_per_edit"] = r.seconds_per_edit;
  j["timing"] = timing;
  return j.dump(2) + "\n";
}

}  // namespace semcf
