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

#include "semcf/semcf.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "semcf/bundle.h"
#include "semcf/engine.h"
#include "semcf/error.h"
#include "semcf/trace_io.h"

struct semcf_bundle {
  semcf::Bundle bundle;
};

struct semcf_trace {
  semcf::TraceDocument doc;
};

namespace {

thread_local std::string g_last_error;

semcf_status StatusOf(semcf::ErrorCode code) {
  switch (code) {
    case semcf::ErrorCode::kInvalidArgument:
      return SEMCF_ERR_USAGE;
    case semcf::ErrorCode::kData:
      return SEMCF_ERR_DATA;
    case semcf::ErrorCode::kSearchFailed:
      return SEMCF_ERR_SEARCH_FAILED;
    default:
      return SEMCF_ERR_INTERNAL;
  }
}

semcf_status Fail(semcf_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
semcf_status Guard(Fn&& fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (const semcf::Error& e) {
    return Fail(StatusOf(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(SEMCF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(SEMCF_ERR_INTERNAL, e.what());
  } catch (...) {
    return Fail(SEMCF_ERR_INTERNAL, "unknown error");
  }
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Require(bool ok, const char* what) {
  if (!ok) semcf::ThrowInvalid(std::string(what) + " must not be null");
}

semcf::SearchConfig ToConfig(const semcf_search_options* o) {
  semcf::SearchConfig c;
  if (o == nullptr) return c;
  c.lambda = o->lambda;
  c.temperature = o->temperature;
  c.k_fraction = o->k_fraction;
  c.max_edits = o->max_edits;
  if (o->mode != nullptr) c.mode = semcf::ParseConstraintMode(o->mode);
  if (o->normalization != nullptr) c.normalization = semcf::ParseNormalization(o->normalization);
  c.reuse_cells = o->reuse_cells != 0;
  c.hard_clusters = o->hard_clusters;
  c.seed = o->seed;
  c.jobs = o->jobs;
  c.Validate();
  return c;
}

semcf_status RunExplain(const semcf::Bundle& bundle, const std::string& query,
                        const std::vector<std::string>& distractors,
                        const semcf_search_options* options, semcf_trace** out) {
  auto trace = std::make_unique<semcf_trace>();
  trace->doc = semcf::Explain(bundle, query, distractors, ToConfig(options));
  const bool success = trace->doc.trace.success;
  *out = trace.release();
  if (!success) {
    return Fail(SEMCF_ERR_SEARCH_FAILED, "search ended without reaching the target class");
  }
  return SEMCF_OK;
}

}  // namespace

extern "C" {

const char* semcf_last_error(void) { return g_last_error.c_str(); }

const char* semcf_version(void) { return "0.1.0"; }

void semcf_free_string(char* s) { std::free(s); }

semcf_status semcf_bundle_open(const char* path, semcf_bundle** out) {
  return Guard([&] {
    Require(path != nullptr, "path");
    Require(out != nullptr, "out");
    *out = nullptr;
    auto b = std::make_unique<semcf_bundle>();
    b->bundle = semcf::LoadBundle(path);
    *out = b.release();
    return SEMCF_OK;
  });
}

void semcf_bundle_close(semcf_bundle* bundle) { delete bundle; }

size_t semcf_bundle_num_images(const semcf_bundle* bundle) {
  return bundle == nullptr ? 0 : bundle->bundle.images.size();
}

size_t semcf_bundle_num_warnings(const semcf_bundle* bundle) {
  return bundle == nullptr ? 0 : bundle->bundle.warnings.size();
}

const char* semcf_bundle_warning(const semcf_bundle* bundle, size_t index) {
  if (bundle == nullptr || index >= bundle->bundle.warnings.size()) return nullptr;
  return bundle->bundle.warnings[index].c_str();
}

void semcf_search_options_default(semcf_search_options* options) {
  if (options == nullptr) return;
  const semcf::SearchConfig c;
  options->lambda = c.lambda;
  options->temperature = c.temperature;
  options->k_fraction = c.k_fraction;
  options->max_edits = c.max_edits;
  options->mode = "soft";
  options->normalization = "pooled";
  options->reuse_cells = c.reuse_cells ? 1 : 0;
  options->hard_clusters = c.hard_clusters;
  options->seed = c.seed;
  options->jobs = c.jobs;
}

semcf_status semcf_explain(const semcf_bundle* bundle, const char* query_id,
                           const char* const* distractor_ids, size_t num_distractors,
                           const semcf_search_options* options, semcf_trace** out) {
  return Guard([&] {
    Require(bundle != nullptr, "bundle");
    Require(query_id != nullptr, "query_id");
    Require(out != nullptr, "out");
    Require(distractor_ids != nullptr || num_distractors == 0, "distractor_ids");
    *out = nullptr;
    std::vector<std::string> ids;
    for (size_t i = 0; i < num_distractors; ++i) {
      Require(distractor_ids[i] != nullptr, "distractor id");
      ids.emplace_back(distractor_ids[i]);
    }
    return RunExplain(bundle->bundle, query_id, ids, options, out);
  });
}

semcf_status semcf_explain_class(const semcf_bundle* bundle, const char* query_id,
                                 const char* class_name, int count,
                                 const semcf_search_options* options, semcf_trace** out) {
  return Guard([&] {
    Require(bundle != nullptr, "bundle");
    Require(query_id != nullptr, "query_id");
    Require(class_name != nullptr, "class_name");
    Require(out != nullptr, "out");
    *out = nullptr;
    const std::uint64_t seed = options != nullptr ? options->seed : 0;
    const auto ids = semcf::PickDistractors(bundle->bundle, class_name, count, seed, query_id);
    return RunExplain(bundle->bundle, query_id, ids, options, out);
  });
}

semcf_status semcf_trace_load(const char* path, semcf_trace** out) {
  return Guard([&] {
    Require(path != nullptr, "path");
    Require(out != nullptr, "out");
    *out = nullptr;
    auto t = std::make_unique<semcf_trace>();
    t->doc = semcf::LoadTrace(path);
    *out = t.release();
    return SEMCF_OK;
  });
}

semcf_status semcf_trace_save(const semcf_trace* trace, const char* path) {
  return Guard([&] {
    Require(trace != nullptr, "trace");
    Require(path != nullptr, "path");
    semcf::SaveTrace(trace->doc, path);
    return SEMCF_OK;
  });
}

semcf_status semcf_trace_to_json(const semcf_trace* trace, char** out) {
  return Guard([&] {
    Require(trace != nullptr, "trace");
    Require(out != nullptr, "out");
    *out = CopyString(semcf::TraceToJson(trace->doc));
    return SEMCF_OK;
  });
}

void semcf_trace_free(semcf_trace* trace) { delete trace; }

int semcf_trace_success(const semcf_trace* trace) {
  return trace != nullptr && trace->doc.trace.success ? 1 : 0;
}

size_t semcf_trace_num_edits(const semcf_trace* trace) {
  return trace == nullptr ? 0 : trace->doc.trace.edits.size();
}

semcf_status semcf_trace_edit(const semcf_trace* trace, size_t index, int* query_cell,
                              int* distractor_image, int* distractor_cell) {
  return Guard([&] {
    Require(trace != nullptr, "trace");
    if (index >= trace->doc.trace.edits.size()) semcf::ThrowInvalid("edit index out of range");
    const semcf::Candidate& c = trace->doc.trace.edits[index].candidate;
    if (query_cell != nullptr) *query_cell = c.query_cell;
    if (distractor_image != nullptr) *distractor_image = c.distractor_image;
    if (distractor_cell != nullptr) *distractor_cell = c.distractor_cell;
    return SEMCF_OK;
  });
}

semcf_status semcf_attr_explain(const semcf_bundle* bundle, semcf_trace* trace,
                                int top_attributes) {
  return Guard([&] {
    Require(bundle != nullptr, "bundle");
    Require(trace != nullptr, "trace");
    semcf::AttrExplain(bundle->bundle, trace->doc, top_attributes);
    return SEMCF_OK;
  });
}

semcf_status semcf_evaluate(const semcf_bundle* bundle, const char* trace_dir, const char* scope,
                            int dilation, char** report_json) {
  return Guard([&] {
    Require(bundle != nullptr, "bundle");
    Require(trace_dir != nullptr, "trace_dir");
    Require(report_json != nullptr, "report_json");
    const semcf::MetricScope s =
        scope == nullptr ? semcf::MetricScope::kAllEdits : semcf::ParseMetricScope(scope);
    if (dilation < 0) semcf::ThrowInvalid("dilation must be non-negative");
    const auto traces = semcf::LoadTraceDirectory(trace_dir);
    *report_json =
        CopyString(semcf::ReportToJson(semcf::Evaluate(bundle->bundle, traces, s, dilation)));
    return SEMCF_OK;
  });
}

semcf_status semcf_cluster_eval(const semcf_bundle* bundle, int k, uint64_t seed,
                                char** result_json) {
  return Guard([&] {
    Require(bundle != nullptr, "bundle");
    Require(result_json != nullptr, "result_json");
    *result_json =
        CopyString(semcf::ClusterEvalToJson(semcf::ClusterEval(bundle->bundle, k, seed)));
    return SEMCF_OK;
  });
}

semcf_status semcf_select_pairs(const semcf_bundle* bundle, const char* method,
                                char** pairs_json) {
  return Guard([&] {
    Require(bundle != nullptr, "bundle");
    Require(method != nullptr, "method");
    Require(pairs_json != nullptr, "pairs_json");
    const semcf::PairMethod m = semcf::ParsePairMethod(method);
    const auto pairs = semcf::SelectPairs(bundle->bundle, m);
    *pairs_json = CopyString(semcf::PairsToJson(bundle->bundle, m, pairs));
    return SEMCF_OK;
  });
}

semcf_status semcf_benchmark(const semcf_bundle* bundle, int num_distractors, double k_fraction,
                             int max_edits, int repeats, int jobs, char** result_json) {
  return Guard([&] {
    Require(bundle != nullptr, "bundle");
    Require(result_json != nullptr, "result_json");
    const auto r = semcf::Benchmark(bundle->bundle, num_distractors, k_fraction, max_edits,
                                    repeats, jobs);
    *result_json = CopyString(semcf::BenchmarkToJson(r));
    return SEMCF_OK;
  });
}

}  // extern "C"
