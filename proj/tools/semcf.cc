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

// Command-line front end. Exit codes: 0 success, 2 usage, 3 data error,
// 4 search finished without flipping the decision.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "semcf/semcf.h"

namespace {

constexpr int kExitUsage = 2;

int Report(semcf_status status, const std::string& context) {
  if (status != SEMCF_OK) {
    std::cerr << "semcf " << context << ": " << semcf_last_error() << "\n";
  }
  return static_cast<int>(status);
}

// Writes `text` to `path`, or stdout when the path is empty or "-".
int Emit(const char* text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::fputs(text, stdout);
    return 0;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) {
    std::cerr << "semcf: cannot write '" << path << "'\n";
    return SEMCF_ERR_DATA;
  }
  return 0;
}

int EmitOwned(char* text, const std::string& path) {
  const int rc = Emit(text, path);
  semcf_free_string(text);
  return rc;
}

class BundleHandle {
 public:
  ~BundleHandle() { semcf_bundle_close(bundle_); }
  semcf_status Open(const std::string& path) {
    const semcf_status st = semcf_bundle_open(path.c_str(), &bundle_);
    if (st == SEMCF_OK) {
      for (size_t i = 0; i < semcf_bundle_num_warnings(bundle_); ++i) {
        std::cerr << "semcf: warning: " << semcf_bundle_warning(bundle_, i) << "\n";
      }
    }
    return st;
  }
  semcf_bundle* get() const { return bundle_; }

 private:
  semcf_bundle* bundle_ = nullptr;
};

struct ExplainArgs {
  std::string bundle;
  std::string query;
  std::vector<std::string> distractors;
  std::string distractor_class;
  int num_distractors = 0;
  double lambda = 0;
  double tau = 0;
  double topk = 0;
  std::string mode = "soft";
  std::string normalization = "pooled";
  int max_edits = 0;
  bool reuse_cells = false;
  int hard_clusters = 0;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
};

int RunExplain(const ExplainArgs& a) {
  if (a.distractors.empty() == a.distractor_class.empty()) {
    std::cerr << "semcf explain: give either --distractor or --distractor-class\n";
    return kExitUsage;
  }
  if (!a.distractor_class.empty() && a.num_distractors < 1) {
    std::cerr << "semcf explain: --distractor-class needs --num-distractors >= 1\n";
    return kExitUsage;
  }
  BundleHandle bundle;
  if (semcf_status st = bundle.Open(a.bundle); st != SEMCF_OK) return Report(st, "explain");

  semcf_search_options opts;
  semcf_search_options_default(&opts);
  opts.lambda = a.lambda;
  opts.temperature = a.tau;
  opts.k_fraction = a.topk;
  opts.mode = a.mode.c_str();
  opts.normalization = a.normalization.c_str();
  opts.max_edits = a.max_edits;
  opts.reuse_cells = a.reuse_cells ? 1 : 0;
  opts.hard_clusters = a.hard_clusters;
  opts.seed = a.seed;
  opts.jobs = a.jobs;

  semcf_trace* trace = nullptr;
  semcf_status st;
  if (!a.distractors.empty()) {
    std::vector<const char*> ids;
    for (const auto& d : a.distractors) ids.push_back(d.c_str());
    st = semcf_explain(bundle.get(), a.query.c_str(), ids.data(), ids.size(), &opts, &trace);
  } else {
    st = semcf_explain_class(bundle.get(), a.query.c_str(), a.distractor_class.c_str(),
                             a.num_distractors, &opts, &trace);
  }
  if (trace == nullptr) return Report(st, "explain");
  const std::string failure = st == SEMCF_OK ? "" : semcf_last_error();

  int rc = 0;
  if (a.out.empty() || a.out == "-") {
    char* json = nullptr;
    rc = Report(semcf_trace_to_json(trace, &json), "explain");
    if (rc == 0) rc = EmitOwned(json, "");
  } else {
    rc = Report(semcf_trace_save(trace, a.out.c_str()), "explain");
  }
  semcf_trace_free(trace);
  if (rc != 0) return rc;
  if (st != SEMCF_OK) std::cerr << "semcf explain: " << failure << "\n";
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantically consistent counterfactual explanations over feature bundles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(semcf_version()));

  semcf_search_options defaults;
  semcf_search_options_default(&defaults);

  ExplainArgs ex;
  ex.lambda = defaults.lambda;
  ex.tau = defaults.temperature;
  ex.topk = defaults.k_fraction;
  ex.hard_clusters = defaults.hard_clusters;
  auto* explain = app.add_subcommand("explain", "Search counterfactual edits for one query");
  explain->add_option("--bundle", ex.bundle, "Bundle directory or manifest")->required();
  explain->add_option("--query", ex.query, "Query image id")->required();
  explain->add_option("--distractor", ex.distractors, "Distractor image id (repeatable)");
  explain->add_option("--distractor-class", ex.distractor_class,
                      "Pick distractors from this class");
  explain->add_option("--num-distractors", ex.num_distractors,
                      "Distractors to pick with --distractor-class");
  explain->add_option("--lambda", ex.lambda, "Semantic term weight")->capture_default_str();
  explain->add_option("--tau", ex.tau, "Softmax temperature")->capture_default_str();
  explain->add_option("--topk", ex.topk, "Prefilter fraction in (0, 1]")->capture_default_str();
  explain->add_option("--mode", ex.mode, "Constraint mode")
      ->check(CLI::IsMember({"soft", "hard", "none"}))
      ->capture_default_str();
  explain->add_option("--normalization", ex.normalization, "Similarity normalization")
      ->check(CLI::IsMember({"pooled", "per_image"}))
      ->capture_default_str();
  explain->add_option("--max-edits", ex.max_edits, "Edit budget (0: one per cell)");
  explain->add_flag("--reuse-cells", ex.reuse_cells, "Allow editing a query cell twice");
  explain->add_option("--hard-clusters", ex.hard_clusters, "Clusters for hard mode")
      ->capture_default_str();
  explain->add_option("--seed", ex.seed, "Seed for clustering and distractor picks");
  explain->add_option("--jobs", ex.jobs, "Scoring threads")->check(CLI::PositiveNumber);
  explain->add_option("--out", ex.out, "Trace output path (stdout when omitted)");

  std::string ev_bundle, ev_traces, ev_scope = "all", ev_out;
  int ev_dilation = 0;
  auto* evaluate = app.add_subcommand("evaluate", "Aggregate metrics over a trace directory");
  evaluate->add_option("--bundle", ev_bundle, "Bundle directory or manifest")->required();
  evaluate->add_option("--traces", ev_traces, "Directory of trace files")->required();
  evaluate->add_option("--scope", ev_scope, "Edits scored per trace")
      ->check(CLI::IsMember({"single", "all"}))
      ->capture_default_str();
  evaluate->add_option("--dilation", ev_dilation, "Keypoint neighbourhood radius in cells")
      ->check(CLI::NonNegativeNumber);
  evaluate->add_option("--out", ev_out, "Report output path (stdout when omitted)");

  std::string ce_bundle, ce_out;
  int ce_k = 0;
  std::uint64_t ce_seed = 0;
  auto* cluster = app.add_subcommand("cluster-eval", "Part purity of embedding clusters");
  cluster->add_option("--bundle", ce_bundle, "Bundle directory or manifest")->required();
  cluster->add_option("--k", ce_k, "Cluster count")->required()->check(CLI::PositiveNumber);
  cluster->add_option("--seed", ce_seed, "K-Means seed");
  cluster->add_option("--out", ce_out, "Output path (stdout when omitted)");

  std::string ae_bundle, ae_trace, ae_out;
  int ae_top = 0;
  auto* attr = app.add_subcommand("attr-explain", "Rank attributes for a trace's first edit");
  attr->add_option("--bundle", ae_bundle, "Bundle directory or manifest")->required();
  attr->add_option("--trace", ae_trace, "Trace file")->required();
  attr->add_option("--topk-attrs", ae_top, "Attributes to keep (0: all)")
      ->check(CLI::NonNegativeNumber);
  attr->add_option("--out", ae_out, "Output trace path (default: rewrite --trace; - for stdout)");

  std::string sp_bundle, sp_method, sp_out;
  auto* pairs = app.add_subcommand("select-pairs", "Choose a distractor class per class");
  pairs->add_option("--bundle", sp_bundle, "Bundle directory or manifest")->required();
  pairs->add_option("--method", sp_method, "Selection rule")
      ->required()
      ->check(CLI::IsMember({"confusion", "attributes"}));
  pairs->add_option("--out", sp_out, "Output path (stdout when omitted)");

  std::string bm_bundle, bm_out;
  int bm_n = 5, bm_edits = 1, bm_repeats = 3, bm_jobs = 1;
  double bm_topk = defaults.k_fraction;
  auto* bench = app.add_subcommand("benchmark", "Count head evaluations and time the search");
  bench->add_option("--bundle", bm_bundle, "Bundle directory or manifest")->required();
  bench->add_option("--n-distractors", bm_n, "Distractor count")->capture_default_str();
  bench->add_option("--topk", bm_topk, "Prefilter fraction")->capture_default_str();
  bench->add_option("--max-edits", bm_edits, "Edits per timed search")->capture_default_str();
  bench->add_option("--repeats", bm_repeats, "Timed repeats (best is kept)")
      ->capture_default_str();
  bench->add_option("--jobs", bm_jobs, "Scoring threads")->check(CLI::PositiveNumber);
  bench->add_option("--out", bm_out, "Output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (explain->parsed()) return RunExplain(ex);

  if (evaluate->parsed()) {
    BundleHandle b;
    if (semcf_status st = b.Open(ev_bundle); st != SEMCF_OK) return Report(st, "evaluate");
    char* json = nullptr;
    const semcf_status st =
        semcf_evaluate(b.get(), ev_traces.c_str(), ev_scope.c_str(), ev_dilation, &json);
    if (st != SEMCF_OK) return Report(st, "evaluate");
    return EmitOwned(json, ev_out);
  }

  if (cluster->parsed()) {
    BundleHandle b;
    if (semcf_status st = b.Open(ce_bundle); st != SEMCF_OK) return Report(st, "cluster-eval");
    char* json = nullptr;
    const semcf_status st = semcf_cluster_eval(b.get(), ce_k, ce_seed, &json);
    if (st != SEMCF_OK) return Report(st, "cluster-eval");
    return EmitOwned(json, ce_out);
  }

  if (attr->parsed()) {
    BundleHandle b;
    if (semcf_status st = b.Open(ae_bundle); st != SEMCF_OK) return Report(st, "attr-explain");
    semcf_trace* trace = nullptr;
    if (semcf_status st = semcf_trace_load(ae_trace.c_str(), &trace); st != SEMCF_OK) {
      return Report(st, "attr-explain");
    }
    semcf_status st = semcf_attr_explain(b.get(), trace, ae_top);
    if (st == SEMCF_OK && ae_out == "-") {
      char* json = nullptr;
      st = semcf_trace_to_json(trace, &json);
      if (st == SEMCF_OK) {
        semcf_trace_free(trace);
        return EmitOwned(json, ae_out);
      }
    } else if (st == SEMCF_OK) {
      st = semcf_trace_save(trace, (ae_out.empty() ? ae_trace : ae_out).c_str());
    }
    semcf_trace_free(trace);
    return Report(st, "attr-explain");
  }

  if (pairs->parsed()) {
    BundleHandle b;
    if (semcf_status st = b.Open(sp_bundle); st != SEMCF_OK) return Report(st, "select-pairs");
    char* json = nullptr;
    const semcf_status st = semcf_select_pairs(b.get(), sp_method.c_str(), &json);
    if (st != SEMCF_OK) return Report(st, "select-pairs");
    return EmitOwned(json, sp_out);
  }

  if (bench->parsed()) {
    BundleHandle b;
    if (semcf_status st = b.Open(bm_bundle); st != SEMCF_OK) return Report(st, "benchmark");
    char* json = nullptr;
    const semcf_status st =
        semcf_benchmark(b.get(), bm_n, bm_topk, bm_edits, bm_repeats, bm_jobs, &json);
    if (st != SEMCF_OK) return Report(st, "benchmark");
    return EmitOwned(json, bm_out);
  }
  return kExitUsage;
}
