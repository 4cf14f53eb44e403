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

#include "semcf/search.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semcf/error.h"

namespace semcf {

namespace {

bool IsBlocked(const std::vector<bool>& blocked, int cell) {
  return !blocked.empty() && blocked[cell];
}

void CheckCaseShapes(const DecisionHead& head, const SearchCase& c) {
  head.CheckInput(c.query_features);
  const std::size_t n = c.distractor_features.size();
  if (n == 0) ThrowInvalid("search needs at least one distractor");
  if (c.distractor_ids.size() != n || c.distractor_embeddings.size() != n) {
    ThrowInvalid("distractor ids, features and embeddings differ in length");
  }
  for (const auto& g : c.distractor_features) head.CheckInput(g);
  for (const auto& e : c.distractor_embeddings) {
    if (e.shape() != c.query_embedding.shape()) {
      ThrowInvalid("distractor embedding shape differs from the query");
    }
  }
  if (!c.query_embedding.shape().SameCells(c.query_features.shape())) {
    ThrowInvalid("embedding grid dims differ from the feature grid");
  }
  if (c.target_class < 0 || c.target_class >= head.num_classes()) {
    ThrowInvalid("target class out of range");
  }
}

}  // namespace

std::string_view ConstraintModeName(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::kSoft:
      return "soft";
    case ConstraintMode::kHard:
      return "hard";
    case ConstraintMode::kNone:
      return "none";
  }
  return "unknown";
}

ConstraintMode ParseConstraintMode(std::string_view name) {
  if (name == "soft") return ConstraintMode::kSoft;
  if (name == "hard") return ConstraintMode::kHard;
  if (name == "none") return ConstraintMode::kNone;
  ThrowInvalid("unknown constraint mode '" + std::string(name) + "'");
}

void SearchConfig::Validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) ThrowInvalid("lambda must be >= 0");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    ThrowInvalid("temperature must be > 0");
  }
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) ThrowInvalid("topk must be in (0, 1]");
  if (hard_clusters < 1) ThrowInvalid("hard-mode cluster count must be >= 1");
}

double CombinedScore(double class_prob, std::optional<double> likelihood, double lambda) {
  double score = std::log(std::max(class_prob, kProbabilityFloor));
  if (likelihood) score += lambda * std::log(std::max(*likelihood, kProbabilityFloor));
  return score;
}

std::vector<Candidate> CandidatePool(const SimilarityTable* table, int query_cells,
                                     int num_images, const SearchConfig& config) {
  switch (config.mode) {
    case ConstraintMode::kSoft:
      if (table == nullptr) ThrowInvalid("soft mode needs a similarity table");
      return PrefilterTopK(*table, config.k_fraction);
    case ConstraintMode::kNone:
      return AllCandidates(query_cells, num_images, query_cells);
    case ConstraintMode::kHard:
      break;
  }
  ThrowInvalid("hard-mode candidates come from HardConstraintCandidates");
}

Edit SingleBestEdit(const DecisionHead& head, const FeatureGrid& query_grid,
                    std::span<const FeatureGrid> distractor_grids, const SimilarityTable* table,
                    std::span<const Candidate> pool, const SearchConfig& config,
                    int target_class, const std::vector<bool>& blocked, SearchStats* stats) {
  const bool semantic = config.mode == ConstraintMode::kSoft;
  if (semantic && table == nullptr) ThrowInvalid("soft mode needs a similarity table");

  std::vector<Candidate> survivors;
  survivors.reserve(pool.size());
  for (const Candidate& c : pool) {
    if (!IsBlocked(blocked, c.query_cell)) survivors.push_back(c);
  }
  if (survivors.empty()) {
    throw Error(ErrorCode::kSearchFailed, "no candidate edits left after filtering");
  }

  const std::vector<double> probs =
      ScoreCandidates(head, query_grid, distractor_grids, survivors, target_class, config.jobs);
  if (stats != nullptr) {
    stats->head_evaluations += static_cast<std::int64_t>(survivors.size());
    stats->candidates_per_edit.push_back(static_cast<std::int64_t>(survivors.size()));
  }

  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    const std::optional<double> lik =
        semantic ? std::optional<double>(table->at(survivors[k])) : std::nullopt;
    const double score = CombinedScore(probs[k], lik, config.lambda);
    // Strict comparison keeps the lexicographically first maximum.
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  Edit edit;
  edit.candidate = survivors[best];
  edit.class_prob_after = probs[best];
  if (semantic) edit.semantic_likelihood = table->at(survivors[best]);
  edit.combined_score = best_score;
  return edit;
}

Edit SingleBestEdit(const DecisionHead& head, const FeatureGrid& query_grid,
                    std::span<const FeatureGrid> distractor_grids, const SimilarityTable& table,
                    const SearchConfig& config, int target_class,
                    const std::vector<bool>& blocked) {
  const std::vector<Candidate> pool =
      CandidatePool(&table, table.query_cells, table.num_images, config);
  return SingleBestEdit(head, query_grid, distractor_grids, &table, pool, config, target_class,
                        blocked);
}

Edit OracleBestEdit(const DecisionHead& head, const FeatureGrid& query_grid,
                    std::span<const FeatureGrid> distractor_grids,
                    const EmbeddingGrid& query_embedding,
                    std::span<const EmbeddingGrid> distractor_embeddings,
                    const SearchConfig& config, int target_class,
                    const std::vector<bool>& blocked) {
  if (config.mode == ConstraintMode::kHard) ThrowInvalid("the oracle does not model hard mode");
  const bool semantic = config.mode == ConstraintMode::kSoft;
  const int hw = query_grid.cells();
  const int n = static_cast<int>(distractor_grids.size());
  const int d = query_embedding.channels();

  auto dot = [&](int i, int m, int j) {
    double acc = 0.0;
    for (int c = 0; c < d; ++c) {
      acc += static_cast<double>(query_embedding.cell(i)[c]) * distractor_embeddings[m].cell(j)[c];
    }
    return acc;
  };

  Edit best;
  bool found = false;
  for (int i = 0; i < hw; ++i) {
    if (IsBlocked(blocked, i)) continue;
    // Likelihood denominators for this query cell, straight from the
    // definition.
    std::vector<double> denom(n, 0.0);
    double pooled = 0.0;
    if (semantic) {
      for (int m = 0; m < n; ++m) {
        for (int j = 0; j < hw; ++j) denom[m] += std::exp(dot(i, m, j) / config.temperature);
        pooled += denom[m];
      }
    }
    for (int m = 0; m < n; ++m) {
      for (int j = 0; j < hw; ++j) {
        const Candidate cand{i, m, j};
        const FeatureGrid edited = ApplyEdit(query_grid, distractor_grids, cand);
        const double prob = head.Forward(edited)[target_class];
        std::optional<double> lik;
        if (semantic) {
          const double num = std::exp(dot(i, m, j) / config.temperature);
          lik = num / (config.normalization == Normalization::kPooled ? pooled : denom[m]);
        }
        const double score = CombinedScore(prob, lik, config.lambda);
        if (!found || score > best.combined_score) {
          found = true;
          best.candidate = cand;
          best.class_prob_after = prob;
          best.semantic_likelihood = lik;
          best.combined_score = score;
        }
      }
    }
  }
  if (!found) throw Error(ErrorCode::kSearchFailed, "no candidate edits left after filtering");
  return best;
}

EditTrace FindCounterfactual(const DecisionHead& head, const SearchCase& search_case,
                             const SearchConfig& config) {
  config.Validate();
  CheckCaseShapes(head, search_case);

  const int hw = search_case.query_features.cells();
  const int n = static_cast<int>(search_case.distractor_features.size());
  const int max_edits = config.max_edits > 0 ? config.max_edits : hw;

  EditTrace trace;
  trace.query_id = search_case.query_id;
  trace.target_class = search_case.target_class;
  trace.distractor_ids = search_case.distractor_ids;

  FeatureGrid working = search_case.query_features;
  ProbVector probs = head.Forward(working);
  trace.stats.head_evaluations = 1;
  trace.query_class = probs.ArgMax();
  if (trace.query_class == search_case.target_class) {
    trace.success = true;
    trace.final_probs = std::move(probs);
    return trace;
  }

  std::optional<SimilarityTable> table;
  std::vector<Candidate> pool;
  switch (config.mode) {
    case ConstraintMode::kSoft:
      table = BuildSimilarityTable(search_case.query_embedding,
                                   search_case.distractor_embeddings, config.temperature,
                                   config.normalization);
      trace.stats.dot_products = table->num_pairs();
      pool = PrefilterTopK(*table, config.k_fraction);
      break;
    case ConstraintMode::kNone:
      pool = AllCandidates(hw, n, hw);
      break;
    case ConstraintMode::kHard: {
      if (search_case.clusters != nullptr) {
        pool = HardConstraintCandidates(*search_case.clusters, search_case.query_id,
                                        search_case.distractor_ids);
      } else {
        std::vector<EmbeddingGrid> grids{search_case.query_embedding};
        grids.insert(grids.end(), search_case.distractor_embeddings.begin(),
                     search_case.distractor_embeddings.end());
        std::vector<std::string> ids{search_case.query_id};
        ids.insert(ids.end(), search_case.distractor_ids.begin(),
                   search_case.distractor_ids.end());
        const int k = std::min(config.hard_clusters, static_cast<int>(grids.size()) * hw);
        const ClusterAssignment clusters = ClusterImageCells(grids, ids, k, config.seed);
        pool = HardConstraintCandidates(clusters, search_case.query_id,
                                        search_case.distractor_ids);
      }
      break;
    }
  }

  std::vector<bool> blocked(hw, false);
  const SimilarityTable* table_ptr = table ? &*table : nullptr;
  while (static_cast<int>(trace.edits.size()) < max_edits) {
    Edit edit;
    try {
      edit = SingleBestEdit(head, working, search_case.distractor_features, table_ptr, pool,
                            config, search_case.target_class, blocked, &trace.stats);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSearchFailed) throw;
      break;  // pool exhausted
    }
    working = ApplyEdit(working, search_case.distractor_features, edit.candidate);
    if (!config.reuse_cells) blocked[edit.candidate.query_cell] = true;
    trace.edits.push_back(edit);

    probs = head.Forward(working);
    ++trace.stats.head_evaluations;
    if (probs.ArgMax() == search_case.target_class) {
      trace.success = true;
      break;
    }
  }
  trace.final_probs = std::move(probs);
  return trace;
}

}  // namespace semcf
