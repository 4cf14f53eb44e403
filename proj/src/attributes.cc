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

#include "semcf/attributes.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "semcf/error.h"

namespace semcf {

namespace {

double Norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double Response(const AttributeBank& bank, int t, std::span<const float> pooled) {
  const auto q = bank.row(t);
  double acc = bank.biases[t];
  for (int c = 0; c < bank.dims; ++c) acc += static_cast<double>(q[c]) * pooled[c];
  return acc;
}

}  // namespace

void AttributeBank::Validate() const {
  const std::size_t t = names.size();
  if (dims <= 0) ThrowInvalid("attribute bank needs a positive feature dimension");
  if (weights.size() != t * dims || biases.size() != t || attr_to_part.size() != t) {
    ThrowInvalid("attribute bank arrays disagree on the attribute count");
  }
  for (int p : attr_to_part) {
    if (p < 0) ThrowInvalid("attribute mapped to a negative part id");
  }
}

Matrix DenoiseAttributes(const Matrix& raw) {
  Matrix out(raw.rows, raw.cols);
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    out.values[i] = raw.values[i] > 0.5 ? 1.0 : 0.0;
  }
  return out;
}

std::vector<int> DetectPartsTopK(const PartProbGrid& grid, int cell, int k) {
  if (cell < 0 || cell >= grid.height * grid.width) ThrowInvalid("cell index out of range");
  if (k < 0 || k > grid.num_parts) ThrowInvalid("k exceeds the number of parts");
  const auto probs = grid.cell(cell);
  std::vector<int> ids(grid.num_parts);
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  ids.resize(k);
  return ids;
}

Decomposition IbdDecompose(std::span<const float> class_weight, const AttributeBank& bank,
                           std::span<const int> allowed, int max_terms) {
  bank.Validate();
  if (allowed.empty()) ThrowInvalid("no attributes allowed for the decomposition");
  if (static_cast<int>(class_weight.size()) != bank.dims) {
    ThrowInvalid("class weight and attribute dims differ");
  }
  if (max_terms <= 0) max_terms = static_cast<int>(allowed.size());
  if (max_terms > static_cast<int>(allowed.size())) {
    ThrowInvalid("max_terms exceeds the allowed attribute count");
  }

  // Unit rows of the allowed attributes.
  std::vector<std::vector<double>> unit(allowed.size());
  std::vector<double> norms(allowed.size());
  for (std::size_t a = 0; a < allowed.size(); ++a) {
    const int t = allowed[a];
    if (t < 0 || t >= bank.size()) ThrowInvalid("attribute id out of range");
    const auto q = bank.row(t);
    unit[a].assign(q.begin(), q.end());
    norms[a] = Norm(unit[a]);
    if (norms[a] == 0.0) ThrowInvalid("attribute '" + bank.names[t] + "' has a zero weight row");
    for (double& v : unit[a]) v /= norms[a];
  }

  Decomposition out;
  out.alpha.assign(bank.size(), 0.0);
  std::vector<double> residual(class_weight.begin(), class_weight.end());
  for (int step = 0; step < max_terms; ++step) {
    int best = -1;
    double best_proj = 0.0;
    for (std::size_t a = 0; a < allowed.size(); ++a) {
      double proj = 0.0;
      for (int c = 0; c < bank.dims; ++c) proj += residual[c] * unit[a][c];
      if (proj > best_proj) {
        best_proj = proj;
        best = static_cast<int>(a);
      }
    }
    if (best < 0) break;  // no positive projection left
    out.alpha[allowed[best]] += best_proj / norms[best];
    for (int c = 0; c < bank.dims; ++c) residual[c] -= best_proj * unit[best][c];
    out.picked.push_back(allowed[best]);
    out.residual_history.push_back(Norm(residual));
  }
  out.residual_norm = Norm(residual);
  return out;
}

std::vector<AttributeImportance> RankAttributes(const FeatureGrid& query,
                                                const FeatureGrid& edited,
                                                const DecisionHead& head,
                                                const AttributeBank& bank, int target_class,
                                                const Candidate& best_edit,
                                                const PartProbGrid& query_parts,
                                                const PartProbGrid& distractor_parts,
                                                int parts_per_cell, int max_terms) {
  if (head.kind() != HeadKind::kGapLinear) {
    ThrowInvalid("attribute explanations need a gap_linear head");
  }
  if (target_class < 0 || target_class >= head.num_classes()) {
    ThrowInvalid("target class out of range");
  }
  head.CheckInput(query);
  head.CheckInput(edited);
  for (int i = 0; i < query.cells(); ++i) {
    if (i == best_edit.query_cell) continue;
    const auto a = query.cell(i);
    const auto b = edited.cell(i);
    if (!std::equal(a.begin(), a.end(), b.begin())) {
      ThrowInvalid("edited grid differs from the query outside the best-edit cell");
    }
  }

  std::set<int> parts;
  for (int p : DetectPartsTopK(query_parts, best_edit.query_cell,
                               std::min(parts_per_cell, query_parts.num_parts))) {
    parts.insert(p);
  }
  for (int p : DetectPartsTopK(distractor_parts, best_edit.distractor_cell,
                               std::min(parts_per_cell, distractor_parts.num_parts))) {
    parts.insert(p);
  }
  std::vector<int> allowed;
  for (int t = 0; t < bank.size(); ++t) {
    if (parts.count(bank.attr_to_part[t])) allowed.push_back(t);
  }
  if (allowed.empty()) ThrowInvalid("no attributes belong to the detected parts");

  const Decomposition dec = IbdDecompose(head.layers().front().row(target_class), bank, allowed,
                                         max_terms);
  const std::vector<float> pooled_query = GlobalAveragePool(query);
  const std::vector<float> pooled_edited = GlobalAveragePool(edited);

  std::vector<AttributeImportance> out;
  for (int t : allowed) {
    AttributeImportance imp;
    imp.attribute = t;
    imp.s = dec.alpha[t] * Response(bank, t, pooled_query);
    imp.s_prime = dec.alpha[t] * Response(bank, t, pooled_edited);
    imp.delta = imp.s_prime - imp.s;
    out.push_back(imp);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const AttributeImportance& a, const AttributeImportance& b) {
                     if (a.delta != b.delta) return a.delta > b.delta;
                     return a.attribute < b.attribute;
                   });
  return out;
}

std::vector<int> DiscriminativeAttributes(const Matrix& denoised, int c, int c_prime) {
  if (c < 0 || c >= denoised.rows || c_prime < 0 || c_prime >= denoised.rows) {
    ThrowInvalid("class index out of range");
  }
  std::vector<int> out;
  for (int t = 0; t < denoised.cols; ++t) {
    if ((denoised.at(c, t) > 0.5) != (denoised.at(c_prime, t) > 0.5)) out.push_back(t);
  }
  return out;
}

DiscriminativeScore Top1DiscriminativeAccuracy(std::span<const DiscriminativeCase> cases) {
  DiscriminativeScore score;
  int hits = 0;
  for (const auto& c : cases) {
    if (c.ground_truth.empty()) {
      ++score.skipped;
      continue;
    }
    ++score.evaluated;
    hits += std::find(c.ground_truth.begin(), c.ground_truth.end(), c.top1_attribute) !=
            c.ground_truth.end();
  }
  if (score.evaluated == 0) ThrowInvalid("no case has a non-empty ground-truth set");
  score.accuracy = static_cast<double>(hits) / score.evaluated;
  return score;
}

}  // namespace semcf
