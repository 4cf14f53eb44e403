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

#include "fixtures.h"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "semcf/engine.h"
#include "semcf/trace_io.h"
#include "test_util.h"

namespace semcf::fixtures {

namespace fs = std::filesystem;

namespace {

DecisionHead GapHead(GridShape s, std::vector<float> w, std::vector<float> b,
                     std::vector<std::string> classes) {
  DenseLayer l;
  l.outputs = static_cast<int>(b.size());
  l.inputs = s.channels;
  l.weights = std::move(w);
  l.bias = std::move(b);
  return DecisionHead(HeadKind::kGapLinear, s, {l}, std::move(classes));
}

ImageRecord Image(std::string id, int cls, FeatureGrid f, EmbeddingGrid e) {
  ImageRecord r;
  r.id = std::move(id);
  r.class_index = cls;
  r.features = std::move(f);
  r.embedding = std::move(e);
  return r;
}

KeypointSet Points(const std::string& id, int size, std::vector<Keypoint> pts) {
  return KeypointSet{id, size, size, std::move(pts)};
}

std::vector<bool> Mask(std::initializer_list<int> bits) {
  std::vector<bool> m;
  for (int b : bits) m.push_back(b != 0);
  return m;
}

EditTrace HandTrace(const std::string& query, std::vector<std::string> distractors,
                    std::vector<Candidate> cands, bool success) {
  EditTrace t;
  t.query_id = query;
  t.query_class = cands.empty() && success ? 1 : 0;
  t.target_class = 1;
  t.distractor_ids = std::move(distractors);
  for (const Candidate& c : cands) {
    Edit e;
    e.candidate = c;
    e.class_prob_after = 0.5;
    e.semantic_likelihood = 0.25;
    e.combined_score = std::log(0.5) + 0.4 * std::log(0.25);
    t.edits.push_back(e);
  }
  t.success = success;
  t.final_probs = success ? ProbVector({0.25, 0.75}) : ProbVector({0.75, 0.25});
  t.stats.head_evaluations = 1;
  for (std::size_t k = 0; k < t.edits.size(); ++k) {
    t.stats.candidates_per_edit.push_back(2);
    t.stats.head_evaluations += 3;
  }
  t.stats.dot_products = cands.empty() ? 0 : 16;
  return t;
}

std::vector<TraceDocument> GoldenTraces() {
  // Cell layout on the 2x2 grid: 0 = top-left, 1 = top-right,
  // 2 = bottom-left, 3 = bottom-right.
  std::vector<EditTrace> traces{
      HandTrace("q1", {"d1"}, {{0, 0, 0}}, true),
      HandTrace("q1", {"d1", "d2"}, {{2, 1, 0}, {1, 0, 1}}, true),
      HandTrace("q2", {"d2"}, {{3, 0, 0}, {0, 0, 3}, {1, 0, 1}}, false),
      HandTrace("q3", {"d1"}, {}, true),
      HandTrace("q3", {"d1"}, {{2, 0, 0}, {3, 0, 1}}, true),
  };
  std::vector<TraceDocument> docs;
  for (auto& t : traces) {
    TraceDocument doc;
    doc.trace = std::move(t);
    docs.push_back(std::move(doc));
  }
  return docs;
}

void WriteText(const fs::path& path, const std::string& text) { WriteTextFile(path, text); }

}  // namespace

Bundle MinimalBundle() {
  const GridShape s{2, 2, 4};
  Bundle b;
  b.feature_shape = s;
  b.embedding_channels = 3;
  b.class_names = {"alpha", "beta"};
  b.head = GapHead(s, {1, 0, 0, 0, 0, 1, 0, 0}, {0.0f, 0.5f}, b.class_names);
  std::vector<float> f(s.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<float>(i % 5) * 0.25f;
  std::vector<float> e;
  for (int i = 0; i < 4; ++i) e.insert(e.end(), {1.0f, 0.0f, 0.0f});
  b.images.push_back(Image("img0", 0, FeatureGrid(s, f), EmbeddingGrid({2, 2, 3}, e)));
  return b;
}

Bundle GoldenBundle() {
  const GridShape s{2, 2, 2};
  Bundle b;
  b.feature_shape = s;
  b.embedding_channels = 2;
  b.class_names = {"class_a", "class_b"};
  b.part_names = {"head", "wing", "tail"};
  b.part_aliases = {{"left_wing", "wing"}, {"right_wing", "wing"}};
  b.head = GapHead(s, {0, 0, 0, 0}, {0.0f, 0.0f}, b.class_names);
  const FeatureGrid zeros = FeatureGrid::Zeros(s);
  const EmbeddingGrid flat({2, 2, 2}, {1, 0, 1, 0, 1, 0, 1, 0});
  // 64 x 64 images: 32-pixel cells.
  struct Spec {
    const char* id;
    int cls;
    std::vector<Keypoint> points;
    std::vector<bool> mask;
  };
  const std::vector<Spec> specs{
      {"q1", 0, {{0, 10, 10, true}, {1, 40, 10, true}}, Mask({1, 1, 0, 0})},
      {"q2", 0, {{2, 50, 50, true}, {0, 5, 5, false}}, Mask({0, 0, 1, 1})},
      {"q3", 0, {{0, 5, 40, true}, {1, 40, 40, true}}, Mask({1, 0, 1, 1})},
      {"d1", 1, {{0, 20, 20, true}, {1, 60, 5, true}}, Mask({1, 1, 1, 1})},
      {"d2", 1, {{2, 5, 5, true}}, Mask({1, 0, 0, 0})},
  };
  for (const Spec& sp : specs) {
    ImageRecord r = Image(sp.id, sp.cls, zeros, flat);
    r.keypoints = Points(sp.id, 64, sp.points);
    r.mask = sp.mask;
    b.images.push_back(std::move(r));
  }
  return b;
}

Bundle PlantedBundle() {
  const GridShape s{2, 2, 2};
  Bundle b;
  b.feature_shape = s;
  b.embedding_channels = 2;
  b.class_names = {"class_a", "class_b"};
  b.part_names = {"head", "tail"};
  // Channel 0 is evidence for class_b.
  b.head = GapHead(s, {0, 0, 1, 0}, {0.1f, 0.0f}, b.class_names);

  const float r = 0.70710677f;
  const std::vector<float> h{1, 0}, t{0, 1}, bg{r, r};
  auto emb = [&](std::vector<std::vector<float>> rows) {
    std::vector<float> out;
    for (auto& row : rows) out.insert(out.end(), row.begin(), row.end());
    return EmbeddingGrid({2, 2, 2}, out);
  };
  auto feat = [&](std::vector<float> ch0) {
    std::vector<float> out;
    for (float v : ch0) out.insert(out.end(), {v, 0.0f});
    return FeatureGrid(s, out);
  };
  auto add = [&](const char* id, int cls, FeatureGrid f, EmbeddingGrid e, int head_cell,
                 int tail_cell) {
    ImageRecord rec = Image(id, cls, std::move(f), std::move(e));
    auto center = [](int cell) {
      return std::pair<double, double>{16.0 + 32.0 * (cell % 2), 16.0 + 32.0 * (cell / 2)};
    };
    const auto [hx, hy] = center(head_cell);
    const auto [tx, ty] = center(tail_cell);
    rec.keypoints = Points(id, 64, {{0, hx, hy, true}, {1, tx, ty, true}});
    b.images.push_back(std::move(rec));
  };
  // Removing the query head (-0.5) helps most, and the distractor tail is the
  // strongest evidence: the class-only optimum is head <- tail.
  add("q_mis1", 0, feat({-0.5f, 0, 0, 0}), emb({h, t, bg, bg}), 0, 1);
  add("q_mis2", 0, feat({0, 0, -0.5f, 0}), emb({bg, bg, h, t}), 2, 3);
  add("q_benign", 0, feat({-0.5f, 0, 0, 0}), emb({h, t, bg, bg}), 0, 1);
  add("d_mis", 1, feat({1, 3, 0, 0}), emb({h, t, bg, bg}), 0, 1);
  // Here the head is also the strongest evidence, so both objectives agree.
  add("d_benign", 1, feat({3, 1, 0, 0}), emb({h, t, bg, bg}), 0, 1);
  return b;
}

Bundle ToyBundle() {
  testing::Rng rng(20260101);
  const GridShape s{3, 3, 8};
  const GridShape es{3, 3, 4};
  Bundle b;
  b.feature_shape = s;
  b.embedding_channels = es.channels;
  b.class_names = {"cardinal", "jay", "wren"};
  b.part_names = {"head", "wing", "tail"};
  b.part_aliases = {{"left_wing", "wing"}, {"right_wing", "wing"}};
  b.head = testing::RandomGapHead(rng, s, 3, 2.0);
  b.head = DecisionHead(HeadKind::kGapLinear, s, b.head.layers(), b.class_names);
  for (int i = 0; i < 9; ++i) {
    const std::string id = "img_0" + std::to_string(i);
    ImageRecord r = Image(id, i % 3, testing::RandomFeatures(rng, s),
                          testing::RandomEmbedding(rng, es));
    KeypointSet kp{id, 96, 96, {}};
    for (int p = 0; p < 3; ++p) {
      kp.points.push_back({p, std::floor(rng.Uniform(0, 96)), std::floor(rng.Uniform(0, 96)),
                           rng.Uniform() < 0.9});
    }
    r.keypoints = kp;
    std::vector<bool> mask(9);
    for (int c = 0; c < 9; ++c) mask[c] = rng.Uniform() < 0.6;
    r.mask = mask;
    PartProbGrid pp{3, 3, 3, rng.Floats(27, 0.0, 1.0)};
    r.part_probs = pp;
    b.images.push_back(std::move(r));
  }
  AttributeBank bank;
  bank.dims = s.channels;
  bank.names = {"head_red", "head_black", "wing_barred", "wing_plain", "tail_long", "tail_short"};
  bank.attr_to_part = {0, 0, 1, 1, 2, 2};
  bank.weights = rng.Floats(6 * 8);
  bank.biases = rng.Floats(6, -0.1, 0.1);
  b.attributes = bank;
  Matrix ca(3, 6);
  for (auto& v : ca.values) v = std::round(rng.Uniform() * 8.0) / 8.0;
  b.class_attributes = ca;
  b.confusion = ConfusionMatrix{3, {40, 6, 2, 3, 38, 9, 5, 1, 44}};
  return b;
}

Bundle BenchmarkBundle() {
  testing::Rng rng(5);
  const GridShape s{7, 7, 64};
  Bundle b;
  b.feature_shape = s;
  b.embedding_channels = 32;
  for (int c = 0; c < 200; ++c) {
    char name[16];
    std::snprintf(name, sizeof(name), "class_%03d", c);
    b.class_names.push_back(name);
  }
  DenseLayer l;
  l.outputs = 200;
  l.inputs = 64;
  l.weights = rng.Floats(200 * 64, -0.1, 0.1);
  l.bias.assign(200, 0.0f);
  // Keeps the query on class_000 for the single timed edit.
  l.bias[0] = 5.0f;
  b.head = DecisionHead(HeadKind::kGapLinear, s, {l}, b.class_names);
  for (int i = 0; i < 6; ++i) {
    const std::string id = i == 0 ? "query" : "distractor_" + std::to_string(i);
    b.images.push_back(Image(id, i == 0 ? 0 : 1, testing::RandomFeatures(rng, s),
                             testing::RandomEmbedding(rng, {7, 7, 32})));
  }
  return b;
}

void WriteAll(const fs::path& root) {
  WriteBundle(MinimalBundle(), root / "minimal");

  // Same bundle with the feature blob cut short by one float.
  const fs::path corrupted = root / "corrupted";
  WriteBundle(MinimalBundle(), corrupted);
  const fs::path blob = corrupted / "features" / "img0.f32";
  fs::resize_file(blob, fs::file_size(blob) - 4);

  const fs::path golden = root / "golden";
  WriteBundle(GoldenBundle(), golden);
  const auto docs = GoldenTraces();
  for (std::size_t k = 0; k < docs.size(); ++k) {
    SaveTrace(docs[k], golden / "traces" / ("case_" + std::to_string(k + 1) + ".json"));
  }
  // Reports come from the loaded bundle, exactly as the CLI computes them.
  const Bundle loaded = LoadBundle(golden);
  const auto traces = LoadTraceDirectory(golden / "traces");
  WriteText(golden / "report_all.json",
            ReportToJson(Evaluate(loaded, traces, MetricScope::kAllEdits)));
  WriteText(golden / "report_single.json",
            ReportToJson(Evaluate(loaded, traces, MetricScope::kSingleEdit)));

  WriteBundle(PlantedBundle(), root / "planted");
  WriteBundle(ToyBundle(), root / "toy");
  WriteBundle(BenchmarkBundle(), root / "benchmark");
}

}  // namespace semcf::fixtures
