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

#include "semcf/semantic.h"

#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "semcf/error.h"
#include "semcf/metrics.h"
#include "test_util.h"

namespace semcf {
namespace {

using testing::Rng;

TEST(SimilarityTableTest, UniformForIdenticalRows) {
  const GridShape s{2, 2, 2};
  std::vector<float> data;
  for (int i = 0; i < 4; ++i) data.insert(data.end(), {0.6f, 0.8f});
  const EmbeddingGrid e(s, data);
  const std::vector<EmbeddingGrid> d{e};
  const SimilarityTable t = BuildSimilarityTable(e, d);
  for (double v : t.likelihood.values) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(SimilarityTableTest, OneHotClosedForm) {
  const GridShape s{1, 2, 2};
  const EmbeddingGrid e(s, {1, 0, 0, 1});
  const std::vector<EmbeddingGrid> d{e};
  const SimilarityTable t = BuildSimilarityTable(e, d, 0.1);
  const double e10 = std::exp(10.0);
  EXPECT_NEAR(t.at({0, 0, 0}), e10 / (e10 + 1), 1e-12);
  EXPECT_NEAR(t.at({0, 0, 0}), 0.9999546, 1e-7);
  EXPECT_NEAR(t.at({1, 0, 1}), e10 / (e10 + 1), 1e-12);
  EXPECT_NEAR(t.at({1, 0, 0}), 1 / (e10 + 1), 1e-12);
}

TEST(SimilarityTableTest, Defaults) {
  EXPECT_EQ(kDefaultTemperature, 0.1);
  EXPECT_EQ(kDefaultTopKFraction, 0.10);
}

TEST(SimilarityTableTest, RowsSumToOne) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const GridShape s{rng.Int(1, 4), rng.Int(1, 4), rng.Int(2, 9)};
    const int n = rng.Int(1, 3);
    const EmbeddingGrid q = testing::RandomEmbedding(rng, s);
    std::vector<EmbeddingGrid> d;
    for (int m = 0; m < n; ++m) d.push_back(testing::RandomEmbedding(rng, s));
    const double tau = rng.Uniform(0.01, 2.0);
    for (Normalization norm : {Normalization::kPooled, Normalization::kPerImage}) {
      const SimilarityTable t = BuildSimilarityTable(q, d, tau, norm);
      const int block = norm == Normalization::kPooled ? n * s.cells() : s.cells();
      for (int i = 0; i < s.cells(); ++i) {
        for (int start = 0; start < n * s.cells(); start += block) {
          double sum = 0.0;
          for (int c = start; c < start + block; ++c) {
            const double v = t.likelihood.at(i, c);
            EXPECT_GE(v, 0.0);
            sum += v;
          }
          EXPECT_NEAR(sum, 1.0, 1e-6);
        }
      }
    }
  }
}

TEST(SimilarityTableTest, MatchesClosedFormReference) {
  Rng rng(22);
  const GridShape s{2, 3, 5};
  const EmbeddingGrid q = testing::RandomEmbedding(rng, s);
  const std::vector<EmbeddingGrid> d{testing::RandomEmbedding(rng, s),
                                     testing::RandomEmbedding(rng, s)};
  const SimilarityTable t = BuildSimilarityTable(q, d, 0.1);
  for (int i = 0; i < 6; ++i) {
    std::vector<double> num;
    double z = 0.0;
    for (int m = 0; m < 2; ++m) {
      for (int j = 0; j < 6; ++j) {
        double dot = 0.0;
        for (int c = 0; c < 5; ++c) dot += static_cast<double>(q.cell(i)[c]) * d[m].cell(j)[c];
        num.push_back(std::exp(dot / 0.1));
        z += num.back();
      }
    }
    for (int col = 0; col < 12; ++col) EXPECT_NEAR(t.likelihood.at(i, col), num[col] / z, 1e-12);
  }
}

TEST(SimilarityTableTest, TemperatureLimits) {
  Rng rng(23);
  const GridShape s{3, 3, 8};
  const EmbeddingGrid q = testing::RandomEmbedding(rng, s);
  const std::vector<EmbeddingGrid> d{testing::RandomEmbedding(rng, s)};
  // Large tau: near uniform. The residual is bounded by the dot spread / tau.
  const SimilarityTable hot = BuildSimilarityTable(q, d, 1000.0);
  for (double v : hot.likelihood.values) EXPECT_NEAR(v, 1.0 / 9, 1e-3);
  const SimilarityTable cold = BuildSimilarityTable(q, d, 1e-3);
  const Matrix dots = PairwiseDot(q, d);
  for (int i = 0; i < 9; ++i) {
    int best = 0;
    for (int j = 1; j < 9; ++j) best = dots.at(i, j) > dots.at(i, best) ? j : best;
    EXPECT_NEAR(cold.likelihood.at(i, best), 1.0, 1e-3);
  }
  const SimilarityTable ten = BuildSimilarityTable(q, d, 10.0);
  for (double v : ten.likelihood.values) EXPECT_NEAR(v, 1.0 / 9, 0.03);
}

TEST(SimilarityTableTest, RejectsBadInput) {
  Rng rng(24);
  const EmbeddingGrid q = testing::RandomEmbedding(rng, {2, 2, 3});
  const std::vector<EmbeddingGrid> none;
  EXPECT_THROW(BuildSimilarityTable(q, none), Error);
  const std::vector<EmbeddingGrid> d{q};
  EXPECT_THROW(BuildSimilarityTable(q, d, 0.0), Error);
  const std::vector<EmbeddingGrid> wrong{testing::RandomEmbedding(rng, {2, 2, 4})};
  EXPECT_THROW(BuildSimilarityTable(q, wrong), Error);
}

TEST(PrefilterTest, Count) {
  EXPECT_EQ(PrefilterCount(0.1, 49 * 245), 1201);
  EXPECT_EQ(PrefilterCount(1.0, 49 * 245), 12005);
  EXPECT_EQ(PrefilterCount(0.1, 10), 1);
  EXPECT_EQ(PrefilterCount(0.3, 10), 3);
  EXPECT_EQ(PrefilterCount(0.25, 10), 3);
  EXPECT_EQ(PrefilterCount(1e-9, 10), 1);
  EXPECT_THROW(PrefilterCount(0.0, 10), Error);
  EXPECT_THROW(PrefilterCount(1.5, 10), Error);
}

TEST(PrefilterTest, UniformTableKeepsEverythingInOrder) {
  const GridShape s{2, 2, 2};
  std::vector<float> data;
  for (int i = 0; i < 4; ++i) data.insert(data.end(), {1.0f, 0.0f});
  const EmbeddingGrid e(s, data);
  const std::vector<EmbeddingGrid> d{e, e};
  const SimilarityTable t = BuildSimilarityTable(e, d);
  EXPECT_EQ(PrefilterTopK(t, 1.0), AllCandidates(4, 2, 4));
}

TEST(PrefilterTest, DominantEntry) {
  const GridShape s{1, 2, 2};
  const EmbeddingGrid q(s, {1, 0, 1, 0});
  const EmbeddingGrid d0(s, {0, 1, 1, 0});
  const std::vector<EmbeddingGrid> d{d0};
  const SimilarityTable t = BuildSimilarityTable(q, d, 0.1, Normalization::kPerImage);
  // Both query rows favour distractor cell 1 equally; the earlier row wins.
  const auto top = PrefilterTopK(t, 0.25);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0], (Candidate{0, 0, 1}));
}

TEST(PrefilterTest, TopKIsGlobalSubsetOfSize) {
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const GridShape s{rng.Int(1, 4), rng.Int(1, 4), 6};
    const int n = rng.Int(1, 3);
    const EmbeddingGrid q = testing::RandomEmbedding(rng, s);
    std::vector<EmbeddingGrid> d;
    for (int m = 0; m < n; ++m) d.push_back(testing::RandomEmbedding(rng, s));
    const SimilarityTable t = BuildSimilarityTable(q, d);
    const double k = rng.Uniform(0.01, 1.0);
    const auto top = PrefilterTopK(t, k);
    ASSERT_EQ(static_cast<std::int64_t>(top.size()), PrefilterCount(k, t.num_pairs()));
    EXPECT_TRUE(std::is_sorted(top.begin(), top.end()));
    // Reference: full sort by (likelihood desc, index asc).
    auto all = AllCandidates(s.cells(), n, s.cells());
    std::stable_sort(all.begin(), all.end(),
                     [&](const Candidate& a, const Candidate& b) { return t.at(a) > t.at(b); });
    all.resize(top.size());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(top, all);
  }
}

TEST(KMeansTest, InertiaZeroWhenKEqualsDistinctPoints) {
  Matrix p(4, 2);
  p.values = {0, 0, 1, 0, 0, 1, 1, 1};
  const ClusterAssignment a = KMeansCells(p, 4, 3);
  EXPECT_EQ(a.inertia, 0.0);
  EXPECT_EQ(std::set<int>(a.labels.begin(), a.labels.end()).size(), 4u);
}

Matrix Blobs(Rng& rng, int per_blob, std::vector<int>* membership) {
  // Three vertices of a unit-side equilateral triangle.
  const double centers[3][2] = {{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2}};
  Matrix p(3 * per_blob, 2);
  for (int b = 0; b < 3; ++b) {
    for (int k = 0; k < per_blob; ++k) {
      const int r = b * per_blob + k;
      p.at(r, 0) = centers[b][0] + 0.01 * rng.Normal();
      p.at(r, 1) = centers[b][1] + 0.01 * rng.Normal();
      membership->push_back(b);
    }
  }
  return p;
}

TEST(KMeansTest, RecoversBlobs) {
  Rng rng(26);
  std::vector<int> truth;
  const Matrix p = Blobs(rng, 100, &truth);
  for (std::uint64_t seed : {0ull, 1ull, 7ull, 99ull}) {
    const ClusterAssignment a = KMeansCells(p, 3, seed);
    // Same partition up to relabeling.
    for (int i = 0; i < p.rows; ++i) {
      for (int j = i + 1; j < p.rows; j += 17) {
        EXPECT_EQ(truth[i] == truth[j], a.labels[i] == a.labels[j]);
      }
    }
  }
}

TEST(KMeansTest, DeterministicAndMonotone) {
  Rng rng(27);
  Matrix p(200, 5);
  for (auto& v : p.values) v = rng.Normal();
  const ClusterAssignment a = KMeansCells(p, 8, 42);
  const ClusterAssignment b = KMeansCells(p, 8, 42);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centers.values, b.centers.values);
  EXPECT_EQ(a.inertia_history, b.inertia_history);
  for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
    EXPECT_LE(a.inertia_history[i], a.inertia_history[i - 1]);
  }
  EXPECT_LE(a.iterations, KMeansOptions{}.max_iterations);
}

TEST(KMeansTest, EmptyClusterReseeded) {
  // Many duplicates force empty clusters during seeding or updates.
  Matrix p(10, 1);
  p.values = {0, 0, 0, 0, 0, 0, 0, 0, 5, 10};
  const ClusterAssignment a = KMeansCells(p, 3, 1);
  EXPECT_EQ(std::set<int>(a.labels.begin(), a.labels.end()).size(), 3u);
  EXPECT_EQ(a.inertia, 0.0);
}

TEST(KMeansTest, EvaluationSettingsSupported) {
  Rng rng(28);
  const GridShape s{7, 7, 8};
  std::vector<EmbeddingGrid> grids;
  std::vector<std::string> ids;
  for (int m = 0; m < 6; ++m) {
    grids.push_back(testing::RandomEmbedding(rng, s));
    ids.push_back("img" + std::to_string(m));
  }
  for (int k : {15, 50, 250}) {
    const ClusterAssignment a = ClusterImageCells(grids, ids, k, 0);
    EXPECT_EQ(a.k, k);
    EXPECT_EQ(a.labels.size(), 294u);
    EXPECT_EQ(a.ImageLabels("img3").size(), 49u);
  }
  EXPECT_THROW(ClusterImageCells(grids, ids, 295, 0), Error);
  EXPECT_THROW(ClusterImageCells(grids, ids, 0, 0), Error);
}

ClusterAssignment Labels(std::vector<int> labels, int hw, std::vector<std::string> ids) {
  ClusterAssignment a;
  a.labels = std::move(labels);
  a.cells_per_image = hw;
  a.image_ids = std::move(ids);
  return a;
}

TEST(HardConstraintTest, HandEnumerated) {
  const auto a = Labels({0, 1, 1, 0}, 2, {"q", "d"});
  const std::vector<std::string> d{"d"};
  const auto c = HardConstraintCandidates(a, "q", d);
  EXPECT_EQ(c, (std::vector<Candidate>{{0, 0, 1}, {1, 0, 0}}));
}

TEST(HardConstraintTest, SingleClusterGivesEverything) {
  const auto a = Labels(std::vector<int>(12, 0), 4, {"q", "a", "b"});
  const std::vector<std::string> d{"a", "b"};
  EXPECT_EQ(HardConstraintCandidates(a, "q", d), AllCandidates(4, 2, 4));
}

TEST(HardConstraintTest, DisjointIsEmpty) {
  const auto a = Labels({0, 1, 2, 3}, 2, {"q", "d"});
  const std::vector<std::string> d{"d"};
  EXPECT_TRUE(HardConstraintCandidates(a, "q", d).empty());
  const std::vector<std::string> unknown{"x"};
  EXPECT_THROW(HardConstraintCandidates(a, "q", unknown), Error);
}

}  // namespace
}  // namespace semcf
