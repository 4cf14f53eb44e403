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

#include "semcf/tensor.h"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "semcf/error.h"
#include "test_util.h"

namespace semcf {
namespace {

using testing::Rng;

TEST(GlobalAveragePoolTest, ConstantGrid) {
  const GridShape s{7, 7, 4};
  const FeatureGrid g(s, std::vector<float>(s.size(), 1.0f));
  EXPECT_EQ(GlobalAveragePool(g), (std::vector<float>{1, 1, 1, 1}));
}

TEST(GlobalAveragePoolTest, TwoCellMean) {
  const FeatureGrid g({2, 1, 1}, {2.0f, 4.0f});
  EXPECT_EQ(GlobalAveragePool(g), std::vector<float>{3.0f});
}

TEST(GlobalAveragePoolTest, MatchesScalarLoop) {
  Rng rng(11);
  const GridShape s{4, 4, 8};
  const FeatureGrid g = testing::RandomFeatures(rng, s);
  const auto pooled = GlobalAveragePool(g);
  for (int c = 0; c < 8; ++c) {
    double sum = 0.0;
    for (int r = 0; r < 4; ++r) {
      for (int col = 0; col < 4; ++col) sum += g.data()[(r * 4 + col) * 8 + c];
    }
    EXPECT_NEAR(pooled[c], sum / 16.0, 1e-6);
  }
}

TEST(GlobalAveragePoolTest, Linearity) {
  Rng rng(12);
  const GridShape s{3, 5, 6};
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureGrid a = testing::RandomFeatures(rng, s);
    const FeatureGrid b = testing::RandomFeatures(rng, s);
    const double alpha = rng.Uniform(-2, 2), beta = rng.Uniform(-2, 2);
    std::vector<float> mix(s.size());
    for (std::size_t i = 0; i < mix.size(); ++i) {
      mix[i] = static_cast<float>(alpha * a.data()[i] + beta * b.data()[i]);
    }
    const auto pa = GlobalAveragePool(a), pb = GlobalAveragePool(b);
    const auto pm = GlobalAveragePool(FeatureGrid(s, mix));
    for (int c = 0; c < s.channels; ++c) {
      EXPECT_NEAR(pm[c], alpha * pa[c] + beta * pb[c], 1e-5);
    }
  }
}

TEST(StableSoftmaxTest, Symmetric) {
  const std::vector<double> logits{0.0, 0.0};
  const ProbVector p = StableSoftmax(logits, 1.0);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(StableSoftmaxTest, TemperatureClosedForm) {
  const std::vector<double> logits{1.0, 0.0};
  const ProbVector p = StableSoftmax(logits, 0.1);
  const double e10 = std::exp(10.0);
  EXPECT_NEAR(p[0], e10 / (e10 + 1.0), 1e-12);
  EXPECT_NEAR(p[1], 1.0 / (e10 + 1.0), 1e-12);
  EXPECT_NEAR(p[0], 0.9999546, 1e-7);
}

TEST(StableSoftmaxTest, NoOverflow) {
  const std::vector<double> logits{1000.0, 0.0};
  const ProbVector p = StableSoftmax(logits, 1.0);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
}

TEST(StableSoftmaxTest, Rejects) {
  const std::vector<double> logits{1.0};
  EXPECT_THROW(StableSoftmax(logits, 0.0), Error);
  EXPECT_THROW(StableSoftmax(std::vector<double>{}, 1.0), Error);
}

TEST(ProbVectorTest, ArgMaxTiesToLowest) {
  EXPECT_EQ(ProbVector({0.2, 0.4, 0.4}).ArgMax(), 1);
  EXPECT_EQ(ProbVector({0.5, 0.5}).ArgMax(), 0);
}

TEST(PairwiseDotTest, IdenticalRows) {
  const GridShape s{2, 2, 3};
  std::vector<float> data;
  for (int i = 0; i < 4; ++i) data.insert(data.end(), {0.6f, 0.8f, 0.0f});
  const EmbeddingGrid q(s, data);
  const std::vector<EmbeddingGrid> d{q};
  const Matrix m = PairwiseDot(q, d);
  ASSERT_EQ(m.rows, 4);
  ASSERT_EQ(m.cols, 4);
  for (double v : m.values) EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(PairwiseDotTest, OneHotIdentity) {
  const GridShape s{1, 3, 3};
  const EmbeddingGrid q(s, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const std::vector<EmbeddingGrid> d{q};
  const Matrix m = PairwiseDot(q, d);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(m.at(i, j), i == j ? 1.0 : 0.0);
  }
}

TEST(PairwiseDotTest, MatchesScalarLoop) {
  Rng rng(13);
  const GridShape s{3, 3, 16};
  const EmbeddingGrid q = testing::RandomEmbedding(rng, s);
  const std::vector<EmbeddingGrid> d{testing::RandomEmbedding(rng, s),
                                     testing::RandomEmbedding(rng, s)};
  const Matrix m = PairwiseDot(q, d);
  ASSERT_EQ(m.cols, 18);
  for (int i = 0; i < 9; ++i) {
    for (int img = 0; img < 2; ++img) {
      for (int j = 0; j < 9; ++j) {
        double ref = 0.0;
        for (int c = 0; c < 16; ++c) ref += q.data()[i * 16 + c] * d[img].data()[j * 16 + c];
        EXPECT_NEAR(m.at(i, img * 9 + j), ref, 1e-6);
      }
    }
  }
}

TEST(EmbeddingGridTest, RenormalizesOffRows) {
  const EmbeddingGrid e({1, 2, 2}, {3.0f, 4.0f, 0.6f, 0.8f});
  EXPECT_FLOAT_EQ(e.cell(0)[0], 0.6f);
  EXPECT_FLOAT_EQ(e.cell(0)[1], 0.8f);
  // Already-unit rows are untouched.
  EXPECT_EQ(e.cell(1)[0], 0.6f);
  EXPECT_EQ(e.cell(1)[1], 0.8f);
}

TEST(EmbeddingGridTest, RowNormsWithinTolerance) {
  Rng rng(14);
  const GridShape s{4, 4, 7};
  const EmbeddingGrid e(s, rng.Floats(s.size(), -5, 5));
  for (int i = 0; i < s.cells(); ++i) {
    double n = 0.0;
    for (float v : e.cell(i)) n += static_cast<double>(v) * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-4);
  }
}

TEST(EmbeddingGridTest, RejectsZeroRowAndNonFinite) {
  EXPECT_THROW(EmbeddingGrid({1, 1, 2}, {0.0f, 0.0f}), Error);
  EXPECT_THROW(
      FeatureGrid({1, 1, 1}, {std::numeric_limits<float>::quiet_NaN()}), Error);
  EXPECT_THROW(FeatureGrid({1, 2, 1}, {1.0f}), Error);
}

TEST(FeatureGridTest, SetCell) {
  FeatureGrid g = FeatureGrid::Zeros({2, 2, 2});
  const std::vector<float> v{1.0f, 2.0f};
  g.SetCell(3, v);
  EXPECT_EQ(g.data()[6], 1.0f);
  EXPECT_EQ(g.data()[7], 2.0f);
  EXPECT_THROW(g.SetCell(4, v), Error);
}

}  // namespace
}  // namespace semcf
