// Copyright 2026 The Lookalike Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>

#include "test_util.hpp"

namespace lookalike {
namespace {

using testing::random_vector;

ViewSet make_set(std::initializer_list<std::pair<ViewKind, Vec>> views) {
  ViewSet set;
  for (const auto& [kind, v] : views) set.views[view_slot(kind)] = v;
  return set;
}

double weight_sum(const ViewWeightArray& w) {
  double s = 0.0;
  for (double x : w) s += x;
  return s;
}

TEST(MeanViewTest, HandCases) {
  EXPECT_EQ(mean_view(make_set({{ViewKind::kTravel, Vec{0.3, -0.4}}})), (Vec{0.3, -0.4}));
  EXPECT_EQ(mean_view(make_set({{ViewKind::kDemography, Vec{1, 0}}, {ViewKind::kFamily, Vec{0, 1}}})),
            (Vec{0.5, 0.5}));
  const Vec v{0.25, 0.5, -1.0};
  EXPECT_EQ(mean_view(make_set({{ViewKind::kDemography, v}, {ViewKind::kLoyalty, v}, {ViewKind::kIchiba, v}})), v);
  EXPECT_THROW(mean_view(ViewSet{}), Error);
  EXPECT_THROW(mean_view(make_set({{ViewKind::kDemography, Vec{1}}, {ViewKind::kLoyalty, Vec{1, 2}}})), Error);
}

TEST(ViewWeightsTest, ThreeViewHandCase) {
  const double s = 1.0 / std::sqrt(2.0);
  const ViewSet set = make_set({{ViewKind::kDemography, Vec{1, 0}},
                                {ViewKind::kLoyalty, Vec{0, 1}},
                                {ViewKind::kIchiba, Vec{s, s}}});
  // Oracle: the mean lies on the diagonal, so the cosines are (s, s, 1).
  const double total = 2 * s + 1;
  const ViewWeights w = view_weights(set);
  EXPECT_FALSE(w.degenerate);
  EXPECT_NEAR(w.weights[0], s / total, 1e-12);
  EXPECT_NEAR(w.weights[1], s / total, 1e-12);
  EXPECT_NEAR(w.weights[2], 1 / total, 1e-12);
  EXPECT_NEAR(w.weights[0], 0.2929, 1e-3);
  EXPECT_NEAR(w.weights[2], 0.4142, 1e-3);
  EXPECT_EQ(w.weights[3], 0.0);
  EXPECT_EQ(w.weights[4], 0.0);

  const FusedEmbedding f = fuse(set);
  const double expected = (s / total) * 1 + (1 / total) * s;
  EXPECT_NEAR(f.vector[0], expected, 1e-12);
  EXPECT_NEAR(f.vector[1], expected, 1e-12);
}

TEST(ViewWeightsTest, SingleAndIdenticalViews) {
  const Vec v{0.1, -0.7, 0.3};
  const FusedEmbedding single = fuse(make_set({{ViewKind::kFamily, v}}));
  EXPECT_EQ(single.vector, v);
  EXPECT_EQ(single.weights[view_slot(ViewKind::kFamily)], 1.0);

  const FusedEmbedding same = fuse(make_set({{ViewKind::kDemography, v}, {ViewKind::kIchiba, v},
                                             {ViewKind::kTravel, v}}));
  EXPECT_EQ(same.vector, v);
  for (ViewKind k : {ViewKind::kDemography, ViewKind::kIchiba, ViewKind::kTravel}) {
    EXPECT_NEAR(same.weights[view_slot(k)], 1.0 / 3, 1e-15);
  }
}

TEST(ViewWeightsTest, SumToOneAndMissingViewsGetZero) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    ViewSet set;
    for (std::size_t i = 0; i < kNumViews; ++i) {
      if (uniform_index(rng, 2) || (i == kNumViews - 1 && set.present_count() == 0)) {
        set.views[i] = random_vector(4, rng);
      }
    }
    const ViewWeights w = view_weights(set);
    EXPECT_NEAR(weight_sum(w.weights), 1.0, 1e-9);
    for (std::size_t i = 0; i < kNumViews; ++i) {
      EXPECT_TRUE(std::isfinite(w.weights[i]));
      if (!set.views[i]) EXPECT_EQ(w.weights[i], 0.0);
    }
  }
}

TEST(ViewWeightsTest, CloserToMeanGetsMoreWeight) {
  Rng rng(2);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    ViewSet set;
    for (std::size_t i = 0; i < 3; ++i) {
      Vec v = random_vector(3, rng);
      v[0] += 2.0;  // keep cosines positive
      set.views[i] = v;
    }
    const Vec mean = mean_view(set);
    const ViewWeights w = view_weights(set);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        if (cosine(*set.views[i], mean) < cosine(*set.views[j], mean)) {
          EXPECT_LT(w.weights[i], w.weights[j]);
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(FuseTest, EquivariantUnderRotation) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double theta = uniform(rng, 0, 2 * M_PI);
    const double c = std::cos(theta), s = std::sin(theta);
    const auto rotate = [&](const Vec& v) { return Vec{c * v[0] - s * v[1], s * v[0] + c * v[1]}; };
    ViewSet set, rotated;
    for (std::size_t i = 0; i < 4; ++i) {
      set.views[i] = random_vector(2, rng);
      rotated.views[i] = rotate(*set.views[i]);
    }
    const FusedEmbedding a = fuse(set), b = fuse(rotated);
    if (a.degenerate) continue;
    const Vec expected = rotate(a.vector);
    EXPECT_NEAR(b.vector[0], expected[0], 1e-9);
    EXPECT_NEAR(b.vector[1], expected[1], 1e-9);
  }
}

TEST(FuseTest, DegenerateDenominatorFallsBackToUniform) {
  // Opposite views: the mean is zero, so every cosine is 0.
  const FusedEmbedding f = fuse(make_set({{ViewKind::kDemography, Vec{1, 2}}, {ViewKind::kLoyalty, Vec{-1, -2}}}));
  EXPECT_TRUE(f.degenerate);
  EXPECT_EQ(f.weights[0], 0.5);
  EXPECT_EQ(f.weights[1], 0.5);
  EXPECT_NEAR(f.vector[0], 0.0, 1e-15);
}

TEST(FuseTest, NegativeCosinesKeptAsWritten) {
  const ViewSet set = make_set({{ViewKind::kDemography, Vec{1, 0}}, {ViewKind::kLoyalty, Vec{1, 0.1}},
                                {ViewKind::kIchiba, Vec{-0.2, -0.1}}});
  const ViewWeights w = view_weights(set);
  EXPECT_LT(w.weights[2], 0.0);
  EXPECT_NEAR(weight_sum(w.weights), 1.0, 1e-12);
}

TEST(FuseTest, IteratedWeightsStayNormalized) {
  Rng rng(4);
  ViewSet set;
  for (std::size_t i = 0; i < kNumViews; ++i) set.views[i] = random_vector(5, rng);
  EXPECT_EQ(view_weights(set, 1).weights, view_weights(set).weights);
  EXPECT_NEAR(weight_sum(view_weights(set, 5).weights), 1.0, 1e-9);
  EXPECT_THROW(view_weights(set, 0), Error);
}

TEST(FuseSetsTest, MissingViewsAndSidecar) {
  std::array<std::optional<EmbeddingSet>, kNumViews> views;
  EmbeddingSet a;
  a.dim = 2;
  a.labels = {"u1", "u2"};
  a.vectors = Matrix(2, 2);
  a.vectors(0, 0) = 1;
  a.vectors(1, 1) = 1;
  EmbeddingSet b;
  b.dim = 2;
  b.labels = {"u2", "u3"};
  b.vectors = Matrix(2, 2);
  b.vectors(0, 1) = 0.5;
  b.vectors(1, 0) = -1;
  views[view_slot(ViewKind::kIchiba)] = a;
  views[view_slot(ViewKind::kTravel)] = b;

  const FusedSet fused = fuse_sets(views);
  EXPECT_EQ(fused.embeddings.labels, (std::vector<std::string>{"u1", "u2", "u3"}));
  EXPECT_EQ(present_mask(fused.present[0]), "00100");
  EXPECT_EQ(present_mask(fused.present[1]), "00110");
  EXPECT_EQ(present_mask(fused.present[2]), "00010");
  EXPECT_EQ(fused.embeddings.vectors(2, 0), -1.0);

  const FusedSet only = fuse_sets(views, {"u3", "u9"});
  EXPECT_EQ(only.embeddings.labels, (std::vector<std::string>{"u3"}));

  testing::TempDir dir;
  write_fused(dir.file("f.emb"), dir.file("f.w"), fused);
  const auto rows = read_weights(dir.file("f.w"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].mask, "00110");
  EXPECT_NEAR(rows[1].weights[2] + rows[1].weights[3], 1.0, 1e-8);

  b.dim = 3;
  b.vectors = Matrix(2, 3);
  views[view_slot(ViewKind::kTravel)] = b;
  EXPECT_THROW(fuse_sets(views), Error);
}

}  // namespace
}  // namespace lookalike
