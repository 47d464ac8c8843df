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


#include <algorithm>
#include <cmath>

#include "test_util.hpp"

namespace lookalike {
namespace {

using testing::random_matrix;
using testing::random_vector;

std::vector<CharId> ids(std::initializer_list<std::uint32_t> v) {
  std::vector<CharId> out;
  for (auto x : v) out.push_back(CharId{x});
  return out;
}

// Independent oracle: enumerate every window of every order explicitly.
Vec ngram_oracle(const std::vector<CharId>& chars, const Matrix& table, int order) {
  const std::size_t k = chars.size();
  Vec out(table.cols(), 0.0);
  for (int n = 1; n <= order; ++n) {
    if (static_cast<std::size_t>(n) > k) break;
    std::vector<Vec> windows;
    for (std::size_t start = 0; start + n <= k; ++start) {
      Vec w(table.cols(), 0.0);
      for (int j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < w.size(); ++c) w[c] += table(chars[start + j].index(), c);
      }
      windows.push_back(w);
    }
    for (const auto& w : windows) {
      for (std::size_t c = 0; c < w.size(); ++c) out[c] += w[c] / windows.size();
    }
  }
  return out;
}

void expect_vec_near(const Vec& a, const Vec& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

TEST(NgramEncodeTest, SingleCharacterIsItsEmbedding) {
  Matrix table(2, 3);
  table(1, 0) = 0.5;
  table(1, 1) = -1.0;
  table(1, 2) = 2.0;
  expect_vec_near(ngram_encode(ids({1}), table, 1), Vec{0.5, -1.0, 2.0}, 0.0);
}

TEST(NgramEncodeTest, TwoCharactersOrderTwo) {
  Matrix table(3, 2);
  table(1, 0) = 1.0;  // e1
  table(2, 1) = 1.0;  // e2
  expect_vec_near(ngram_encode(ids({1, 2}), table, 2), Vec{1.5, 1.5}, 1e-15);
  expect_vec_near(ngram_coefficients(2, 2), Vec{1.5, 1.5}, 1e-15);
  expect_vec_near(ngram_coefficients(1, 1), Vec{1.0}, 0.0);
}

TEST(NgramEncodeTest, ZeroTableGivesZero) {
  const Matrix table(5, 4);
  for (int n = 1; n <= 4; ++n) {
    for (auto chars : {ids({1}), ids({1, 2, 3}), ids({4, 4, 0, 2, 1})}) {
      expect_vec_near(ngram_encode(chars, table, n), Vec(4, 0.0), 0.0);
    }
  }
}

TEST(NgramEncodeTest, MatchesWindowOracle) {
  Rng rng(11);
  const Matrix table = random_matrix(8, 5, rng);
  for (int order = 1; order <= 4; ++order) {
    for (std::size_t k = 1; k <= 7; ++k) {
      std::vector<CharId> chars;
      for (std::size_t j = 0; j < k; ++j) chars.push_back(CharId{static_cast<std::uint32_t>(uniform_index(rng, 8))});
      expect_vec_near(ngram_encode(chars, table, order), ngram_oracle(chars, table, order), 1e-12);
    }
  }
}

TEST(NgramEncodeTest, EmptyLiteralIsAnError) {
  const Matrix table(2, 2);
  EXPECT_THROW(ngram_encode(std::vector<CharId>{}, table, 3), Error);
  EXPECT_THROW(ngram_encode(ids({1}), table, 0), Error);
}

TEST(NgramEncodeTest, LinearInTable) {
  Rng rng(12);
  const Matrix a = random_matrix(6, 4, rng);
  const Matrix b = random_matrix(6, 4, rng);
  const double alpha = 0.7, beta = -2.3;
  Matrix mix(6, 4);
  for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = alpha * a.data()[i] + beta * b.data()[i];
  const auto chars = ids({1, 5, 2, 2, 3});
  const Vec fa = ngram_encode(chars, a, 3), fb = ngram_encode(chars, b, 3);
  Vec expected(4);
  for (std::size_t i = 0; i < 4; ++i) expected[i] = alpha * fa[i] + beta * fb[i];
  expect_vec_near(ngram_encode(chars, mix, 3), expected, 1e-12);
}

TEST(NgramEncodeTest, OrderOneIsPermutationInvariant) {
  Rng rng(13);
  const Matrix table = random_matrix(6, 4, rng);
  expect_vec_near(ngram_encode(ids({1, 2, 3, 4}), table, 1), ngram_encode(ids({4, 2, 1, 3}), table, 1), 1e-12);
}

TEST(NgramEncodeTest, HigherOrdersAreOrderSensitive) {
  Rng rng(14);
  const Matrix table = random_matrix(6, 4, rng);
  const Vec a = ngram_encode(ids({1, 2, 3}), table, 2);
  const Vec b = ngram_encode(ids({2, 1, 3}), table, 2);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(a[i] - b[i]);
  EXPECT_GT(diff, 1e-6);
}

TEST(NgramGradTest, FiniteDifferenceOnFiveCharacters) {
  Rng rng(15);
  Matrix table = random_matrix(6, 4, rng);
  const Vec upstream = random_vector(4, rng);
  const auto chars = ids({3, 1, 4, 1, 5});
  const auto objective = [&](const Matrix& t) { return dot(ngram_encode(chars, t, 3), upstream); };
  const auto grads = ngram_encode_grad(chars, table, 3, upstream);
  Matrix analytic(6, 4);
  for (const auto& g : grads) {
    for (std::size_t c = 0; c < 4; ++c) analytic(g.row, c) = g.grad[c];
  }
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < table.data().size(); ++i) {
    const double saved = table.data()[i];
    table.data()[i] = saved + h;
    const double up = objective(table);
    table.data()[i] = saved - h;
    const double down = objective(table);
    table.data()[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double a = analytic.data()[i];
    worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
  }
  EXPECT_LT(worst, 1e-4);
  // Unused rows get no entry; repeated characters are merged.
  EXPECT_EQ(grads.size(), 4u);
}

TEST(NgramGradTest, CoefficientsCountCoveringWindows) {
  const Vec coef = ngram_coefficients(5, 3);
  // Order 1: 1/5 each. Order 2: covering windows {1,2,2,2,1} over 4. Order 3: {1,2,3,2,1} over 3.
  const Vec expected{1.0 / 5 + 1.0 / 4 + 1.0 / 3, 1.0 / 5 + 2.0 / 4 + 2.0 / 3,
                     1.0 / 5 + 2.0 / 4 + 3.0 / 3, 1.0 / 5 + 2.0 / 4 + 2.0 / 3,
                     1.0 / 5 + 1.0 / 4 + 1.0 / 3};
  expect_vec_near(coef, expected, 1e-15);
}

TEST(CnnTest, ZeroParamsGiveProjectionBias) {
  CnnParams p = CnnParams::zeros(4, 3, 2);
  p.projection_bias = {0.1, -0.2, 0.3, 0.4};
  Rng rng(16);
  expect_vec_near(cnn_forward(random_vector(4, rng), random_vector(4, rng), p), p.projection_bias, 0.0);
}

TEST(CnnTest, SingleFullWidthFilterHandCase) {
  // 2x2 input, F = 1, w = d = 2, zero biases: one position only.
  CnnParams p = CnnParams::zeros(2, 1, 2);
  p.kernels(0, 0) = 0.5;   // rel[0]
  p.kernels(0, 1) = -0.25; // rel[1]
  p.kernels(0, 2) = 1.0;   // val[0]
  p.kernels(0, 3) = 0.75;  // val[1]
  p.projection(0, 0) = 2.0;
  p.projection(1, 0) = -3.0;
  const Vec rel{0.2, 0.4}, val{-0.6, 0.8};
  const double z = 0.5 * 0.2 - 0.25 * 0.4 + 1.0 * -0.6 + 0.75 * 0.8;
  const double a = std::tanh(z);
  expect_vec_near(cnn_forward(rel, val, p), Vec{2.0 * a, -3.0 * a}, 1e-15);
}

TEST(CnnTest, OutputDimensionIsAlwaysD) {
  Rng rng(17);
  for (std::size_t f : {1u, 3u, 8u}) {
    for (std::size_t w : {1u, 2u, 5u}) {
      const CnnParams p = CnnParams::random(5, f, w, rng);
      EXPECT_EQ(cnn_forward(random_vector(5, rng), random_vector(5, rng), p).size(), 5u);
    }
  }
  EXPECT_THROW(CnnParams::zeros(3, 2, 4), Error);
}

TEST(CnnTest, ZeroUpstreamGivesZeroGradients) {
  Rng rng(18);
  const CnnParams p = CnnParams::random(4, 2, 2, rng);
  const auto g = cnn_backward(random_vector(4, rng), random_vector(4, rng), p, Vec(4, 0.0));
  for (const auto& block : g.params.blocks()) {
    for (double x : block) EXPECT_EQ(x, 0.0);
  }
  for (double x : g.rel) EXPECT_EQ(x, 0.0);
  for (double x : g.val) EXPECT_EQ(x, 0.0);
}

TEST(CnnTest, BackwardMatchesFiniteDifferences) {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    CnnParams p = CnnParams::random(4, 2, 2, rng);
    for (double& x : p.filter_bias) x = uniform(rng, -0.5, 0.5);
    for (double& x : p.projection_bias) x = uniform(rng, -0.5, 0.5);
    Vec rel = random_vector(4, rng), val = random_vector(4, rng);
    const Vec up = random_vector(4, rng);
    const auto objective = [&] { return dot(cnn_forward(rel, val, p), up); };

    // Skip instances whose max-pool gap is too small for a central difference.
    const CnnTrace trace = cnn_forward_trace(rel, val, p);
    bool near_tie = false;
    for (std::size_t f = 0; f < p.filters; ++f) {
      for (std::size_t pos = 0; pos < p.positions(); ++pos) {
        if (pos == trace.argmax[f]) continue;
        double z = p.filter_bias[f];
        for (std::size_t c = 0; c < p.width; ++c) {
          z += p.kernels(f, c) * rel[pos + c] + p.kernels(f, p.width + c) * val[pos + c];
        }
        if (trace.pooled[f] - std::tanh(z) < 1e-3) near_tie = true;
      }
    }
    if (near_tie) continue;

    const auto g = cnn_backward(rel, val, p, up);
    std::vector<std::pair<std::span<double>, std::span<const double>>> pairs;
    const auto pb = p.blocks();
    const auto gb = g.params.blocks();
    for (std::size_t b = 0; b < pb.size(); ++b) pairs.emplace_back(pb[b], gb[b]);
    pairs.emplace_back(rel, g.rel);
    pairs.emplace_back(val, g.val);
    const double h = 1e-5;
    double worst = 0.0;
    for (auto& [param, grad] : pairs) {
      for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + h;
        const double hi = objective();
        param[i] = saved - h;
        const double lo = objective();
        param[i] = saved;
        const double numeric = (hi - lo) / (2 * h);
        worst = std::max(worst, std::abs(grad[i] - numeric) /
                                    std::max({std::abs(grad[i]), std::abs(numeric), 1e-6}));
      }
    }
    EXPECT_LT(worst, 1e-4) << "trial " << trial;
  }
}

TEST(CnnTest, TieRoutesToLowestIndex) {
  // A constant input makes every position produce the same activation.
  CnnParams p = CnnParams::zeros(4, 1, 2);
  p.kernels(0, 0) = 0.3;
  p.kernels(0, 3) = -0.2;
  p.projection(0, 0) = 1.0;
  const Vec rel(4, 0.5), val(4, 0.25);
  const CnnTrace trace = cnn_forward_trace(rel, val, p);
  EXPECT_EQ(trace.argmax[0], 0u);
  const auto g = cnn_backward(rel, val, p, Vec{1.0, 0.0, 0.0, 0.0});
  EXPECT_NE(g.rel[0], 0.0);
  EXPECT_EQ(g.rel[2], 0.0);
  EXPECT_EQ(g.rel[3], 0.0);
  EXPECT_NE(g.val[1], 0.0);
  EXPECT_EQ(g.val[2], 0.0);
}

TEST(CnnTest, SwappingRowsChangesOutput) {
  Rng rng(20);
  const CnnParams p = CnnParams::random(6, 8, 2, rng);
  const Vec rel = random_vector(6, rng), val = random_vector(6, rng);
  const Vec a = cnn_forward(rel, val, p), b = cnn_forward(val, rel, p);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(a[i] - b[i]);
  EXPECT_GT(diff, 1e-6);
}

}  // namespace
}  // namespace lookalike
