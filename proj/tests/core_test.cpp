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
#include <set>

#include "test_util.hpp"

namespace lookalike {
namespace {

TEST(CoreTest, SignIsZeroAtZero) {
  EXPECT_EQ(sign(0.0), 0.0);
  EXPECT_EQ(sign(-2.5), -1.0);
  EXPECT_EQ(sign(3.0), 1.0);
}

TEST(CoreTest, NormsAndCosine) {
  const Vec a{3.0, -4.0};
  EXPECT_DOUBLE_EQ(l2_norm(a), 5.0);
  EXPECT_DOUBLE_EQ(l1_norm(a), 7.0);
  EXPECT_DOUBLE_EQ(cosine(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cosine(a, Vec{4.0, 3.0}), 0.0);
  EXPECT_DOUBLE_EQ(cosine(a, Vec{0.0, 0.0}), 0.0);
}

TEST(CoreTest, ClipNormOnlyShrinks) {
  Vec big{3.0, 4.0};
  clip_norm(big);
  EXPECT_NEAR(l2_norm(big), 1.0, 1e-12);
  EXPECT_NEAR(big[0] / big[1], 0.75, 1e-12);
  Vec small{0.1, 0.2};
  clip_norm(small);
  EXPECT_EQ(small, (Vec{0.1, 0.2}));
}

TEST(CoreTest, ClipNormIsBoundedAndIdempotent) {
  Rng rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    Vec v(1 + uniform_index(rng, 60));
    for (double& x : v) x = uniform(rng, -3.0, 3.0);
    clip_norm(v);
    EXPECT_LE(l2_norm(v), 1.0);
    const Vec once = v;
    clip_norm(v);
    EXPECT_EQ(v, once);
  }
}

TEST(CoreTest, ShuffleIsAPermutationAndDeterministic) {
  std::vector<int> a(50), b;
  for (int i = 0; i < 50; ++i) a[i] = i;
  b = a;
  Rng r1(9), r2(9);
  shuffle(a, r1);
  shuffle(b, r2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::set<int>(a.begin(), a.end()).size(), 50u);
}

TEST(CoreTest, MixSeedSeparatesTags) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t tag = 0; tag < 100; ++tag) seen.insert(mix_seed(42, tag));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(mix_seed(42, 3), mix_seed(42, 3));
}

TEST(CoreTest, VectorTextRoundTrip) {
  const Vec v{0.1, -2.5e-7, 123456.789, 0.0};
  const Vec back = parse_vector(join_vector(v));
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-8 * (1 + std::abs(v[i])));
  EXPECT_THROW(parse_vector("1,x"), Error);
  EXPECT_THROW(parse_vector("1,2abc"), Error);
}

TEST(CoreTest, SplitKeepsEmptyFields) {
  EXPECT_EQ(split("a\t\tb", '\t'), (std::vector<std::string>{"a", "", "b"}));
  EXPECT_EQ(trim("  x \r\n"), "x");
}

}  // namespace
}  // namespace lookalike
