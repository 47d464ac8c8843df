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

using testing::random_vector;

EmbeddingSet make_embeddings(const std::vector<Vec>& rows) {
  EmbeddingSet set;
  set.dim = rows.front().size();
  set.vectors = Matrix(rows.size(), set.dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char label[16];
    std::snprintf(label, sizeof(label), "u%03zu", i);
    set.labels.push_back(label);
    std::copy(rows[i].begin(), rows[i].end(), set.vectors.row(i).begin());
  }
  return set;
}

Vec at_angle(double degrees, double radius = 1.0) {
  const double a = degrees * M_PI / 180.0;
  return {radius * std::cos(a), radius * std::sin(a)};
}

std::vector<ScoredUser> scores(std::initializer_list<double> values) {
  std::vector<ScoredUser> out;
  std::size_t i = 0;
  for (double v : values) out.push_back({i++, v});
  return out;
}

TEST(ScoreCandidatesTest, SeedEqualCandidateScoresOneInMaxSim) {
  const EmbeddingSet set = make_embeddings({Vec{0.3, 0.4}, Vec{-1, 0.2}, Vec{0.3, 0.4}});
  const SeedList seeds = resolve_seeds(set, {"u000", "u001"});
  const auto scored = score_candidates(set, seeds, {}, ScoringMode::kMaxSim);
  ASSERT_EQ(scored.size(), 1u);
  EXPECT_EQ(scored[0].user, 2u);
  EXPECT_NEAR(scored[0].score, 1.0, 1e-15);
}

TEST(ScoreCandidatesTest, OrthogonalCandidateScoresZero) {
  const EmbeddingSet set = make_embeddings({Vec{1, 0, 0}, Vec{2, 0, 0}, Vec{0, 0, 3}});
  const SeedList seeds = resolve_seeds(set, {"u000", "u001"});
  for (ScoringMode mode : {ScoringMode::kCentroid, ScoringMode::kMaxSim}) {
    const auto scored = score_candidates(set, seeds, {}, mode);
    ASSERT_EQ(scored.size(), 1u);
    EXPECT_EQ(scored[0].score, 0.0);
  }
}

TEST(ScoreCandidatesTest, HandSetAnglesMatchBruteForce) {
  // Seeds at 0, 30 and 60 degrees; candidates at various angles and radii.
  const std::vector<Vec> rows{at_angle(0), at_angle(30, 2), at_angle(60, 0.5), at_angle(45, 3),
                              at_angle(90), at_angle(-35, 0.7), at_angle(180), at_angle(10, 4)};
  const EmbeddingSet set = make_embeddings(rows);
  const SeedList seeds = resolve_seeds(set, {"u000", "u001", "u002"});
  Vec centroid(2, 0.0);
  for (std::size_t s = 0; s < 3; ++s) {
    centroid[0] += rows[s][0] / 3;
    centroid[1] += rows[s][1] / 3;
  }
  const double centroid_angle = std::atan2(centroid[1], centroid[0]) * 180 / M_PI;
  const std::vector<double> cand_angles{45, 90, -35, 180, 10};
  for (ScoringMode mode : {ScoringMode::kCentroid, ScoringMode::kMaxSim}) {
    const auto scored = score_candidates(set, seeds, {}, mode);
    ASSERT_EQ(scored.size(), 5u);
    std::vector<ScoredUser> expected;
    for (std::size_t c = 0; c < 5; ++c) {
      double s;
      if (mode == ScoringMode::kCentroid) {
        s = std::cos((cand_angles[c] - centroid_angle) * M_PI / 180);
      } else {
        s = -1;
        for (double seed_angle : {0.0, 30.0, 60.0}) s = std::max(s, std::cos((cand_angles[c] - seed_angle) * M_PI / 180));
      }
      expected.push_back({c + 3, s});
    }
    std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(scored[i].user, expected[i].user) << scoring_mode_name(mode) << " rank " << i;
      EXPECT_NEAR(scored[i].score, expected[i].score, 1e-12);
    }
  }
}

TEST(ScoreCandidatesTest, SeedsNeverCandidatesAndScoresInRange) {
  Rng rng(1);
  std::vector<Vec> rows;
  for (int i = 0; i < 60; ++i) rows.push_back(random_vector(5, rng));
  const EmbeddingSet set = make_embeddings(rows);
  const SeedList seeds = resolve_seeds(set, {"u003", "u010", "u042"});
  for (ScoringMode mode : {ScoringMode::kCentroid, ScoringMode::kMaxSim}) {
    const auto scored = score_candidates(set, seeds, {3, 4, 5, 10, 11}, mode);
    ASSERT_EQ(scored.size(), 3u);
    for (std::size_t i = 0; i < scored.size(); ++i) {
      EXPECT_NE(scored[i].user, 3u);
      EXPECT_NE(scored[i].user, 10u);
      EXPECT_GE(scored[i].score, -1.0);
      EXPECT_LE(scored[i].score, 1.0);
      if (i) EXPECT_LE(scored[i].score, scored[i - 1].score);
    }
  }
}

TEST(ScoreCandidatesTest, CentroidIgnoresSeedOrder) {
  Rng rng(2);
  std::vector<Vec> rows;
  for (int i = 0; i < 30; ++i) rows.push_back(random_vector(4, rng));
  const EmbeddingSet set = make_embeddings(rows);
  const auto a = score_candidates(set, resolve_seeds(set, {"u001", "u005", "u009", "u020"}), {},
                                  ScoringMode::kCentroid);
  const auto b = score_candidates(set, resolve_seeds(set, {"u020", "u009", "u001", "u005"}), {},
                                  ScoringMode::kCentroid);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].user, b[i].user);
    EXPECT_NEAR(a[i].score, b[i].score, 1e-12);
  }
}

TEST(ScoreCandidatesTest, SeedErrorsAndEmptyCandidates) {
  const EmbeddingSet set = make_embeddings({Vec{1, 0}, Vec{0, 1}});
  EXPECT_THROW(resolve_seeds(set, {}), Error);
  EXPECT_THROW(resolve_seeds(set, {"u000", "u000"}), Error);
  EXPECT_THROW(resolve_seeds(set, {"nobody"}), Error);
  EXPECT_TRUE(score_candidates(set, resolve_seeds(set, {"u000"}), {0}, ScoringMode::kCentroid).empty());
}

TEST(ExpandThresholdTest, HandCases) {
  const auto list = scores({0.9, -0.3, 0.5, 0.1, 0.7});
  EXPECT_EQ(expand_threshold(list, -1.0).ranked.size(), 5u);
  // Median of the five scores is 0.5.
  const auto median = expand_threshold(list, 0.5).ranked;
  ASSERT_EQ(median.size(), 3u);
  EXPECT_EQ(median[0].user, 0u);
  EXPECT_EQ(median[1].user, 4u);
  EXPECT_EQ(median[2].user, 2u);
  EXPECT_THROW(expand_threshold(list, 1.0 + 1e-9), Error);
  EXPECT_THROW(expand_threshold(list, -1.5), Error);
  EXPECT_TRUE(expand_threshold(list, 1.0).ranked.empty());
}

TEST(ExpandThresholdTest, HigherThresholdGivesSubset) {
  Rng rng(3);
  std::vector<ScoredUser> list;
  for (std::size_t i = 0; i < 200; ++i) list.push_back({i, uniform(rng, -1, 1)});
  for (int trial = 0; trial < 50; ++trial) {
    double t1 = uniform(rng, -1, 1), t2 = uniform(rng, -1, 1);
    if (t1 > t2) std::swap(t1, t2);
    const auto loose = expand_threshold(list, t1).ranked;
    const auto tight = expand_threshold(list, t2).ranked;
    std::set<std::size_t> loose_users;
    for (const auto& s : loose) loose_users.insert(s.user);
    for (const auto& s : tight) EXPECT_TRUE(loose_users.count(s.user));
  }
}

TEST(ExpandTopNTest, HandCases) {
  const auto list = scores({0.2, 0.8, 0.8, 0.1});
  EXPECT_EQ(expand_top_n(list, 10).ranked.size(), 4u);
  const auto one = expand_top_n(list, 1).ranked;
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].user, 1u);  // tie at 0.8 keeps the lower id
  const auto two = expand_top_n(list, 2).ranked;
  EXPECT_EQ(two[1].user, 2u);
  EXPECT_THROW(expand_top_n(list, 0), Error);
}

TEST(ExpandTopNTest, PrefixProperty) {
  Rng rng(4);
  std::vector<ScoredUser> list;
  // Coarse scores force plenty of ties.
  for (std::size_t i = 0; i < 100; ++i) list.push_back({i, std::round(uniform(rng, -1, 1) * 5) / 5});
  for (std::size_t n = 1; n < 100; ++n) {
    const auto a = expand_top_n(list, n).ranked;
    const auto b = expand_top_n(list, n + 1).ranked;
    ASSERT_EQ(a.size(), n);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(ExpansionCsvTest, Format) {
  const EmbeddingSet set = make_embeddings({Vec{1, 0}, Vec{0, 1}});
  testing::TempDir dir;
  write_expansion_csv(dir.file("e.csv"), expand_top_n(scores({0.25, 0.5}), 2), set);
  EXPECT_EQ(testing::read_file(dir.file("e.csv")), "rank,user,score\n1,u001,0.500000\n2,u000,0.250000\n");
}

Matrix planted_clusters(std::size_t n, std::size_t d, std::size_t clusters, Rng& rng) {
  std::vector<Vec> centers;
  for (std::size_t c = 0; c < clusters; ++c) centers.push_back(random_vector(d, rng));
  std::normal_distribution<double> noise(0.0, 0.15);
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& c = centers[i % clusters];
    for (std::size_t j = 0; j < d; ++j) m(i, j) = c[j] + noise(rng);
  }
  return m;
}

TEST(PartitionIndexTest, FullProbeEqualsBruteForce) {
  Rng rng(5);
  const Matrix m = planted_clusters(400, 8, 10, rng);
  const PartitionIndex index(m, {});
  EXPECT_EQ(index.partitions(), 20u);
  for (int q = 0; q < 20; ++q) {
    const Vec query = random_vector(8, rng);
    EXPECT_EQ(index.query(query, 15, index.partitions()), brute_force_query(m, query, 15));
  }
}

TEST(PartitionIndexTest, RecallOnPlantedClusters) {
  Rng rng(6);
  const Matrix m = planted_clusters(1000, 16, 20, rng);
  const PartitionIndex index(m, {});
  EXPECT_EQ(index.partitions(), 32u);
  EXPECT_EQ(index.default_probes(), 8u);
  double recall = 0.0;
  const int queries = 100;
  for (int q = 0; q < queries; ++q) {
    const auto row = m.row(uniform_index(rng, m.rows()));
    recall += recall_at_k(index.query(row, 10, index.default_probes()), brute_force_query(m, row, 10));
  }
  EXPECT_GE(recall / queries, 0.9);
}

TEST(PartitionIndexTest, StoredVectorRanksFirst) {
  Rng rng(7);
  const Matrix m = planted_clusters(300, 6, 5, rng);
  const PartitionIndex index(m, {});
  for (std::size_t i = 0; i < 300; i += 37) {
    const auto hits = index.query(m.row(i), 5, 1);
    ASSERT_FALSE(hits.empty());
    EXPECT_NEAR(hits[0].score, 1.0, 1e-12);
    EXPECT_EQ(hits[0].user, i);
  }
}

TEST(PartitionIndexTest, KLargerThanNReturnsAll) {
  Rng rng(8);
  const Matrix m = planted_clusters(12, 3, 2, rng);
  const PartitionIndex index(m, {});
  EXPECT_EQ(index.query(m.row(0), 100, index.partitions()).size(), 12u);
  EXPECT_THROW(PartitionIndex(Matrix(), {}), Error);
}

}  // namespace
}  // namespace lookalike
