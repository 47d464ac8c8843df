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

#pragma once

#include <fstream>
#include <optional>
#include <set>

#include "lookalike/core.hpp"
#include "lookalike/trainer.hpp"

namespace lookalike {

enum class ScoringMode { kCentroid, kMaxSim };

inline const char* scoring_mode_name(ScoringMode m) {
  return m == ScoringMode::kCentroid ? "centroid" : "max-sim";
}

inline ScoringMode parse_scoring_mode(std::string_view text) {
  if (text == "centroid") return ScoringMode::kCentroid;
  if (text == "max-sim" || text == "maxsim") return ScoringMode::kMaxSim;
  fail("unknown scoring mode '", text, "' (expected centroid or max-sim)");
}

// `user` indexes the rows of the EmbeddingSet being scored.
struct ScoredUser {
  std::size_t user = 0;
  double score = 0.0;

  bool operator==(const ScoredUser&) const = default;
};

// Descending score, ascending user id on ties.
inline bool ranks_before(const ScoredUser& a, const ScoredUser& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.user < b.user;
}

struct ExpansionResult {
  std::vector<ScoredUser> ranked;
  ScoringMode mode = ScoringMode::kCentroid;
  std::optional<double> threshold;
  std::optional<std::size_t> top_n;
};

struct SeedList {
  std::string campaign;
  std::vector<std::size_t> users;
};

// Resolves seed labels against the embedding set. Empty lists, duplicates
// and unknown users are errors.
inline SeedList resolve_seeds(const EmbeddingSet& set, const std::vector<std::string>& labels,
                              std::string campaign = {}) {
  if (labels.empty()) fail("seed list is empty");
  SeedList seeds{std::move(campaign), {}};
  std::set<std::size_t> seen;
  for (const auto& label : labels) {
    auto idx = set.find(label);
    if (!idx) fail("seed user '", label, "' has no fused embedding");
    if (!seen.insert(*idx).second) fail("duplicate seed user '", label, "'");
    seeds.users.push_back(*idx);
  }
  return seeds;
}

// One label per line; blank lines ignored.
inline std::vector<std::string> read_label_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "'");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (!t.empty()) labels.emplace_back(t);
  }
  return labels;
}

inline void write_label_list(const std::string& path, const std::vector<std::string>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '", path, "'");
  for (const auto& l : labels) out << l << '\n';
}

// Scores candidates against the seeds: cosine to the seed centroid, or the
// best cosine to any single seed. Seeds are removed from the candidates.
// An empty `candidates` means every non-seed user.
inline std::vector<ScoredUser> score_candidates(const EmbeddingSet& set, const SeedList& seeds,
                                                std::vector<std::size_t> candidates,
                                                ScoringMode mode) {
  if (seeds.users.empty()) fail("seed list is empty");
  const std::set<std::size_t> seed_set(seeds.users.begin(), seeds.users.end());
  if (candidates.empty()) {
    for (std::size_t u = 0; u < set.labels.size(); ++u) candidates.push_back(u);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::erase_if(candidates, [&](std::size_t u) { return seed_set.count(u) > 0; });

  Vec centroid(set.dim, 0.0);
  if (mode == ScoringMode::kCentroid) {
    for (std::size_t s : seeds.users) axpy(1.0, set.vectors.row(s), centroid);
    for (double& x : centroid) x /= static_cast<double>(seeds.users.size());
  }

  std::vector<ScoredUser> scored;
  scored.reserve(candidates.size());
  for (std::size_t c : candidates) {
    const auto v = set.vectors.row(c);
    double score = 0.0;
    if (mode == ScoringMode::kCentroid) {
      score = cosine(v, centroid);
    } else {
      score = -1.0;
      for (std::size_t s : seeds.users) score = std::max(score, cosine(v, set.vectors.row(s)));
    }
    scored.push_back({c, score});
  }
  std::sort(scored.begin(), scored.end(), ranks_before);
  return scored;
}

inline void validate_threshold(double threshold) {
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    fail("similarity threshold ", threshold, " outside [-1, 1]");
  }
}

inline ExpansionResult expand_threshold(const std::vector<ScoredUser>& scored, double threshold,
                                        ScoringMode mode = ScoringMode::kCentroid) {
  validate_threshold(threshold);
  ExpansionResult out;
  out.mode = mode;
  out.threshold = threshold;
  for (const auto& s : scored) {
    if (s.score >= threshold) out.ranked.push_back(s);
  }
  std::sort(out.ranked.begin(), out.ranked.end(), ranks_before);
  return out;
}

inline ExpansionResult expand_top_n(const std::vector<ScoredUser>& scored, std::size_t n,
                                    ScoringMode mode = ScoringMode::kCentroid) {
  if (n < 1) fail("top-n must be >= 1");
  ExpansionResult out;
  out.mode = mode;
  out.top_n = n;
  out.ranked = scored;
  std::sort(out.ranked.begin(), out.ranked.end(), ranks_before);
  if (out.ranked.size() > n) out.ranked.resize(n);
  return out;
}

// "rank,user,score" with scores at 6 decimals; ranks start at 1.
inline void write_expansion_csv(const std::string& path, const ExpansionResult& result,
                                const EmbeddingSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '", path, "'");
  out << "rank,user,score\n";
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    out << i + 1 << ',' << set.labels[result.ranked[i].user] << ','
        << format_fixed(result.ranked[i].score, 6) << '\n';
  }
}

// Exhaustive cosine ranking; the reference the partition index is measured
// against.
inline std::vector<ScoredUser> brute_force_query(const Matrix& vectors,
                                                 std::span<const double> query, std::size_t k) {
  std::vector<ScoredUser> all;
  all.reserve(vectors.rows());
  for (std::size_t i = 0; i < vectors.rows(); ++i) all.push_back({i, cosine(query, vectors.row(i))});
  std::sort(all.begin(), all.end(), ranks_before);
  if (all.size() > k) all.resize(k);
  return all;
}

// Inverted-file index: spherical k-means with ceil(sqrt(N)) centroids;
// a query scans the members of its `probes` closest partitions.
class PartitionIndex {
 public:
  struct Options {
    std::size_t partitions = 0;  // 0 = ceil(sqrt(N))
    std::size_t iterations = 20;
    std::uint64_t seed = 7;
  };

  PartitionIndex(const Matrix& vectors, Options options) : vectors_(vectors) {
    const std::size_t n = vectors.rows();
    if (n == 0) fail("partition index needs at least one vector");
    std::size_t k = options.partitions;
    if (k == 0) k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    k = std::min(k, n);

    Matrix unit(n, vectors.cols());
    for (std::size_t i = 0; i < n; ++i) {
      auto row = unit.row(i);
      std::copy(vectors.row(i).begin(), vectors.row(i).end(), row.begin());
      const double norm = l2_norm(row);
      if (norm > 0.0) {
        for (double& x : row) x /= norm;
      }
    }

    Rng rng(options.seed);
    std::vector<std::size_t> pick(n);
    for (std::size_t i = 0; i < n; ++i) pick[i] = i;
    shuffle(pick, rng);
    centroids_ = Matrix(k, vectors.cols());
    for (std::size_t c = 0; c < k; ++c) {
      std::copy(unit.row(pick[c]).begin(), unit.row(pick[c]).end(), centroids_.row(c).begin());
    }

    std::vector<std::size_t> assignment(n, 0);
    for (std::size_t it = 0; it < options.iterations; ++it) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t best = nearest_centroid(unit.row(i));
        changed |= best != assignment[i];
        assignment[i] = best;
      }
      Matrix sums(k, vectors.cols());
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        axpy(1.0, unit.row(i), sums.row(assignment[i]));
        ++counts[assignment[i]];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;  // keep the previous centroid
        const double norm = l2_norm(sums.row(c));
        if (norm == 0.0) continue;
        for (std::size_t j = 0; j < vectors.cols(); ++j) centroids_(c, j) = sums(c, j) / norm;
      }
      if (it > 0 && !changed) break;
    }
    members_.assign(k, {});
    for (std::size_t i = 0; i < n; ++i) members_[nearest_centroid(unit.row(i))].push_back(i);
  }

  std::size_t partitions() const { return centroids_.rows(); }
  std::size_t default_probes() const { return (partitions() + 3) / 4; }

  // k nearest by cosine among the members of the `probes` best partitions.
  std::vector<ScoredUser> query(std::span<const double> q, std::size_t k,
                                std::size_t probes) const {
    probes = std::clamp<std::size_t>(probes, 1, partitions());
    std::vector<ScoredUser> order;
    for (std::size_t c = 0; c < partitions(); ++c) order.push_back({c, dot(q, centroids_.row(c))});
    std::sort(order.begin(), order.end(), ranks_before);
    std::vector<ScoredUser> hits;
    for (std::size_t p = 0; p < probes; ++p) {
      for (std::size_t i : members_[order[p].user]) hits.push_back({i, cosine(q, vectors_.row(i))});
    }
    std::sort(hits.begin(), hits.end(), ranks_before);
    if (hits.size() > k) hits.resize(k);
    return hits;
  }

 private:
  std::size_t nearest_centroid(std::span<const double> v) const {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids_.rows(); ++c) {
      const double s = dot(v, centroids_.row(c));
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    return best;
  }

  Matrix vectors_;
  Matrix centroids_;
  std::vector<std::vector<std::size_t>> members_;
};

inline double recall_at_k(const std::vector<ScoredUser>& approx,
                          const std::vector<ScoredUser>& exact) {
  if (exact.empty()) return 1.0;
  std::set<std::size_t> truth;
  for (const auto& s : exact) truth.insert(s.user);
  std::size_t hit = 0;
  for (const auto& s : approx) hit += truth.count(s.user);
  return static_cast<double>(hit) / static_cast<double>(exact.size());
}

}  // namespace lookalike
