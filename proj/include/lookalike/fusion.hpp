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

// Per-user fusion of view embeddings. Each present view i gets weight
//
//   w_i = cos(u_i, m) / sum_j cos(u_j, m),   m = mean of the present views,
//
// and the fused vector is sum_i w_i u_i. Missing views get weight 0. When the
// cosine sum is within 1e-9 of zero the weights fall back to uniform.

#pragma once

#include <array>
#include <fstream>
#include <iterator>
#include <optional>

#include "lookalike/core.hpp"
#include "lookalike/trainer.hpp"

namespace lookalike {

inline constexpr double kDegenerateWeightSum = 1e-9;

struct ViewSet {
  std::array<std::optional<Vec>, kNumViews> views;

  std::size_t present_count() const {
    return static_cast<std::size_t>(
        std::count_if(views.begin(), views.end(), [](const auto& v) { return v.has_value(); }));
  }

  std::size_t dim() const {
    for (const auto& v : views) {
      if (v) return v->size();
    }
    return 0;
  }

  void validate() const {
    if (present_count() == 0) fail("view set has no present view");
    const std::size_t d = dim();
    for (const auto& v : views) {
      if (v && v->size() != d) fail("view set mixes dimensions ", d, " and ", v->size());
    }
  }
};

using ViewWeightArray = std::array<double, kNumViews>;

struct ViewWeights {
  ViewWeightArray weights{};
  bool degenerate = false;
};

struct FusedEmbedding {
  Vec vector;
  ViewWeightArray weights{};
  std::array<bool, kNumViews> present{};
  bool degenerate = false;
};

inline Vec mean_view(const ViewSet& set) {
  set.validate();
  Vec mean(set.dim(), 0.0);
  for (const auto& v : set.views) {
    if (v) axpy(1.0, *v, mean);
  }
  const double inv = 1.0 / static_cast<double>(set.present_count());
  for (double& x : mean) x *= inv;
  return mean;
}

namespace detail {

inline ViewWeights weights_against(const ViewSet& set, std::span<const double> reference) {
  ViewWeights out;
  double total = 0.0;
  for (std::size_t i = 0; i < kNumViews; ++i) {
    if (!set.views[i]) continue;
    out.weights[i] = cosine(*set.views[i], reference);
    total += out.weights[i];
  }
  if (std::abs(total) <= kDegenerateWeightSum || !std::isfinite(total)) {
    out.degenerate = true;
    const double uniform_weight = 1.0 / static_cast<double>(set.present_count());
    for (std::size_t i = 0; i < kNumViews; ++i) {
      out.weights[i] = set.views[i] ? uniform_weight : 0.0;
    }
    return out;
  }
  for (double& w : out.weights) w /= total;
  return out;
}

}  // namespace detail

// `iterations` > 1 re-estimates the reference as (1/V) sum_i w_i u_i and
// recomputes the weights; 1 uses the plain mean.
inline ViewWeights view_weights(const ViewSet& set, int iterations = 1) {
  if (iterations < 1) fail("fusion iterations must be >= 1");
  Vec reference = mean_view(set);
  ViewWeights w = detail::weights_against(set, reference);
  for (int it = 1; it < iterations; ++it) {
    std::fill(reference.begin(), reference.end(), 0.0);
    for (std::size_t i = 0; i < kNumViews; ++i) {
      if (set.views[i]) axpy(w.weights[i] / static_cast<double>(set.present_count()),
                             *set.views[i], reference);
    }
    w = detail::weights_against(set, reference);
  }
  return w;
}

inline FusedEmbedding fuse(const ViewSet& set, int iterations = 1) {
  const ViewWeights w = view_weights(set, iterations);
  FusedEmbedding out;
  out.weights = w.weights;
  out.degenerate = w.degenerate;
  out.vector.assign(set.dim(), 0.0);
  if (set.present_count() == 1) {
    for (std::size_t i = 0; i < kNumViews; ++i) {
      out.present[i] = set.views[i].has_value();
      if (set.views[i]) out.vector = *set.views[i];
    }
    return out;
  }
  for (std::size_t i = 0; i < kNumViews; ++i) {
    out.present[i] = set.views[i].has_value();
    if (set.views[i]) axpy(w.weights[i], *set.views[i], out.vector);
  }
  // Equal views fuse to exactly the common vector.
  bool all_equal = true;
  const Vec* first = nullptr;
  for (const auto& v : set.views) {
    if (!v) continue;
    if (!first) {
      first = &*v;
    } else if (*v != *first) {
      all_equal = false;
    }
  }
  if (all_equal && first) out.vector = *first;
  return out;
}

// Fused embeddings for a population of users.
struct FusedSet {
  EmbeddingSet embeddings;
  std::vector<ViewWeightArray> weights;
  std::vector<std::array<bool, kNumViews>> present;
  std::vector<bool> degenerate;
};

// Fuses every user that has at least one of the given view embeddings. If
// `universe` is non-empty only its users are kept.
inline FusedSet fuse_sets(const std::array<std::optional<EmbeddingSet>, kNumViews>& views,
                          const std::vector<std::string>& universe = {}, int iterations = 1) {
  std::size_t dim = 0;
  std::set<std::string> users;
  for (const auto& v : views) {
    if (!v) continue;
    if (dim == 0) dim = v->dim;
    if (v->dim != dim) fail("fusion: views trained with different dimensions (", dim, " vs ",
                            v->dim, ")");
    users.insert(v->labels.begin(), v->labels.end());
  }
  if (dim == 0) fail("fusion: no view embeddings given");
  if (!universe.empty()) {
    std::set<std::string> keep(universe.begin(), universe.end());
    std::set<std::string> filtered;
    std::set_intersection(users.begin(), users.end(), keep.begin(), keep.end(),
                          std::inserter(filtered, filtered.begin()));
    users = std::move(filtered);
  }

  FusedSet out;
  out.embeddings.dim = dim;
  out.embeddings.vectors = Matrix(users.size(), dim);
  std::size_t row = 0;
  for (const auto& user : users) {
    ViewSet set;
    for (std::size_t i = 0; i < kNumViews; ++i) {
      if (!views[i]) continue;
      if (auto idx = views[i]->find(user)) {
        const auto r = views[i]->vectors.row(*idx);
        set.views[i] = Vec(r.begin(), r.end());
      }
    }
    const FusedEmbedding f = fuse(set, iterations);
    out.embeddings.labels.push_back(user);
    std::copy(f.vector.begin(), f.vector.end(), out.embeddings.vectors.row(row).begin());
    out.weights.push_back(f.weights);
    out.present.push_back(f.present);
    out.degenerate.push_back(f.degenerate);
    ++row;
  }
  return out;
}

inline std::string present_mask(const std::array<bool, kNumViews>& present) {
  std::string mask;
  for (bool p : present) mask += p ? '1' : '0';
  return mask;
}

// Sidecar: "user<TAB>w_d,w_l,w_i,w_t,w_f<TAB>mask", mask in the same slot order.
inline void write_fused(const std::string& embedding_path, const std::string& weights_path,
                        const FusedSet& fused) {
  write_embeddings(embedding_path, fused.embeddings);
  std::ofstream out(weights_path, std::ios::binary);
  if (!out) fail("cannot write '", weights_path, "'");
  for (std::size_t i = 0; i < fused.embeddings.labels.size(); ++i) {
    out << fused.embeddings.labels[i] << '\t' << join_vector(fused.weights[i]) << '\t'
        << present_mask(fused.present[i]) << '\n';
  }
}

struct WeightRow {
  std::string user;
  ViewWeightArray weights{};
  std::string mask;
};

inline std::vector<WeightRow> read_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "'");
  std::vector<WeightRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) fail(path, ": line ", line_no, ": expected 3 fields");
    const Vec w = parse_vector(fields[1]);
    if (w.size() != kNumViews || fields[2].size() != kNumViews) {
      fail(path, ": line ", line_no, ": expected ", kNumViews, " weights and mask bits");
    }
    WeightRow row{fields[0], {}, fields[2]};
    std::copy(w.begin(), w.end(), row.weights.begin());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lookalike
