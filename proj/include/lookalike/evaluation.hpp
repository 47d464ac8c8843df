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
#include <limits>
#include <map>
#include <set>

#include "lookalike/core.hpp"
#include "lookalike/fusion.hpp"
#include "lookalike/kg_store.hpp"

namespace lookalike {

struct MetricReport {
  double precision = 0.0;
  double accuracy = 0.0;
  double pr_auc = std::numeric_limits<double>::quiet_NaN();
  double threshold = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  // Set when nothing was predicted positive; precision is then reported as 0.
  bool precision_undefined = false;
};

inline void check_scored_labels(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty()) fail("metrics: empty input");
  if (scores.size() != labels.size()) fail("metrics: ", scores.size(), " scores vs ",
                                           labels.size(), " labels");
  for (int y : labels) {
    if (y != 0 && y != 1) fail("metrics: labels must be 0 or 1");
  }
}

// Scores >= threshold are predicted positive.
inline MetricReport precision_accuracy(std::span<const double> scores, std::span<const int> labels,
                                       double threshold) {
  check_scored_labels(scores, labels);
  MetricReport m;
  m.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i]) ++m.tp;
    else if (predicted) ++m.fp;
    else if (labels[i]) ++m.fn;
    else ++m.tn;
  }
  if (m.tp + m.fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  }
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(scores.size());
  return m;
}

// Average precision: sum over distinct thresholds (descending) of
// (R_k - R_{k-1}) * P_k, where the k-th prefix holds every item scoring at
// least the k-th distinct score.
inline double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  check_scored_labels(scores, labels);
  const std::size_t positives =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == labels.size()) {
    fail("pr_auc: needs at least one positive and one negative");
  }
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      tp += static_cast<std::size_t>(labels[order[i]]);
      ++seen;
      ++i;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

// Threshold (one of the observed scores) maximizing F1; the highest such
// threshold wins ties.
inline double select_threshold_f1(std::span<const double> scores, std::span<const int> labels) {
  check_scored_labels(scores, labels);
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end(), std::greater<>());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  double best_f1 = -1.0, best_threshold = distinct.front();
  for (double t : distinct) {
    const auto m = precision_accuracy(scores, labels, t);
    const double denom = static_cast<double>(2 * m.tp + m.fp + m.fn);
    const double f1 = denom > 0 ? 2.0 * static_cast<double>(m.tp) / denom : 0.0;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_threshold = t;
    }
  }
  return best_threshold;
}

// Fraction of positives among the k best-scored items (index breaks ties).
inline double precision_at_k(std::span<const double> scores, std::span<const int> labels,
                             std::size_t k) {
  check_scored_labels(scores, labels);
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  k = std::min(k, order.size());
  if (k == 0) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < k; ++i) hit += static_cast<std::size_t>(labels[order[i]]);
  return static_cast<double>(hit) / static_cast<double>(k);
}

enum class Split { kTrain, kValidation, kTest };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

struct LabeledUser {
  std::string user;
  int label = 0;
  Split split = Split::kTrain;
};

struct LabeledPool {
  std::vector<LabeledUser> entries;

  std::vector<LabeledUser> subset(Split s) const {
    std::vector<LabeledUser> out;
    for (const auto& e : entries) {
      if (e.split == s) out.push_back(e);
    }
    return out;
  }
};

struct SplitFractions {
  double train = 0.72;
  double validation = 0.10;
  double test = 0.18;

  void validate() const {
    if (train < 0 || validation < 0 || test < 0) fail("split fractions must be >= 0");
    if (std::abs(train + validation + test - 1.0) > 1e-9) fail("split fractions must sum to 1");
  }
};

inline constexpr std::size_t kNegativesPerSeed = 3;

namespace detail {

// Splits `users` (already in random order) by the fractions.
inline void assign_splits(const std::vector<std::string>& users, int label,
                          const SplitFractions& f, std::vector<LabeledUser>& out) {
  const double n = static_cast<double>(users.size());
  const std::size_t n_train = static_cast<std::size_t>(std::llround(f.train * n));
  const std::size_t n_val =
      std::min(users.size() - std::min(n_train, users.size()),
               static_cast<std::size_t>(std::llround(f.validation * n)));
  for (std::size_t i = 0; i < users.size(); ++i) {
    Split s = Split::kTest;
    if (i < n_train) s = Split::kTrain;
    else if (i < n_train + n_val) s = Split::kValidation;
    if (f.test == 0.0 && s == Split::kTest) s = f.validation > 0 ? Split::kValidation : Split::kTrain;
    out.push_back({users[i], label, s});
  }
}

}  // namespace detail

// Labeled pool of the seeds plus three uniformly drawn non-seed users per
// seed, split per class by the given fractions.
inline LabeledPool build_pool(const std::vector<std::string>& seeds,
                              const std::vector<std::string>& universe, Rng& rng,
                              SplitFractions fractions = {}) {
  fractions.validate();
  const std::set<std::string> seed_set(seeds.begin(), seeds.end());
  std::vector<std::string> candidates;
  for (const auto& u : std::set<std::string>(universe.begin(), universe.end())) {
    if (!seed_set.count(u)) candidates.push_back(u);
  }
  const std::size_t need = kNegativesPerSeed * seed_set.size();
  if (candidates.size() < need) {
    fail("build_pool: need ", need, " non-seed users for ", seed_set.size(), " seeds, have ",
         candidates.size());
  }
  shuffle(candidates, rng);
  candidates.resize(need);
  std::vector<std::string> positives(seed_set.begin(), seed_set.end());
  shuffle(positives, rng);

  LabeledPool pool;
  detail::assign_splits(positives, 1, fractions, pool.entries);
  detail::assign_splits(candidates, 0, fractions, pool.entries);
  return pool;
}

// Dense per-user features, rows aligned with `users`.
struct FeatureTable {
  std::vector<std::string> users;
  Matrix values;

  std::map<std::string, std::size_t> index() const {
    std::map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < users.size(); ++i) out.emplace(users[i], i);
    return out;
  }
};

struct LogisticOptions {
  double l2 = 1e-4;
  std::size_t max_iterations = 500;
  double lr = 0.1;
};

// Binary logistic regression on standardized features, fit by full-batch
// gradient descent on the mean cross-entropy plus (l2/2)|w|^2.
class LogisticModel {
 public:
  void fit(const Matrix& x, std::span<const int> y, const LogisticOptions& options = {}) {
    const std::size_t n = x.rows(), d = x.cols();
    if (n == 0) fail("logistic regression: no training rows");
    mean_.assign(d, 0.0);
    scale_.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) axpy(1.0, x.row(i), mean_);
    for (double& m : mean_) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double c = x(i, j) - mean_[j];
        scale_[j] += c * c;
      }
    }
    for (double& s : scale_) {
      s = std::sqrt(s / static_cast<double>(n));
      s = s > 1e-12 ? 1.0 / s : 0.0;  // constant columns drop out
    }
    Matrix z(n, d);
    for (std::size_t i = 0; i < n; ++i) standardize(x.row(i), z.row(i));

    weights_.assign(d, 0.0);
    bias_ = 0.0;
    Vec grad(d);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
      std::fill(grad.begin(), grad.end(), 0.0);
      double grad_bias = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double err = logistic(bias_ + dot(weights_, z.row(i))) - y[i];
        axpy(err, z.row(i), grad);
        grad_bias += err;
      }
      for (std::size_t j = 0; j < d; ++j) {
        weights_[j] -= options.lr * (grad[j] / static_cast<double>(n) + options.l2 * weights_[j]);
      }
      bias_ -= options.lr * grad_bias / static_cast<double>(n);
    }
  }

  double predict(std::span<const double> row) const {
    Vec z(row.size());
    standardize(row, z);
    return logistic(bias_ + dot(weights_, z));
  }

  const Vec& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  static double logistic(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }

  void standardize(std::span<const double> row, std::span<double> out) const {
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean_[j]) * scale_[j];
  }

  Vec mean_, scale_, weights_;
  double bias_ = 0.0;
};

struct ClassifierScores {
  LogisticModel model;
  std::map<Split, std::vector<double>> scores;  // aligned with pool.subset(split)
  std::map<Split, std::vector<int>> labels;
};

// Fits on the train split and scores every split.
inline ClassifierScores lr_baseline(const FeatureTable& features, const LabeledPool& pool,
                                    const LogisticOptions& options = {}) {
  const auto index = features.index();
  auto row_of = [&](const std::string& user) {
    auto it = index.find(user);
    if (it == index.end()) fail("lr_baseline: no features for user '", user, "'");
    const auto row = features.values.row(it->second);
    if (!all_finite(row)) fail("lr_baseline: non-finite feature for user '", user, "'");
    return row;
  };

  const auto train = pool.subset(Split::kTrain);
  Matrix x(train.size(), features.values.cols());
  std::vector<int> y;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto row = row_of(train[i].user);
    std::copy(row.begin(), row.end(), x.row(i).begin());
    y.push_back(train[i].label);
  }
  ClassifierScores out;
  out.model.fit(x, y, options);
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    for (const auto& e : pool.subset(s)) {
      out.scores[s].push_back(out.model.predict(row_of(e.user)));
      out.labels[s].push_back(e.label);
    }
  }
  return out;
}

// Fused vector plus a trailing missing flag; users without an embedding get
// a zero vector and flag 1.
inline FeatureTable fused_features(const EmbeddingSet& fused, const std::vector<std::string>& users) {
  FeatureTable t;
  t.users = users;
  t.values = Matrix(users.size(), fused.dim + 1);
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (auto idx = fused.find(users[i])) {
      std::copy_n(fused.vectors.row(*idx).begin(), fused.dim, t.values.row(i).begin());
    } else {
      t.values(i, fused.dim) = 1.0;
    }
  }
  return t;
}

// Writes "user<TAB>label<TAB>v1,...,vd<TAB>missing_flag" in pool order.
inline void export_features(const std::string& path, const EmbeddingSet& fused,
                            const LabeledPool& pool) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '", path, "'");
  std::vector<std::string> users;
  for (const auto& e : pool.entries) users.push_back(e.user);
  const FeatureTable t = fused_features(fused, users);
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto row = t.values.row(i);
    out << users[i] << '\t' << pool.entries[i].label << '\t'
        << join_vector(row.first(fused.dim)) << '\t' << static_cast<int>(row[fused.dim]) << '\n';
  }
}

struct FeatureRow {
  std::string user;
  int label = 0;
  Vec vector;
  int missing = 0;
};

inline std::vector<FeatureRow> read_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "'");
  std::vector<FeatureRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 4) fail(path, ": line ", line_no, ": expected 4 fields");
    rows.push_back({f[0], std::stoi(f[1]), parse_vector(f[2]), std::stoi(f[3])});
  }
  return rows;
}

// Numeric reading of a literal: ISO dates become fractional years, anything
// else goes through strtod. Unparseable literals yield nullopt.
inline std::optional<double> literal_number(const std::string& literal) {
  int y = 0, m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(literal.c_str(), "%d-%d-%d%c", &y, &m, &d, &tail) == 3) {
    return y + (m - 1) / 12.0 + (d - 1) / 365.0;
  }
  char* end = nullptr;
  const double v = std::strtod(literal.c_str(), &end);
  if (end == literal.c_str() || *end != '\0' || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Raw demography features: one numeric column per attribute relation
// (sorted by relation label), 0 where a user lacks the attribute.
inline FeatureTable demography_features(const KnowledgeGraph& kg,
                                        const std::vector<std::string>& users) {
  FeatureTable t;
  t.users = users;
  t.values = Matrix(users.size(), kg.relations.size());
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < users.size(); ++i) row_of.emplace(users[i], i);
  for (const auto& a : kg.attributes) {
    auto it = row_of.find(kg.label(a.subject));
    if (it == row_of.end()) continue;
    if (auto v = literal_number(a.literal)) t.values(it->second, a.attribute.index()) = *v;
  }
  return t;
}

}  // namespace lookalike
