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

// Mini-batch SGD for the three view objectives:
//
//   structural views (ichiba, travel, family)  margin loss on L1 translation scores
//   demography                                  scaled margin loss against n-gram literal codes
//   loyalty                                     softplus of the distance to CNN([relation; value])
//
// Each epoch shuffles the training positives with the view's own RNG, sums
// subgradients over a batch, applies one SGD step and clips every entity row
// to L2 norm <= 1. Runs are bit-reproducible for a fixed seed.

#pragma once

#include <array>
#include <fstream>
#include <limits>
#include <optional>

#include "lookalike/encoders.hpp"
#include "lookalike/kg_store.hpp"
#include "lookalike/losses.hpp"

namespace lookalike {

enum class ViewKind { kDemography = 0, kLoyalty = 1, kIchiba = 2, kTravel = 3, kFamily = 4 };

inline constexpr std::size_t kNumViews = 5;
inline constexpr std::array<ViewKind, kNumViews> kAllViews = {
    ViewKind::kDemography, ViewKind::kLoyalty, ViewKind::kIchiba, ViewKind::kTravel,
    ViewKind::kFamily};

inline std::size_t view_slot(ViewKind v) { return static_cast<std::size_t>(v); }

inline const char* view_name(ViewKind v) {
  static constexpr const char* kNames[] = {"demography", "loyalty", "ichiba", "travel", "family"};
  return kNames[view_slot(v)];
}

inline char view_letter(ViewKind v) { return "dlitf"[view_slot(v)]; }

inline bool is_structural(ViewKind v) {
  return v == ViewKind::kIchiba || v == ViewKind::kTravel || v == ViewKind::kFamily;
}

inline ViewKind parse_view(std::string_view text) {
  for (ViewKind v : kAllViews) {
    if (text == view_name(v) || (text.size() == 1 && text[0] == view_letter(v))) return v;
  }
  fail("unknown view '", text, "' (expected one of d,l,i,t,f)");
}

// Parses "d,l,i,t,f" (or full names); result is in slot order, deduplicated.
inline std::vector<ViewKind> parse_views(std::string_view text) {
  std::array<bool, kNumViews> chosen{};
  for (const auto& tok : split(text, ',')) {
    const auto t = trim(tok);
    if (!t.empty()) chosen[view_slot(parse_view(t))] = true;
  }
  std::vector<ViewKind> out;
  for (ViewKind v : kAllViews) {
    if (chosen[view_slot(v)]) out.push_back(v);
  }
  if (out.empty()) fail("no views selected");
  return out;
}

// How a batch's accumulated gradient becomes a step. kSum applies the
// summed gradient as is. kRowMean divides each parameter row by the number
// of batch terms that touched it, so rows shared by the whole batch
// (relations, character and CNN parameters) take mean-sized steps while rows
// touched once take the summed step.
enum class GradientScaling { kSum, kRowMean };

inline const char* gradient_scaling_name(GradientScaling g) {
  return g == GradientScaling::kSum ? "sum" : "row_mean";
}

inline GradientScaling parse_gradient_scaling(std::string_view text) {
  if (text == "sum") return GradientScaling::kSum;
  if (text == "row_mean") return GradientScaling::kRowMean;
  fail("unknown gradient scaling '", text, "' (expected sum or row_mean)");
}

struct TrainConfig {
  std::size_t dim = 50;
  double lr = 0.01;
  double gamma = 1.0;
  double alpha = 1.0;
  std::size_t batch_size = 10000;
  std::size_t max_epochs = 500;
  int ngram_order = kDefaultNgramOrder;
  std::size_t negatives_per_positive = 1;
  std::uint64_t seed = 42;
  std::size_t patience = 20;
  // Early stopping is not considered before this epoch.
  std::size_t min_epochs = 50;
  double val_split = 0.1;
  std::size_t cnn_filters = 8;
  std::size_t cnn_width = 2;
  GradientScaling scaling = GradientScaling::kRowMean;

  void validate() const {
    if (dim == 0) fail("train: dim must be positive");
    if (!(lr >= 0.0) || !std::isfinite(lr)) fail("train: lr must be finite and >= 0");
    if (!(gamma > 0.0)) fail("train: gamma must be > 0");
    if (!(alpha > 0.0)) fail("train: alpha must be > 0");
    if (batch_size == 0) fail("train: batch_size must be positive");
    if (ngram_order < 1) fail("train: ngram order must be >= 1");
    if (negatives_per_positive == 0) fail("train: negatives must be >= 1");
    if (!(val_split >= 0.0 && val_split < 1.0)) fail("train: val_split must be in [0, 1)");
    if (cnn_width > dim) fail("train: cnn width ", cnn_width, " exceeds dim ", dim);
    if (cnn_filters == 0 || cnn_width == 0) fail("train: cnn filters and width must be positive");
  }
};

struct EpochLoss {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  // NaN when the view has no validation positives.
  double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct EmbeddingTable {
  ViewKind view = ViewKind::kIchiba;
  std::size_t dim = 0;
  std::vector<std::string> entity_labels;
  std::vector<std::string> entity_types;
  std::vector<bool> present;
  std::vector<std::string> relation_labels;
  Matrix entities;
  Matrix relations;
  CharEmbeddingTable chars;  // demography only
  CnnParams cnn;             // loyalty only

  // Present entities of type user (all present entities if none is typed user).
  std::vector<std::size_t> user_rows() const {
    std::vector<std::size_t> users, all;
    for (std::size_t e = 0; e < entity_labels.size(); ++e) {
      if (!present[e]) continue;
      all.push_back(e);
      if (entity_types[e] == kUserType) users.push_back(e);
    }
    return users.empty() ? all : users;
  }

  bool finite() const {
    if (!all_finite(entities.data()) || !all_finite(relations.data()) ||
        !all_finite(chars.data())) {
      return false;
    }
    for (auto block : cnn.blocks()) {
      if (!all_finite(block)) return false;
    }
    return true;
  }
};

struct TrainResult {
  EmbeddingTable table;
  std::vector<EpochLoss> history;
  bool early_stopped = false;
};

namespace detail {

inline void init_uniform(Matrix& m, Rng& rng, double bound) {
  for (double& x : m.data()) x = uniform(rng, -bound, bound);
}

inline void clip_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) clip_norm(m.row(i));
}

// Plain SGD on one parameter block. `counts` holds the number of batch
// terms that touched each row (rows of width `width`); ignored for kSum.
class Updater {
 public:
  Updater(GradientScaling scaling, double lr) : scaling_(scaling), lr_(lr) {}

  void apply(std::span<double> params, std::span<const double> grad,
             std::span<const std::uint32_t> counts, std::size_t width) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      double g = grad[i];
      if (scaling_ == GradientScaling::kRowMean) {
        const std::uint32_t c = counts[i / width];
        if (c == 0) continue;
        g /= static_cast<double>(c);
      }
      params[i] -= lr_ * g;
    }
  }

  void apply(Matrix& params, const Matrix& grad, std::span<const std::uint32_t> counts) {
    apply(params.data(), std::as_const(grad).data(), counts, std::max<std::size_t>(params.cols(), 1));
  }

 private:
  GradientScaling scaling_;
  double lr_;
};

// Per-row touch counters for one batch.
struct RowCounts {
  std::vector<std::uint32_t> counts;

  explicit RowCounts(std::size_t rows = 0) : counts(rows, 0) {}
  void touch(std::size_t row) { ++counts[row]; }
  void clear() { std::fill(counts.begin(), counts.end(), 0u); }
};

class StructuralObjective {
 public:
  struct Negative {
    Triple triple;
  };

  StructuralObjective(const KnowledgeGraph& kg, EmbeddingTable& table, const TrainConfig& cfg)
      : kg_(kg), table_(table), gamma_(cfg.gamma),
        grad_entities_(table.entities.rows(), table.dim),
        grad_relations_(table.relations.rows(), table.dim),
        entity_counts_(table.entities.rows()), relation_counts_(table.relations.rows()) {}

  std::size_t size() const { return kg_.triples.size(); }

  Negative sample(std::size_t i, Rng& rng) const {
    return {negative_sample_triple(kg_, kg_.triples[i], rng).triple};
  }

  double evaluate(std::size_t i, const Negative& neg, bool accumulate) {
    const Triple& p = kg_.triples[i];
    const Triple& n = neg.triple;
    const auto& E = table_.entities;
    auto r = table_.relations.row(p.relation.index());
    if (!accumulate) {
      return kge_margin_loss(transe_score(E.row(p.head.index()), r, E.row(p.tail.index())),
                             transe_score(E.row(n.head.index()), r, E.row(n.tail.index())),
                             gamma_);
    }
    const auto g = kge_loss_grad(E.row(p.head.index()), r, E.row(p.tail.index()),
                                 E.row(n.head.index()), E.row(n.tail.index()), gamma_);
    if (g.loss > 0.0) {
      add_entity(p.head.index(), g.head);
      add_entity(p.tail.index(), g.tail);
      add_entity(n.head.index(), g.neg_head);
      add_entity(n.tail.index(), g.neg_tail);
      axpy(1.0, g.relation, grad_relations_.row(p.relation.index()));
      relation_counts_.touch(p.relation.index());
    }
    return g.loss;
  }

  void zero_grad() {
    grad_entities_.fill(0.0);
    grad_relations_.fill(0.0);
    entity_counts_.clear();
    relation_counts_.clear();
  }

  void step(Updater& updater) {
    updater.apply(table_.entities, grad_entities_, entity_counts_.counts);
    updater.apply(table_.relations, grad_relations_, relation_counts_.counts);
  }

 private:
  void add_entity(std::size_t row, std::span<const double> g) {
    axpy(1.0, g, grad_entities_.row(row));
    entity_counts_.touch(row);
  }

  const KnowledgeGraph& kg_;
  EmbeddingTable& table_;
  double gamma_;
  Matrix grad_entities_;
  Matrix grad_relations_;
  RowCounts entity_counts_;
  RowCounts relation_counts_;
};

class DemographyObjective {
 public:
  using Negative = AttributeSample;

  DemographyObjective(const KnowledgeGraph& kg, EmbeddingTable& table, const TrainConfig& cfg)
      : kg_(kg), table_(table), gamma_(cfg.gamma), alpha_(cfg.alpha), order_(cfg.ngram_order),
        grad_entities_(table.entities.rows(), table.dim),
        grad_relations_(table.relations.rows(), table.dim),
        grad_chars_(table.chars.rows(), table.dim), entity_counts_(table.entities.rows()),
        relation_counts_(table.relations.rows()), char_counts_(table.chars.rows()) {}

  std::size_t size() const { return kg_.attributes.size(); }

  Negative sample(std::size_t i, Rng& rng) const {
    return negative_sample_attribute(kg_, kg_.attributes[i], rng);
  }

  double evaluate(std::size_t i, const Negative& neg, bool accumulate) {
    const AttributeTriple& p = kg_.attributes[i];
    const AttributeTriple& n = neg.triple;
    const auto& E = table_.entities;
    const auto r = table_.relations.row(p.attribute.index());
    const Vec phi_pos = ngram_encode(p.chars, table_.chars, order_);
    const Vec phi_neg = ngram_encode(n.chars, table_.chars, order_);
    if (!accumulate) {
      return demography_loss(E.row(p.subject.index()), r, phi_pos, E.row(n.subject.index()), r,
                             phi_neg, gamma_, alpha_);
    }
    const auto g = demography_loss_grad(E.row(p.subject.index()), r, phi_pos,
                                        E.row(n.subject.index()), phi_neg, gamma_, alpha_);
    if (g.loss > 0.0) {
      axpy(1.0, g.user, grad_entities_.row(p.subject.index()));
      entity_counts_.touch(p.subject.index());
      axpy(1.0, g.neg_user, grad_entities_.row(n.subject.index()));
      entity_counts_.touch(n.subject.index());
      axpy(1.0, g.relation, grad_relations_.row(p.attribute.index()));
      relation_counts_.touch(p.attribute.index());
      for (const auto& rg : ngram_encode_grad(p.chars, table_.chars, order_, g.phi_pos)) {
        axpy(1.0, rg.grad, grad_chars_.row(rg.row));
        char_counts_.touch(rg.row);
      }
      for (const auto& rg : ngram_encode_grad(n.chars, table_.chars, order_, g.phi_neg)) {
        axpy(1.0, rg.grad, grad_chars_.row(rg.row));
        char_counts_.touch(rg.row);
      }
    }
    return g.loss;
  }

  void zero_grad() {
    grad_entities_.fill(0.0);
    grad_relations_.fill(0.0);
    grad_chars_.fill(0.0);
    entity_counts_.clear();
    relation_counts_.clear();
    char_counts_.clear();
  }

  void step(Updater& updater) {
    updater.apply(table_.entities, grad_entities_, entity_counts_.counts);
    updater.apply(table_.relations, grad_relations_, relation_counts_.counts);
    updater.apply(table_.chars, grad_chars_, char_counts_.counts);
  }

 private:
  const KnowledgeGraph& kg_;
  EmbeddingTable& table_;
  double gamma_;
  double alpha_;
  int order_;
  Matrix grad_entities_;
  Matrix grad_relations_;
  Matrix grad_chars_;
  RowCounts entity_counts_;
  RowCounts relation_counts_;
  RowCounts char_counts_;
};

// Loyalty triples are (user, loyalty relation, value); the loss has no
// negative term, so Negative is empty.
class LoyaltyObjective {
 public:
  struct Negative {};

  LoyaltyObjective(const KnowledgeGraph& kg, EmbeddingTable& table, const TrainConfig&)
      : kg_(kg), table_(table), grad_entities_(table.entities.rows(), table.dim),
        grad_relations_(table.relations.rows(), table.dim),
        grad_cnn_(CnnParams::zeros(table.dim, table.cnn.filters, table.cnn.width)),
        entity_counts_(table.entities.rows()), relation_counts_(table.relations.rows()) {}

  std::size_t size() const { return kg_.triples.size(); }

  Negative sample(std::size_t, Rng&) const { return {}; }

  double evaluate(std::size_t i, const Negative&, bool accumulate) {
    const Triple& t = kg_.triples[i];
    const auto& E = table_.entities;
    const auto u = E.row(t.head.index());
    const auto r = table_.relations.row(t.relation.index());
    const auto v = E.row(t.tail.index());
    const Vec out = cnn_forward(r, v, table_.cnn);
    if (!accumulate) return loyalty_loss(u, out);
    const auto lg = loyalty_loss_grad(u, out);
    const auto cg = cnn_backward(r, v, table_.cnn, lg.cnn_out);
    axpy(1.0, lg.user, grad_entities_.row(t.head.index()));
    entity_counts_.touch(t.head.index());
    axpy(1.0, cg.rel, grad_relations_.row(t.relation.index()));
    relation_counts_.touch(t.relation.index());
    axpy(1.0, cg.val, grad_entities_.row(t.tail.index()));
    entity_counts_.touch(t.tail.index());
    ++cnn_terms_[0];
    auto dst = grad_cnn_.blocks();
    const auto src = std::as_const(cg.params).blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) axpy(1.0, src[b], dst[b]);
    return lg.loss;
  }

  void zero_grad() {
    grad_entities_.fill(0.0);
    grad_relations_.fill(0.0);
    for (auto block : grad_cnn_.blocks()) std::fill(block.begin(), block.end(), 0.0);
    entity_counts_.clear();
    relation_counts_.clear();
    cnn_terms_[0] = 0;
  }

  void step(Updater& updater) {
    updater.apply(table_.entities, grad_entities_, entity_counts_.counts);
    updater.apply(table_.relations, grad_relations_, relation_counts_.counts);
    // Every loyalty term touches every CNN parameter: one row per block.
    auto params = table_.cnn.blocks();
    const auto grads = std::as_const(grad_cnn_).blocks();
    for (std::size_t b = 0; b < params.size(); ++b) {
      updater.apply(params[b], grads[b], cnn_terms_, std::max<std::size_t>(params[b].size(), 1));
    }
  }

 private:
  const KnowledgeGraph& kg_;
  EmbeddingTable& table_;
  Matrix grad_entities_;
  Matrix grad_relations_;
  CnnParams grad_cnn_;
  RowCounts entity_counts_;
  RowCounts relation_counts_;
  std::array<std::uint32_t, 1> cnn_terms_{};
};

template <typename Objective>
TrainResult run_sgd(Objective& objective, EmbeddingTable& table, const TrainConfig& cfg,
                    Rng& rng) {
  TrainResult result;
  const std::size_t n = objective.size();
  if (n == 0) fail("train ", view_name(table.view), ": no training positives");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle(order, rng);
  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.val_split * static_cast<double>(n)));
  if (n_val >= n) n_val = n - 1;
  std::vector<std::size_t> val(order.begin(), order.begin() + n_val);
  std::vector<std::size_t> train(order.begin() + n_val, order.end());

  // Validation negatives are drawn once so the validation loss is comparable
  // across epochs.
  std::vector<typename Objective::Negative> val_negatives;
  for (std::size_t i : val) {
    for (std::size_t k = 0; k < cfg.negatives_per_positive; ++k) {
      val_negatives.push_back(objective.sample(i, rng));
    }
  }

  const std::size_t batch = std::min(cfg.batch_size, train.size());
  const std::size_t negs = cfg.negatives_per_positive;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t batch_index = 0;
  Updater updater(cfg.scaling, cfg.lr);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(train, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size(); start += batch, ++batch_index) {
      const std::size_t stop = std::min(start + batch, train.size());
      objective.zero_grad();
      for (std::size_t b = start; b < stop; ++b) {
        for (std::size_t k = 0; k < negs; ++k) {
          epoch_loss += objective.evaluate(train[b], objective.sample(train[b], rng), true);
        }
      }
      objective.step(updater);
      clip_rows(table.entities);
      if (!table.finite()) {
        fail("train ", view_name(table.view), ": non-finite parameter after batch ", batch_index,
             " (epoch ", epoch, ")");
      }
    }
    EpochLoss record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(train.size() * negs);
    if (!val.empty()) {
      double v = 0.0;
      for (std::size_t j = 0; j < val.size(); ++j) {
        for (std::size_t k = 0; k < negs; ++k) {
          v += objective.evaluate(val[j], val_negatives[j * negs + k], false);
        }
      }
      record.val_loss = v / static_cast<double>(val.size() * negs);
    }
    result.history.push_back(record);

    if (!val.empty()) {
      if (record.val_loss < best_val) {
        best_val = record.val_loss;
        since_best = 0;
      } else if (++since_best >= cfg.patience && epoch >= cfg.min_epochs) {
        result.early_stopped = true;
        break;
      }
    }
  }
  result.table = std::move(table);
  return result;
}

inline EmbeddingTable init_table(const KnowledgeGraph& kg, ViewKind view, const TrainConfig& cfg,
                                 Rng& rng) {
  EmbeddingTable t;
  t.view = view;
  t.dim = cfg.dim;
  t.entity_labels = kg.entities.labels();
  t.entity_types = kg.entity_types;
  t.relation_labels = kg.relations.labels();
  t.present.assign(kg.entities.size(), false);
  if (view == ViewKind::kDemography) {
    for (const auto& a : kg.attributes) t.present[a.subject.index()] = true;
  } else {
    for (const auto& tr : kg.triples) {
      t.present[tr.head.index()] = true;
      if (is_structural(view)) t.present[tr.tail.index()] = true;
    }
  }

  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  t.entities = Matrix(kg.entities.size(), cfg.dim);
  t.relations = Matrix(kg.relations.size(), cfg.dim);
  init_uniform(t.entities, rng, bound);
  init_uniform(t.relations, rng, bound);
  clip_rows(t.entities);
  if (view == ViewKind::kDemography) {
    t.chars = Matrix(kg.chars.size(), cfg.dim);
    init_uniform(t.chars, rng, bound);
    clip_rows(t.chars);
  }
  if (view == ViewKind::kLoyalty) {
    t.cnn = CnnParams::random(cfg.dim, cfg.cnn_filters, cfg.cnn_width, rng);
  }
  return t;
}

}  // namespace detail

// Trains one view. Structural views read kg.triples, demography reads
// kg.attributes, loyalty reads (user, loyalty relation, value) triples.
inline TrainResult train_view(const KnowledgeGraph& kg, ViewKind view, const TrainConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, view_slot(view)));
  EmbeddingTable table = detail::init_table(kg, view, cfg, rng);
  if (is_structural(view)) {
    detail::StructuralObjective objective(kg, table, cfg);
    return detail::run_sgd(objective, table, cfg, rng);
  }
  if (view == ViewKind::kDemography) {
    detail::DemographyObjective objective(kg, table, cfg);
    return detail::run_sgd(objective, table, cfg, rng);
  }
  detail::LoyaltyObjective objective(kg, table, cfg);
  return detail::run_sgd(objective, table, cfg, rng);
}

// Labeled user vectors as stored in embedding files.
struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<std::string> labels;  // sorted
  Matrix vectors;

  std::optional<std::size_t> find(const std::string& label) const {
    auto it = std::lower_bound(labels.begin(), labels.end(), label);
    if (it == labels.end() || *it != label) return std::nullopt;
    return static_cast<std::size_t>(it - labels.begin());
  }
};

inline EmbeddingSet user_embeddings(const EmbeddingTable& table) {
  EmbeddingSet out;
  out.dim = table.dim;
  const auto rows = table.user_rows();
  out.vectors = Matrix(rows.size(), table.dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.labels.push_back(table.entity_labels[rows[i]]);
    std::copy_n(table.entities.row(rows[i]).begin(), table.dim, out.vectors.row(i).begin());
  }
  return out;
}

// Format: "dim=<d> count=<n>" then "label<TAB>v1,...,vd" per row.
inline void write_embeddings(const std::string& path, const EmbeddingSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '", path, "'");
  out << "dim=" << set.dim << " count=" << set.labels.size() << "\n";
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    out << set.labels[i] << '\t' << join_vector(set.vectors.row(i)) << '\n';
  }
  if (!out) fail("write failed for '", path, "'");
}

inline EmbeddingSet read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "'");
  std::string header;
  std::getline(in, header);
  std::size_t dim = 0, count = 0;
  if (std::sscanf(header.c_str(), "dim=%zu count=%zu", &dim, &count) != 2) {
    fail(path, ": bad header '", header, "'");
  }
  EmbeddingSet set;
  set.dim = dim;
  set.vectors = Matrix(count, dim);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail(path, ": line ", row + 2, ": missing tab");
    if (row >= count) fail(path, ": more rows than header count ", count);
    const Vec v = parse_vector(std::string_view(line).substr(tab + 1));
    if (v.size() != dim) fail(path, ": line ", row + 2, ": expected ", dim, " values");
    set.labels.push_back(line.substr(0, tab));
    std::copy(v.begin(), v.end(), set.vectors.row(row).begin());
    ++row;
  }
  if (row != count) fail(path, ": header promises ", count, " rows, found ", row);
  if (!std::is_sorted(set.labels.begin(), set.labels.end())) fail(path, ": labels not sorted");
  return set;
}

inline void write_loss_history(const std::string& path, const std::vector<EpochLoss>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '", path, "'");
  out << "epoch,train_loss,val_loss\n";
  for (const auto& e : history) {
    out << e.epoch << ',' << format_sig9(e.train_loss) << ','
        << (std::isnan(e.val_loss) ? std::string() : format_sig9(e.val_loss)) << '\n';
  }
}

}  // namespace lookalike
