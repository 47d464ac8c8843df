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

// End-to-end composition: view inputs, training, fusion and the campaign
// evaluation protocol.
//
// Protocol. A campaign has seeds S and a labelled test pool (held-out group
// members plus 3 negatives each). Train and validation users are drawn by
// build_pool from S and the universe minus the test users, split 72:10.
// E-CLM expands from the train-split seeds; its threshold is picked by F1 on
// validation. E-CLM++ and the LR baseline fit logistic regression on the
// train split (fused features and raw demography literals respectively).

#pragma once

#include <array>
#include <future>
#include <map>
#include <optional>

#include "lookalike/evaluation.hpp"
#include "lookalike/expansion.hpp"
#include "lookalike/fusion.hpp"
#include "lookalike/kg_store.hpp"
#include "lookalike/synthgen.hpp"
#include "lookalike/trainer.hpp"

namespace lookalike {

struct DataPaths {
  std::string ichiba;
  std::string travel;
  std::string family;
  std::string attributes;
  std::string entity_types;
  std::string users;
};

inline DataPaths data_paths_in(const std::filesystem::path& dir, const DataFiles& files = {}) {
  return {(dir / files.ichiba).string(),     (dir / files.travel).string(),
          (dir / files.family).string(),     (dir / files.attributes).string(),
          (dir / files.entity_types).string(), (dir / files.users).string()};
}

struct ViewInputs {
  std::array<std::optional<KnowledgeGraph>, kNumViews> graphs;
  KnowledgeGraph demography;  // always loaded; raw features come from it
  std::vector<std::string> universe;
};

namespace detail {

inline bool wants(const std::vector<ViewKind>& views, ViewKind v) {
  return std::find(views.begin(), views.end(), v) != views.end();
}

inline void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) fail("no path configured for ", what);
  if (!std::filesystem::exists(path)) fail("missing input '", path, "' (", what, ")");
}

}  // namespace detail

// Loads what the selected views need. Loyalty is derived from both service
// graphs; the family view is extracted from e-commerce plus family edges
// around the universe users.
inline ViewInputs load_view_inputs(const DataPaths& paths, const std::vector<ViewKind>& views,
                                   int loyalty_threshold) {
  using detail::wants;
  for (const auto& [p, what] :
       std::vector<std::pair<std::string, std::string>>{{paths.attributes, "attributes"},
                                                        {paths.users, "user universe"}}) {
    detail::require_file(p, what);
  }
  const bool need_ichiba = wants(views, ViewKind::kIchiba) || wants(views, ViewKind::kLoyalty) ||
                           wants(views, ViewKind::kFamily);
  const bool need_travel = wants(views, ViewKind::kTravel) || wants(views, ViewKind::kLoyalty);
  if (need_ichiba) detail::require_file(paths.ichiba, "e-commerce triples");
  if (need_travel) detail::require_file(paths.travel, "travel triples");
  if (wants(views, ViewKind::kFamily)) detail::require_file(paths.family, "family edges");

  std::map<std::string, std::string> types;
  if (!paths.entity_types.empty() && std::filesystem::exists(paths.entity_types)) {
    types = load_entity_types(paths.entity_types);
  }

  ViewInputs in;
  in.universe = read_label_list(paths.users);
  std::sort(in.universe.begin(), in.universe.end());
  in.universe.erase(std::unique(in.universe.begin(), in.universe.end()), in.universe.end());
  if (in.universe.empty()) fail(paths.users, ": user universe is empty");

  in.demography = load_attributes(paths.attributes, assemble_graph("demography", {}, {}, types));
  if (wants(views, ViewKind::kDemography)) {
    in.graphs[view_slot(ViewKind::kDemography)] = in.demography;
  }

  std::optional<KnowledgeGraph> ichiba, travel;
  if (need_ichiba) ichiba = load_triples(paths.ichiba, "ichiba", types);
  if (need_travel) travel = load_triples(paths.travel, "travel", types);
  if (wants(views, ViewKind::kLoyalty)) {
    in.graphs[view_slot(ViewKind::kLoyalty)] =
        derive_loyalty({&*ichiba, &*travel}, loyalty_threshold);
  }
  if (wants(views, ViewKind::kFamily)) {
    const KnowledgeGraph edges = load_triples(paths.family, "family", types);
    std::vector<LabelTriple> merged = ichiba->label_triples();
    const auto extra = edges.label_triples();
    merged.insert(merged.end(), extra.begin(), extra.end());
    const KnowledgeGraph combined = assemble_graph("family", merged, {}, types);
    std::set<EntityId> inputs;
    for (const auto& u : in.universe) {
      if (auto id = combined.entities.find(u)) inputs.insert(*id);
    }
    in.graphs[view_slot(ViewKind::kFamily)] = family_subgraph(combined, inputs);
  }
  if (wants(views, ViewKind::kIchiba)) in.graphs[view_slot(ViewKind::kIchiba)] = std::move(ichiba);
  if (wants(views, ViewKind::kTravel)) in.graphs[view_slot(ViewKind::kTravel)] = std::move(travel);
  return in;
}

using ViewConfigs = std::array<TrainConfig, kNumViews>;
using ViewResults = std::array<std::optional<TrainResult>, kNumViews>;

// Trains the selected views; `parallel` runs them on separate threads. Each
// view owns its RNG stream, so results do not depend on scheduling.
inline ViewResults train_views(const ViewInputs& in, const std::vector<ViewKind>& views,
                               const ViewConfigs& configs, bool parallel) {
  ViewResults out;
  if (!parallel) {
    for (ViewKind v : views) {
      const auto& kg = in.graphs[view_slot(v)];
      if (!kg) fail("view ", view_name(v), " has no input graph");
      out[view_slot(v)] = train_view(*kg, v, configs[view_slot(v)]);
    }
    return out;
  }
  std::vector<std::pair<ViewKind, std::future<TrainResult>>> jobs;
  for (ViewKind v : views) {
    const auto& kg = in.graphs[view_slot(v)];
    if (!kg) fail("view ", view_name(v), " has no input graph");
    jobs.emplace_back(v, std::async(std::launch::async, [&kg, v, &configs] {
                        return train_view(*kg, v, configs[view_slot(v)]);
                      }));
  }
  for (auto& [v, job] : jobs) out[view_slot(v)] = job.get();
  return out;
}

inline std::array<std::optional<EmbeddingSet>, kNumViews> view_embeddings(
    const ViewResults& results) {
  std::array<std::optional<EmbeddingSet>, kNumViews> out;
  for (std::size_t i = 0; i < kNumViews; ++i) {
    if (results[i]) out[i] = user_embeddings(results[i]->table);
  }
  return out;
}

struct EvalConfig {
  SplitFractions fractions;
  ScoringMode mode = ScoringMode::kCentroid;
  std::vector<std::string> methods = {"E-CLM", "E-CLM++", "LR"};
  LogisticOptions logistic;
  std::uint64_t seed = 42;

  void validate() const {
    fractions.validate();
    if (methods.empty()) fail("eval: no methods configured");
    for (const auto& m : methods) {
      if (m != "E-CLM" && m != "E-CLM++" && m != "LR") {
        fail("eval: unknown method '", m, "' (expected E-CLM, E-CLM++ or LR)");
      }
    }
  }
};

struct MethodReport {
  std::string method;
  MetricReport metrics;
  double precision_at_k = 0.0;  // k = number of test positives
  double validation_pr_auc = std::numeric_limits<double>::quiet_NaN();
};

struct EvaluationOutcome {
  LabeledPool pool;  // train + validation from build_pool, test from the campaign
  std::vector<MethodReport> reports;

  const MethodReport& report(const std::string& method) const {
    for (const auto& r : reports) {
      if (r.method == method) return r;
    }
    fail("no report for method '", method, "'");
  }
};

// Train/validation pool around the seeds plus the campaign test pool.
inline LabeledPool campaign_pool(const std::vector<std::string>& seeds,
                                 const std::vector<std::pair<std::string, int>>& test_pool,
                                 const std::vector<std::string>& universe,
                                 const SplitFractions& fractions, Rng& rng) {
  fractions.validate();
  std::set<std::string> excluded;
  for (const auto& [u, y] : test_pool) excluded.insert(u);
  for (const auto& s : seeds) {
    if (excluded.count(s)) fail("seed user '", s, "' also appears in the test pool");
  }
  std::vector<std::string> rest;
  for (const auto& u : universe) {
    if (!excluded.count(u)) rest.push_back(u);
  }
  const double tv = fractions.train + fractions.validation;
  LabeledPool pool = build_pool(seeds, rest, rng, {fractions.train / tv, fractions.validation / tv, 0.0});
  for (const auto& [u, y] : test_pool) pool.entries.push_back({u, y, Split::kTest});
  return pool;
}

namespace detail {

struct SplitScores {
  std::vector<double> scores;
  std::vector<int> labels;
};

inline MethodReport finish_report(std::string method, const SplitScores& val,
                                  const SplitScores& test) {
  MethodReport r;
  r.method = std::move(method);
  const double threshold = select_threshold_f1(val.scores, val.labels);
  r.metrics = precision_accuracy(test.scores, test.labels, threshold);
  r.metrics.pr_auc = pr_auc(test.scores, test.labels);
  r.validation_pr_auc = pr_auc(val.scores, val.labels);
  std::size_t k = 0;
  for (int y : test.labels) k += y == 1;
  r.precision_at_k = precision_at_k(test.scores, test.labels, k);
  return r;
}

// Users without a fused embedding score -1, the cosine floor.
inline constexpr double kMissingScore = -1.0;

}  // namespace detail

inline MethodReport evaluate_eclm(const EmbeddingSet& fused, const LabeledPool& pool,
                                  ScoringMode mode) {
  std::vector<std::string> seed_labels;
  for (const auto& e : pool.subset(Split::kTrain)) {
    if (e.label == 1 && fused.find(e.user)) seed_labels.push_back(e.user);
  }
  if (seed_labels.empty()) fail("E-CLM: no train-split seed has a fused embedding");
  const SeedList seeds = resolve_seeds(fused, seed_labels);

  std::vector<std::size_t> candidates;
  for (const auto& e : pool.entries) {
    if (e.split == Split::kTrain) continue;
    if (auto idx = fused.find(e.user)) candidates.push_back(*idx);
  }
  std::map<std::size_t, double> score_of;
  for (const auto& s : score_candidates(fused, seeds, candidates, mode)) score_of[s.user] = s.score;

  auto collect = [&](Split split) {
    detail::SplitScores out;
    for (const auto& e : pool.subset(split)) {
      const auto idx = fused.find(e.user);
      out.scores.push_back(idx ? score_of.at(*idx) : detail::kMissingScore);
      out.labels.push_back(e.label);
    }
    return out;
  };
  return detail::finish_report("E-CLM", collect(Split::kValidation), collect(Split::kTest));
}

inline MethodReport evaluate_classifier(std::string method, const FeatureTable& features,
                                        const LabeledPool& pool, const LogisticOptions& options) {
  const ClassifierScores scores = lr_baseline(features, pool, options);
  auto collect = [&](Split split) {
    return detail::SplitScores{scores.scores.at(split), scores.labels.at(split)};
  };
  return detail::finish_report(std::move(method), collect(Split::kValidation),
                               collect(Split::kTest));
}

inline std::vector<std::string> pool_users(const LabeledPool& pool) {
  std::vector<std::string> users;
  for (const auto& e : pool.entries) users.push_back(e.user);
  return users;
}

inline EvaluationOutcome evaluate_campaign(const EmbeddingSet& fused,
                                           const KnowledgeGraph& demography,
                                           const std::vector<std::string>& seeds,
                                           const std::vector<std::pair<std::string, int>>& test_pool,
                                           const std::vector<std::string>& universe,
                                           const EvalConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, 101));
  EvaluationOutcome out;
  out.pool = campaign_pool(seeds, test_pool, universe, cfg.fractions, rng);
  const auto users = pool_users(out.pool);
  for (const auto& method : cfg.methods) {
    if (method == "E-CLM") {
      out.reports.push_back(evaluate_eclm(fused, out.pool, cfg.mode));
    } else if (method == "E-CLM++") {
      out.reports.push_back(
          evaluate_classifier(method, fused_features(fused, users), out.pool, cfg.logistic));
    } else {
      out.reports.push_back(
          evaluate_classifier(method, demography_features(demography, users), out.pool, cfg.logistic));
    }
  }
  return out;
}

// "method,precision,pr_auc,accuracy,threshold" at 6 decimals.
inline void write_report(const std::string& path, const std::vector<MethodReport>& reports) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '", path, "'");
  out << "method,precision,pr_auc,accuracy,threshold\n";
  for (const auto& r : reports) {
    out << r.method << ',' << format_fixed(r.metrics.precision, 6) << ','
        << format_fixed(r.metrics.pr_auc, 6) << ',' << format_fixed(r.metrics.accuracy, 6) << ','
        << format_fixed(r.metrics.threshold, 6) << '\n';
  }
}

struct ExperimentConfig {
  DataPaths paths;
  std::string seeds_path;
  std::string test_pool_path;
  std::vector<ViewKind> views{kAllViews.begin(), kAllViews.end()};
  ViewConfigs train;
  int loyalty_threshold = 5;
  int fusion_iterations = 1;
  EvalConfig eval;
  bool parallel_views = false;
};

struct ExperimentResult {
  ViewResults views;
  FusedSet fused;
  EvaluationOutcome outcome;
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    fail("stage ", name, " failed: ", e.what());
  }
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult r;
  const ViewInputs in = detail::stage("load", [&] {
    return load_view_inputs(cfg.paths, cfg.views, cfg.loyalty_threshold);
  });
  r.views = detail::stage("train", [&] {
    return train_views(in, cfg.views, cfg.train, cfg.parallel_views);
  });
  r.fused = detail::stage("fuse", [&] {
    return fuse_sets(view_embeddings(r.views), in.universe, cfg.fusion_iterations);
  });
  r.outcome = detail::stage("eval", [&] {
    return evaluate_campaign(r.fused.embeddings, in.demography, read_label_list(cfg.seeds_path),
                             read_test_pool(cfg.test_pool_path), in.universe, cfg.eval);
  });
  return r;
}

}  // namespace lookalike
