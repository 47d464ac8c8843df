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

// Stage commands over an output directory:
//
//   <out>/data/            gen: service triples, attributes, groups, campaign
//   <out>/views/           train: view_<name>.emb, view_<name>.loss.csv
//   <out>/fused.emb        fuse (+ fused.weights.tsv)
//   <out>/expand.csv       expand
//   <out>/report.csv       eval (+ features.tsv)
//   <out>/gridsearch.csv   gridsearch
//
// Every stage writes <out>/<stage>.manifest.json.

#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>

#include "lookalike/config.hpp"

namespace lookalike {

namespace fs = std::filesystem;

struct StageContext {
  RunConfig config;
  fs::path out;
  std::string config_path;  // empty when running on built-in defaults
  std::ostream* log = &std::cout;
};

struct StageResult {
  std::vector<std::string> outputs;
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string views_arg(const std::vector<ViewKind>& views) {
  std::string s;
  for (ViewKind v : views) {
    if (!s.empty()) s += ',';
    s += view_letter(v);
  }
  return s;
}

// Configured path (relative to the config file) or the default under <out>/data.
inline std::string input_path(const StageContext& ctx, const std::string& configured,
                              const std::string& file) {
  if (configured.empty()) return (ctx.out / "data" / file).string();
  const fs::path p(configured);
  return (p.is_absolute() || ctx.config.base_dir.empty() ? p : ctx.config.base_dir / p).string();
}

inline void require_upstream(const std::string& path, const std::string& producer) {
  if (!fs::exists(path)) {
    fail("missing '", path, "'; it is produced by `", producer, "`, run that stage first");
  }
}

inline void write_manifest(const StageContext& ctx, const std::string& stage,
                           const std::vector<std::string>& inputs, const StageResult& result,
                           double seconds, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json m;
  m["stage"] = stage;
  m["config_path"] = ctx.config_path;
  m["config_hash"] = hex64(ctx.config.hash());
  m["config_text"] = ctx.config.source;
  m["seed"] = ctx.config.seed;
  m["views"] = views_arg(ctx.config.views);
  m["parallel_views"] = ctx.config.parallel_views;
  m["wall_time_seconds"] = seconds;
  m["inputs"] = inputs;
  m["outputs"] = result.outputs;
  m["command"] = "lookalike " + stage + (ctx.config_path.empty() ? "" : " --config " + ctx.config_path) +
                 " --seed " + std::to_string(ctx.config.seed) + " --out " + ctx.out.string() +
                 " --views " + views_arg(ctx.config.views);
  m["details"] = std::move(extra);
  const fs::path path = ctx.out / (stage + ".manifest.json");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '", path.string(), "'");
  out << m.dump(2) << '\n';
}

template <typename F>
StageResult timed_stage(const StageContext& ctx, const std::string& stage,
                        const std::vector<std::string>& inputs, F&& body) {
  fs::create_directories(ctx.out);
  const auto start = std::chrono::steady_clock::now();
  nlohmann::json extra = nlohmann::json::object();
  StageResult result = body(extra);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(ctx, stage, inputs, result, seconds, std::move(extra));
  return result;
}

inline DataPaths data_paths(const StageContext& ctx) {
  const auto& in = ctx.config.inputs;
  const DataFiles f;
  return {input_path(ctx, in.ichiba, f.ichiba),         input_path(ctx, in.travel, f.travel),
          input_path(ctx, in.family, f.family),         input_path(ctx, in.attributes, f.attributes),
          input_path(ctx, in.entity_types, f.entity_types), input_path(ctx, in.users, f.users)};
}

inline std::string seeds_path(const StageContext& ctx) {
  return input_path(ctx, ctx.config.inputs.seeds, "seeds.txt");
}
inline std::string test_pool_path(const StageContext& ctx) {
  return input_path(ctx, ctx.config.inputs.test_pool, "test_pool.tsv");
}
inline std::string groups_path(const StageContext& ctx) {
  return input_path(ctx, ctx.config.inputs.groups, DataFiles{}.groups);
}

inline std::vector<std::string> data_inputs(const DataPaths& p, const std::vector<ViewKind>& views) {
  std::vector<std::string> files = {p.attributes, p.users};
  auto wants_any = [&](std::initializer_list<ViewKind> vs) {
    for (ViewKind v : vs) {
      if (wants(views, v)) return true;
    }
    return false;
  };
  if (wants_any({ViewKind::kIchiba, ViewKind::kLoyalty, ViewKind::kFamily})) files.push_back(p.ichiba);
  if (wants_any({ViewKind::kTravel, ViewKind::kLoyalty})) files.push_back(p.travel);
  if (wants(views, ViewKind::kFamily)) files.push_back(p.family);
  return files;
}

}  // namespace detail

inline fs::path view_embedding_path(const fs::path& out, ViewKind v) {
  return out / "views" / (std::string("view_") + view_name(v) + ".emb");
}
inline fs::path view_loss_path(const fs::path& out, ViewKind v) {
  return out / "views" / (std::string("view_") + view_name(v) + ".loss.csv");
}
inline fs::path fused_path(const fs::path& out) { return out / "fused.emb"; }
inline fs::path fused_weights_path(const fs::path& out) { return out / "fused.weights.tsv"; }

inline StageResult cmd_gen(const StageContext& ctx) {
  return detail::timed_stage(ctx, "gen", {}, [&](nlohmann::json& extra) {
    const RunConfig& cfg = ctx.config;
    const fs::path dir = ctx.out / "data";
    const GeneratedData data = generate(cfg.gen);
    write_generated(dir, data);
    Rng rng(mix_seed(cfg.seed, 7));
    const Campaign campaign = make_campaign(data.groups, cfg.target_group, cfg.seed_fraction, rng);
    write_label_list((dir / "seeds.txt").string(), campaign.seeds);
    write_test_pool((dir / "test_pool.tsv").string(), campaign);
    extra["users"] = data.users.size();
    extra["seeds"] = campaign.seeds.size();
    extra["held_out"] = campaign.held_out.size();
    extra["negatives"] = campaign.negatives.size();
    *ctx.log << "gen: " << data.users.size() << " users, " << data.ichiba.size()
             << " e-commerce triples, " << data.travel.size() << " travel triples, campaign group "
             << cfg.target_group << " with " << campaign.seeds.size() << " seeds\n";
    StageResult r;
    const DataFiles f;
    for (const auto& name : {f.ichiba, f.travel, f.family, f.attributes, f.entity_types, f.groups,
                             f.users, std::string("seeds.txt"), std::string("test_pool.tsv")}) {
      r.outputs.push_back((dir / name).string());
    }
    return r;
  });
}

inline StageResult cmd_train(const StageContext& ctx) {
  const DataPaths paths = detail::data_paths(ctx);
  const auto inputs = detail::data_inputs(paths, ctx.config.views);
  for (const auto& p : inputs) detail::require_upstream(p, "gen");
  return detail::timed_stage(ctx, "train", inputs, [&](nlohmann::json& extra) {
    const RunConfig& cfg = ctx.config;
    const ViewInputs in = load_view_inputs(paths, cfg.views, cfg.loyalty_threshold);
    const ViewResults results = train_views(in, cfg.views, cfg.train, cfg.parallel_views);
    fs::create_directories(ctx.out / "views");
    StageResult r;
    for (ViewKind v : cfg.views) {
      const auto& res = *results[view_slot(v)];
      const EmbeddingSet users = user_embeddings(res.table);
      write_embeddings(view_embedding_path(ctx.out, v).string(), users);
      write_loss_history(view_loss_path(ctx.out, v).string(), res.history);
      r.outputs.push_back(view_embedding_path(ctx.out, v).string());
      r.outputs.push_back(view_loss_path(ctx.out, v).string());
      extra[view_name(v)] = {{"epochs", res.history.size()},
                             {"early_stopped", res.early_stopped},
                             {"users", users.labels.size()}};
      *ctx.log << "train " << view_name(v) << ": " << users.labels.size() << " users, "
               << res.history.size() << " epochs, final loss "
               << format_sig9(res.history.back().train_loss) << "\n";
    }
    return r;
  });
}

inline StageResult cmd_fuse(const StageContext& ctx) {
  const RunConfig& cfg = ctx.config;
  const std::string users_path = detail::data_paths(ctx).users;
  std::vector<std::string> inputs = {users_path};
  detail::require_upstream(users_path, "gen");
  for (ViewKind v : cfg.views) {
    inputs.push_back(view_embedding_path(ctx.out, v).string());
    detail::require_upstream(inputs.back(), "train");
  }
  return detail::timed_stage(ctx, "fuse", inputs, [&](nlohmann::json& extra) {
    std::array<std::optional<EmbeddingSet>, kNumViews> views;
    for (ViewKind v : cfg.views) {
      views[view_slot(v)] = read_embeddings(view_embedding_path(ctx.out, v).string());
    }
    const FusedSet fused = fuse_sets(views, read_label_list(users_path), cfg.fusion_iterations);
    write_fused(fused_path(ctx.out).string(), fused_weights_path(ctx.out).string(), fused);
    const auto degenerate = std::count(fused.degenerate.begin(), fused.degenerate.end(), true);
    extra["users"] = fused.embeddings.labels.size();
    extra["degenerate_weights"] = degenerate;
    *ctx.log << "fuse: " << fused.embeddings.labels.size() << " users, " << degenerate
             << " with uniform fallback weights\n";
    return StageResult{{fused_path(ctx.out).string(), fused_weights_path(ctx.out).string()}};
  });
}

inline StageResult cmd_expand(const StageContext& ctx) {
  const RunConfig& cfg = ctx.config;
  const std::string seeds_file = detail::seeds_path(ctx);
  detail::require_upstream(fused_path(ctx.out).string(), "fuse");
  detail::require_upstream(seeds_file, "gen");
  return detail::timed_stage(ctx, "expand", {fused_path(ctx.out).string(), seeds_file},
                             [&](nlohmann::json& extra) {
    const EmbeddingSet fused = read_embeddings(fused_path(ctx.out).string());
    const SeedList seeds = resolve_seeds(fused, read_label_list(seeds_file), "campaign");
    const auto& e = cfg.expansion;

    std::vector<std::size_t> candidates;
    if (e.use_index) {
      if (e.mode != ScoringMode::kCentroid) fail("expand: the index supports centroid scoring only");
      Vec centroid(fused.dim, 0.0);
      for (std::size_t s : seeds.users) axpy(1.0, fused.vectors.row(s), centroid);
      const PartitionIndex index(fused.vectors, {});
      const std::size_t probes = e.probes ? e.probes : index.default_probes();
      const std::size_t k = e.top_n ? *e.top_n + seeds.users.size() : fused.labels.size();
      for (const auto& hit : index.query(centroid, k, probes)) candidates.push_back(hit.user);
      extra["index_partitions"] = index.partitions();
      extra["index_probes"] = probes;
      if (candidates.empty()) fail("expand: the index returned no candidates");
    }
    const auto scored = score_candidates(fused, seeds, candidates, e.mode);
    ExpansionResult result;
    if (e.threshold) {
      result = expand_threshold(scored, *e.threshold, e.mode);
    } else if (e.top_n) {
      result = expand_top_n(scored, *e.top_n, e.mode);
    } else {
      result = expand_top_n(scored, std::max<std::size_t>(scored.size(), 1), e.mode);
    }
    const fs::path out = ctx.out / "expand.csv";
    write_expansion_csv(out.string(), result, fused);
    extra["selected"] = result.ranked.size();
    extra["mode"] = scoring_mode_name(e.mode);
    *ctx.log << "expand: " << seeds.users.size() << " seeds -> " << result.ranked.size()
             << " users (" << scoring_mode_name(e.mode) << ")\n";
    return StageResult{{out.string()}};
  });
}

inline void print_report(std::ostream& os, const std::vector<MethodReport>& reports) {
  os << "method     precision  pr_auc   accuracy  threshold\n";
  for (const auto& r : reports) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-10s %-10.4f %-8.4f %-9.4f %.4f\n", r.method.c_str(),
                  r.metrics.precision, r.metrics.pr_auc, r.metrics.accuracy, r.metrics.threshold);
    os << line;
  }
}

inline StageResult cmd_eval(const StageContext& ctx) {
  const RunConfig& cfg = ctx.config;
  const DataPaths paths = detail::data_paths(ctx);
  const std::string seeds_file = detail::seeds_path(ctx);
  const std::string pool_file = detail::test_pool_path(ctx);
  detail::require_upstream(fused_path(ctx.out).string(), "fuse");
  for (const auto& p : {seeds_file, pool_file, paths.attributes, paths.users}) {
    detail::require_upstream(p, "gen");
  }
  const std::vector<std::string> inputs = {fused_path(ctx.out).string(), seeds_file, pool_file,
                                           paths.attributes, paths.users};
  return detail::timed_stage(ctx, "eval", inputs, [&](nlohmann::json& extra) {
    const EmbeddingSet fused = read_embeddings(fused_path(ctx.out).string());
    std::map<std::string, std::string> types;
    if (fs::exists(paths.entity_types)) types = load_entity_types(paths.entity_types);
    const KnowledgeGraph demography =
        load_attributes(paths.attributes, assemble_graph("demography", {}, {}, types));
    auto universe = read_label_list(paths.users);
    const EvaluationOutcome outcome =
        evaluate_campaign(fused, demography, read_label_list(seeds_file), read_test_pool(pool_file),
                          universe, cfg.eval);
    StageResult r;
    const fs::path report = ctx.out / "report.csv";
    write_report(report.string(), outcome.reports);
    r.outputs.push_back(report.string());
    if (cfg.export_features) {
      const fs::path features = ctx.out / "features.tsv";
      export_features(features.string(), fused, outcome.pool);
      r.outputs.push_back(features.string());
    }
    for (const auto& m : outcome.reports) {
      extra[m.method] = {{"precision_at_k", m.precision_at_k},
                         {"validation_pr_auc", m.validation_pr_auc},
                         {"tp", m.metrics.tp}, {"fp", m.metrics.fp},
                         {"tn", m.metrics.tn}, {"fn", m.metrics.fn}};
    }
    print_report(*ctx.log, outcome.reports);
    return r;
  });
}

struct GridRow {
  std::size_t dim = 0;
  double lr = 0.0;
  double gamma = 0.0;
  double validation_pr_auc = 0.0;
  double test_pr_auc = 0.0;
};

inline StageResult cmd_gridsearch(const StageContext& ctx) {
  const RunConfig& cfg = ctx.config;
  const DataPaths paths = detail::data_paths(ctx);
  auto inputs = detail::data_inputs(paths, cfg.views);
  inputs.push_back(detail::seeds_path(ctx));
  inputs.push_back(detail::test_pool_path(ctx));
  for (const auto& p : inputs) detail::require_upstream(p, "gen");
  return detail::timed_stage(ctx, "gridsearch", inputs, [&](nlohmann::json& extra) {
    const ViewInputs in = load_view_inputs(paths, cfg.views, cfg.loyalty_threshold);
    const auto seeds = read_label_list(detail::seeds_path(ctx));
    const auto test_pool = read_test_pool(detail::test_pool_path(ctx));
    EvalConfig eval = cfg.eval;
    eval.methods = {"E-CLM"};

    std::vector<GridRow> rows;
    for (std::size_t dim : cfg.grid.dims) {
      for (double lr : cfg.grid.lrs) {
        for (double gamma : cfg.grid.gammas) {
          ViewConfigs train = cfg.train;
          for (auto& t : train) {
            t.dim = dim;
            t.lr = lr;
            t.gamma = gamma;
          }
          const ViewResults results = train_views(in, cfg.views, train, cfg.parallel_views);
          const FusedSet fused = fuse_sets(view_embeddings(results), in.universe, cfg.fusion_iterations);
          const auto outcome =
              evaluate_campaign(fused.embeddings, in.demography, seeds, test_pool, in.universe, eval);
          const auto& rep = outcome.report("E-CLM");
          rows.push_back({dim, lr, gamma, rep.validation_pr_auc, rep.metrics.pr_auc});
          *ctx.log << "grid d=" << dim << " lr=" << lr << " gamma=" << gamma
                   << " val_pr_auc=" << format_fixed(rep.validation_pr_auc, 4) << "\n";
        }
      }
    }
    // First maximum in grid order wins ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].validation_pr_auc > rows[best].validation_pr_auc) best = i;
    }
    const fs::path out = ctx.out / "gridsearch.csv";
    std::ofstream csv(out, std::ios::binary);
    if (!csv) fail("cannot write '", out.string(), "'");
    csv << "dim,lr,gamma,val_pr_auc,test_pr_auc\n";
    for (const auto& r : rows) {
      csv << r.dim << ',' << format_sig9(r.lr) << ',' << format_sig9(r.gamma) << ','
          << format_fixed(r.validation_pr_auc, 6) << ',' << format_fixed(r.test_pr_auc, 6) << '\n';
    }
    extra["best"] = {{"dim", rows[best].dim}, {"lr", rows[best].lr}, {"gamma", rows[best].gamma},
                     {"val_pr_auc", rows[best].validation_pr_auc}};
    *ctx.log << "best: d=" << rows[best].dim << " lr=" << rows[best].lr
             << " gamma=" << rows[best].gamma
             << " val_pr_auc=" << format_fixed(rows[best].validation_pr_auc, 4) << "\n";
    return StageResult{{out.string()}};
  });
}

}  // namespace lookalike
