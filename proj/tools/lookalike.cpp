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

// lookalike: stage-file CLI over the pipeline.
//
//   lookalike [--config F] [--seed S] [--out DIR] [--views d,l,i,t,f] <command>
//
// Commands: gen, train, fuse, expand, eval, gridsearch.

#include <CLI11.hpp>
#include <iostream>

#include "lookalike/lookalike.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-view lookalike audience expansion"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::string views;
  app.add_option("--config", config_path, "Sectioned INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for every stochastic component");
  app.add_option("--out", out, "Output directory shared by all stages");
  app.add_option("--views", views, "Views to use, any of d,l,i,t,f");

  bool parallel_views = false;
  std::optional<int> fusion_iters;
  std::optional<std::string> mode;
  std::optional<double> threshold;
  std::optional<std::size_t> top_n;
  bool use_index = false;

  app.add_subcommand("gen", "Generate a synthetic dataset and campaign");
  auto* train = app.add_subcommand("train", "Train the selected views");
  train->add_flag("--parallel-views", parallel_views, "Train views on separate threads");
  auto* fuse = app.add_subcommand("fuse", "Fuse view embeddings per user");
  fuse->add_option("--fusion-iters", fusion_iters, "Weight re-estimation rounds (1 = plain mean)");
  auto* expand = app.add_subcommand("expand", "Expand the seed list");
  expand->add_option("--mode", mode, "centroid or max-sim");
  auto* thr = expand->add_option("--threshold", threshold, "Keep candidates with score >= T");
  expand->add_option("--top-n", top_n, "Keep the n best candidates")->excludes(thr);
  expand->add_flag("--index", use_index, "Retrieve candidates through the partition index");
  app.add_subcommand("eval", "Evaluate E-CLM, E-CLM++ and the LR baseline");
  auto* grid = app.add_subcommand("gridsearch", "Grid over dim x lr x gamma");
  grid->add_flag("--parallel-views", parallel_views, "Train views on separate threads");

  CLI11_PARSE(app, argc, argv);

  try {
    lookalike::StageContext ctx;
    ctx.config = config_path.empty() ? lookalike::parse_run_config("")
                                     : lookalike::load_run_config(config_path);
    ctx.config_path = config_path;
    ctx.out = out;
    auto& cfg = ctx.config;
    if (seed) cfg.set_seed(*seed);
    if (!views.empty()) cfg.views = lookalike::parse_views(views);
    if (parallel_views) cfg.parallel_views = true;
    if (fusion_iters) {
      if (*fusion_iters < 1) lookalike::fail("--fusion-iters must be >= 1");
      cfg.fusion_iterations = *fusion_iters;
    }
    if (mode) cfg.expansion.mode = lookalike::parse_scoring_mode(*mode);
    if (threshold) {
      lookalike::validate_threshold(*threshold);
      cfg.expansion.threshold = threshold;
      cfg.expansion.top_n.reset();
    }
    if (top_n) {
      if (*top_n == 0) lookalike::fail("--top-n must be >= 1");
      cfg.expansion.top_n = top_n;
      cfg.expansion.threshold.reset();
    }
    if (use_index) cfg.expansion.use_index = true;

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "gen") lookalike::cmd_gen(ctx);
    else if (command == "train") lookalike::cmd_train(ctx);
    else if (command == "fuse") lookalike::cmd_fuse(ctx);
    else if (command == "expand") lookalike::cmd_expand(ctx);
    else if (command == "eval") lookalike::cmd_eval(ctx);
    else lookalike::cmd_gridsearch(ctx);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
