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

// Run configuration: a sectioned INI file. Every key is optional; unknown
// sections and keys are rejected. See configs/example.ini for the full list.

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lookalike/experiment.hpp"

namespace lookalike {

struct GridConfig {
  std::vector<std::size_t> dims = {50, 75, 100};
  std::vector<double> lrs = {0.001, 0.01, 0.1};
  std::vector<double> gammas = {1.0, 5.0, 10.0};
};

struct ExpansionConfig {
  ScoringMode mode = ScoringMode::kCentroid;
  std::optional<double> threshold;
  std::optional<std::size_t> top_n;
  bool use_index = false;
  std::size_t probes = 0;  // 0 = index default
};

// Input paths; empty entries default to files under <out>/data.
struct InputPaths {
  std::string ichiba, travel, family, attributes, entity_types, users, seeds, test_pool, groups;
};

struct RunConfig {
  std::string source;  // raw text, hashed into manifests
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::uint64_t seed = 42;
  std::vector<ViewKind> views{kAllViews.begin(), kAllViews.end()};
  bool parallel_views = false;
  InputPaths inputs;
  int loyalty_threshold = 5;
  ViewConfigs train;
  int fusion_iterations = 1;
  ExpansionConfig expansion;
  EvalConfig eval;
  bool export_features = true;
  GenConfig gen;
  std::size_t target_group = 1;
  double seed_fraction = 0.2;
  GridConfig grid;

  std::uint64_t hash() const { return fnv1a(source); }

  // Seeds every stochastic component from one value.
  void set_seed(std::uint64_t s) {
    seed = s;
    for (auto& t : train) t.seed = s;
    eval.seed = s;
    gen.seed = s;
  }
};

namespace detail {

using boost::property_tree::ptree;

template <typename T>
T parse_value(const std::string& section, const std::string& key, const std::string& text) {
  const std::string t(trim(text));
  std::istringstream in(t);
  T value{};
  if constexpr (std::is_same_v<T, bool>) {
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    fail("config [", section, "] ", key, ": expected a boolean, got '", t, "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    return t;
  } else {
    if constexpr (std::is_unsigned_v<T>) {
      if (!t.empty() && t[0] == '-') fail("config [", section, "] ", key, ": must be >= 0");
    }
    in >> value;
    if (!in || !in.eof()) fail("config [", section, "] ", key, ": cannot parse '", t, "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& section, const std::string& key,
                          const std::string& text) {
  std::vector<T> out;
  for (const auto& tok : split(text, ',')) out.push_back(parse_value<T>(section, key, tok));
  return out;
}

// Binds keys of one section to setters; rejects anything unbound.
class SectionReader {
 public:
  SectionReader(std::string name, const ptree& tree) : name_(std::move(name)), tree_(tree) {}

  template <typename T>
  SectionReader& bind(const std::string& key, T& target) {
    handlers_[key] = [this, key, &target](const std::string& v) {
      target = parse_value<T>(name_, key, v);
    };
    return *this;
  }

  SectionReader& bind_fn(const std::string& key, std::function<void(const std::string&)> fn) {
    handlers_[key] = std::move(fn);
    return *this;
  }

  void run() const {
    for (const auto& [key, child] : tree_) {
      auto it = handlers_.find(key);
      if (it == handlers_.end()) fail("config: unknown key '", key, "' in [", name_, "]");
      it->second(child.data());
    }
  }

 private:
  std::string name_;
  const ptree& tree_;
  std::map<std::string, std::function<void(const std::string&)>> handlers_;
};

inline void bind_train(SectionReader& r, TrainConfig& t) {
  r.bind("dim", t.dim).bind("lr", t.lr).bind("gamma", t.gamma).bind("alpha", t.alpha);
  r.bind("batch_size", t.batch_size).bind("max_epochs", t.max_epochs);
  r.bind("ngram_order", t.ngram_order).bind("negatives", t.negatives_per_positive);
  r.bind("patience", t.patience).bind("min_epochs", t.min_epochs).bind("val_split", t.val_split);
  r.bind("cnn_filters", t.cnn_filters).bind("cnn_width", t.cnn_width);
  r.bind_fn("scaling", [&t](const std::string& v) { t.scaling = parse_gradient_scaling(trim(v)); });
}

// Activity rows: "ichiba:travel" per group, comma separated.
inline std::vector<ServiceActivity> parse_activity(const std::string& text) {
  std::vector<ServiceActivity> out;
  for (const auto& tok : split(text, ',')) {
    const auto parts = split(trim(tok), ':');
    if (parts.size() != 2) fail("config [gen] activity: expected ichiba:travel pairs");
    out.push_back({parse_value<double>("gen", "activity", parts[0]),
                   parse_value<double>("gen", "activity", parts[1])});
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text,
                                  const std::filesystem::path& base_dir = {}) {
  using detail::SectionReader;
  RunConfig cfg;
  cfg.source = text;
  cfg.base_dir = base_dir;
  detail::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail("config: line ", e.line(), ": ", e.message());
  }

  // [train] applies to every view; [train.<view>] sections override it and
  // are applied afterwards regardless of file order.
  std::vector<std::pair<ViewKind, const detail::ptree*>> view_sections;
  std::optional<std::uint64_t> seed;
  for (const auto& [name, section] : tree) {
    if (!section.data().empty() && section.empty()) {
      fail("config: key '", name, "' outside any section");
    }
    if (name == "run") {
      SectionReader r(name, section);
      r.bind_fn("seed", [&](const std::string& v) {
        seed = detail::parse_value<std::uint64_t>(name, "seed", v);
      });
      r.bind_fn("views", [&](const std::string& v) { cfg.views = parse_views(trim(v)); });
      r.bind("parallel_views", cfg.parallel_views);
      r.run();
    } else if (name == "data") {
      auto& p = cfg.inputs;
      SectionReader r(name, section);
      r.bind("ichiba", p.ichiba).bind("travel", p.travel).bind("family", p.family);
      r.bind("attributes", p.attributes).bind("entity_types", p.entity_types);
      r.bind("users", p.users).bind("seeds", p.seeds).bind("test_pool", p.test_pool);
      r.bind("groups", p.groups).bind("loyalty_threshold", cfg.loyalty_threshold);
      r.run();
    } else if (name == "train") {
      TrainConfig base;
      SectionReader r(name, section);
      detail::bind_train(r, base);
      r.run();
      cfg.train.fill(base);
    } else if (name.rfind("train.", 0) == 0) {
      view_sections.emplace_back(parse_view(name.substr(6)), &section);
    } else if (name == "fusion") {
      SectionReader(name, section).bind("iterations", cfg.fusion_iterations).run();
    } else if (name == "expansion") {
      auto& e = cfg.expansion;
      SectionReader r(name, section);
      r.bind_fn("mode", [&](const std::string& v) { e.mode = parse_scoring_mode(trim(v)); });
      r.bind_fn("threshold", [&](const std::string& v) {
        e.threshold = detail::parse_value<double>(name, "threshold", v);
      });
      r.bind_fn("top_n", [&](const std::string& v) {
        e.top_n = detail::parse_value<std::size_t>(name, "top_n", v);
      });
      r.bind("index", e.use_index).bind("probes", e.probes);
      r.run();
    } else if (name == "evaluation") {
      auto& e = cfg.eval;
      SectionReader r(name, section);
      r.bind_fn("methods", [&](const std::string& v) {
        e.methods = detail::parse_list<std::string>(name, "methods", v);
      });
      r.bind("train_fraction", e.fractions.train);
      r.bind("validation_fraction", e.fractions.validation);
      r.bind("test_fraction", e.fractions.test);
      r.bind("lr_l2", e.logistic.l2).bind("lr_iterations", e.logistic.max_iterations);
      r.bind("lr_step", e.logistic.lr).bind("export_features", cfg.export_features);
      r.run();
    } else if (name == "gen") {
      auto& g = cfg.gen;
      SectionReader r(name, section);
      r.bind("n_users", g.n_users).bind("n_groups", g.n_groups).bind("n_items", g.n_items);
      r.bind("n_shops", g.n_shops).bind("n_genres", g.n_genres).bind("n_hotels", g.n_hotels);
      r.bind("p_in", g.p_in).bind("purchases_per_user", g.purchases_per_user);
      r.bind("clicks_per_user", g.clicks_per_user).bind("bookings_per_user", g.bookings_per_user);
      r.bind("family_edge_prob", g.family_edge_prob);
      r.bind("relative_purchases", g.relative_purchases).bind("spread_signal", g.spread_signal);
      r.bind_fn("activity", [&](const std::string& v) { g.activity = detail::parse_activity(v); });
      r.bind("target_group", cfg.target_group).bind("seed_fraction", cfg.seed_fraction);
      r.run();
    } else if (name == "grid") {
      SectionReader r(name, section);
      r.bind_fn("dims", [&](const std::string& v) {
        cfg.grid.dims = detail::parse_list<std::size_t>(name, "dims", v);
      });
      r.bind_fn("lrs", [&](const std::string& v) {
        cfg.grid.lrs = detail::parse_list<double>(name, "lrs", v);
      });
      r.bind_fn("gammas", [&](const std::string& v) {
        cfg.grid.gammas = detail::parse_list<double>(name, "gammas", v);
      });
      r.run();
    } else {
      fail("config: unknown section [", name, "]");
    }
  }
  for (const auto& [view, section] : view_sections) {
    SectionReader r(std::string("train.") + view_name(view), *section);
    detail::bind_train(r, cfg.train[view_slot(view)]);
    r.run();
  }
  cfg.set_seed(seed.value_or(cfg.seed));

  for (const auto& t : cfg.train) t.validate();
  cfg.eval.validate();
  cfg.gen.validate();
  if (cfg.fusion_iterations < 1) fail("config [fusion] iterations must be >= 1");
  if (cfg.loyalty_threshold < 0) fail("config [data] loyalty_threshold must be >= 0");
  if (cfg.expansion.threshold && cfg.expansion.top_n) {
    fail("config [expansion]: set threshold or top_n, not both");
  }
  if (cfg.expansion.threshold) validate_threshold(*cfg.expansion.threshold);
  if (cfg.expansion.top_n && *cfg.expansion.top_n == 0) fail("config [expansion] top_n must be >= 1");
  if (cfg.grid.dims.empty() || cfg.grid.lrs.empty() || cfg.grid.gammas.empty()) {
    fail("config [grid]: every axis needs at least one value");
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config '", path, "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), std::filesystem::path(path).parent_path());
}

}  // namespace lookalike
