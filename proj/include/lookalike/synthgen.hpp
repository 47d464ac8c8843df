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

// Synthetic multi-service data with planted user groups.
//
// Users belong to one of G groups. Items, shops, genres and hotels are cut
// into preference blocks; a user draws each interaction from its group's
// block with probability p_in and uniformly from the whole catalogue
// otherwise. Demography literals (age, area code, registration date) are
// drawn from group-dependent distributions. Some users get one relative
// whose purchases follow the same group preferences.
//
// With `spread_signal` set, each service only resolves pairs of groups:
// e-commerce blocks are g/2 and travel blocks (g+1)/2, so a group is
// identified only by combining services.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>

#include "lookalike/core.hpp"
#include "lookalike/kg_store.hpp"

namespace lookalike {

struct ServiceActivity {
  double ichiba = 1.0;
  double travel = 1.0;
};

struct GenConfig {
  std::size_t n_users = 2000;
  std::size_t n_groups = 5;
  std::size_t n_items = 500;
  std::size_t n_shops = 50;
  std::size_t n_genres = 20;
  std::size_t n_hotels = 50;
  double p_in = 0.8;
  std::size_t purchases_per_user = 24;
  std::size_t clicks_per_user = 8;
  std::size_t bookings_per_user = 8;
  double family_edge_prob = 0.5;
  std::size_t relative_purchases = 12;
  bool spread_signal = false;
  // Per-group probability of being active in each service; empty = always.
  std::vector<ServiceActivity> activity;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_groups < 2) fail("gen: n_groups must be >= 2");
    if (n_users < n_groups) fail("gen: fewer users than groups");
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) fail("gen: ", name, " must be in [0, 1]");
    };
    prob(p_in, "p_in");
    prob(family_edge_prob, "family_edge_prob");
    for (const auto& a : activity) {
      prob(a.ichiba, "activity");
      prob(a.travel, "activity");
    }
    if (!activity.empty() && activity.size() != n_groups) {
      fail("gen: activity has ", activity.size(), " rows for ", n_groups, " groups");
    }
    if (n_items == 0 || n_shops == 0 || n_genres == 0 || n_hotels == 0) {
      fail("gen: catalogue sizes must be positive");
    }
  }

  ServiceActivity activity_of(std::size_t group) const {
    return activity.empty() ? ServiceActivity{} : activity[group];
  }
};

struct GeneratedData {
  std::vector<LabelTriple> ichiba;
  std::vector<LabelTriple> travel;
  std::vector<LabelTriple> family;
  std::vector<LabelTriple> attributes;
  std::map<std::string, std::string> entity_types;
  std::map<std::string, std::size_t> groups;  // main users only
  std::vector<std::string> users;             // main users, sorted
};

namespace detail {

inline std::string padded(char prefix, std::size_t i, int width = 5) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*zu", prefix, width, i);
  return buf;
}

// Catalogue of `n` entities cut into `blocks` contiguous blocks.
struct Catalogue {
  std::size_t n = 0;
  std::size_t blocks = 1;

  std::size_t block_begin(std::size_t b) const { return b * n / blocks; }
  std::size_t block_end(std::size_t b) const { return (b + 1) * n / blocks; }
  std::size_t block_of(std::size_t i) const {
    for (std::size_t b = 0; b < blocks; ++b) {
      if (i < block_end(b)) return b;
    }
    return blocks - 1;
  }

  std::size_t draw(std::size_t block, double p_in, Rng& rng) const {
    if (uniform(rng, 0.0, 1.0) < p_in) {
      const std::size_t lo = block_begin(block), hi = block_end(block);
      return lo + uniform_index(rng, hi - lo);
    }
    return uniform_index(rng, n);
  }
};

}  // namespace detail

inline std::size_t ichiba_block(const GenConfig& cfg, std::size_t group) {
  return cfg.spread_signal ? group / 2 : group;
}
inline std::size_t travel_block(const GenConfig& cfg, std::size_t group) {
  return cfg.spread_signal ? (group + 1) / 2 : group;
}
inline std::size_t ichiba_blocks(const GenConfig& cfg) { return ichiba_block(cfg, cfg.n_groups - 1) + 1; }
inline std::size_t travel_blocks(const GenConfig& cfg) { return travel_block(cfg, cfg.n_groups - 1) + 1; }

inline GeneratedData generate(const GenConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  GeneratedData out;

  const std::size_t ib = ichiba_blocks(cfg), tb = travel_blocks(cfg);
  if (cfg.n_items < ib || cfg.n_shops < ib || cfg.n_genres < ib || cfg.n_hotels < tb) {
    fail("gen: catalogue smaller than the number of preference blocks");
  }
  const detail::Catalogue items{cfg.n_items, ib}, hotels{cfg.n_hotels, tb};
  const detail::Catalogue shops{cfg.n_shops, ib}, genres{cfg.n_genres, ib};
  const detail::Catalogue months{12, tb};
  constexpr std::size_t kPartners = 5, kReservationTypes = 6, kTopGenres = 4;

  auto item = [](std::size_t i) { return detail::padded('i', i); };
  auto hotel = [](std::size_t i) { return detail::padded('h', i, 4); };

  // Item catalogue: every item is sold by a shop and filed under a leaf
  // genre of its own block; leaf genres hang under a few top genres.
  for (std::size_t i = 0; i < cfg.n_items; ++i) {
    const std::size_t b = items.block_of(i);
    const std::size_t shop = shops.block_begin(b) +
                             uniform_index(rng, shops.block_end(b) - shops.block_begin(b));
    const std::size_t genre = genres.block_begin(b) +
                              uniform_index(rng, genres.block_end(b) - genres.block_begin(b));
    out.ichiba.push_back({item(i), "sold_by", detail::padded('s', shop, 4)});
    out.ichiba.push_back({item(i), "item_under_leaf_genre", detail::padded('g', genre, 4)});
    out.entity_types[item(i)] = "item";
    out.entity_types[detail::padded('s', shop, 4)] = "shop";
    out.entity_types[detail::padded('g', genre, 4)] = "genre";
  }
  for (std::size_t g = 0; g < cfg.n_genres; ++g) {
    const std::string top = detail::padded('G', g % kTopGenres, 2);
    out.ichiba.push_back({detail::padded('g', g, 4), "genre_parent", top});
    out.entity_types[detail::padded('g', g, 4)] = "genre";
    out.entity_types[top] = "genre";
  }
  for (std::size_t h = 0; h < cfg.n_hotels; ++h) out.entity_types[hotel(h)] = "hotel";

  auto shop_purchases = [&](const std::string& who, std::size_t group, std::size_t count,
                            std::size_t clicks) {
    for (std::size_t k = 0; k < count; ++k) {
      out.ichiba.push_back({who, "bought", item(items.draw(ichiba_block(cfg, group), cfg.p_in, rng))});
    }
    for (std::size_t k = 0; k < clicks; ++k) {
      out.ichiba.push_back({who, "clicked", item(items.draw(ichiba_block(cfg, group), cfg.p_in, rng))});
    }
  };

  std::size_t relatives = 0;
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    const std::string user = detail::padded('u', u);
    const std::size_t group = u % cfg.n_groups;
    out.users.push_back(user);
    out.groups[user] = group;
    out.entity_types[user] = kUserType;
    const ServiceActivity act = cfg.activity_of(group);

    if (uniform(rng, 0.0, 1.0) < act.ichiba) {
      shop_purchases(user, group, cfg.purchases_per_user, cfg.clicks_per_user);
    }
    if (uniform(rng, 0.0, 1.0) < act.travel) {
      const std::size_t b = travel_block(cfg, group);
      for (std::size_t k = 0; k < cfg.bookings_per_user; ++k) {
        out.travel.push_back({user, "booked", hotel(hotels.draw(b, cfg.p_in, rng))});
      }
      const std::string month = detail::padded('m', months.draw(b, cfg.p_in, rng) + 1, 2);
      const std::string partner = detail::padded('p', uniform_index(rng, kPartners), 2);
      const std::string rtype = detail::padded('r', uniform_index(rng, kReservationTypes), 2);
      out.travel.push_back({user, "visiting_month", month});
      out.travel.push_back({user, "reserved_under_partner_id", partner});
      out.travel.push_back({user, "user_reservation_type", rtype});
      out.entity_types[month] = "month";
      out.entity_types[partner] = "partner";
      out.entity_types[rtype] = "reservation_type";
    }

    // Demography: group-centred age, a preferred area code, a registration
    // year range per group.
    const double age = std::clamp(22.0 + 9.0 * static_cast<double>(group) +
                                      std::normal_distribution<double>(0.0, 5.0)(rng),
                                  16.0, 90.0);
    char age_buf[16];
    std::snprintf(age_buf, sizeof(age_buf), "%.1f", age);
    const std::size_t area = uniform(rng, 0.0, 1.0) < 0.6 ? 1 + (group * 9) % 47
                                                          : 1 + uniform_index(rng, 47);
    char date_buf[16];
    std::snprintf(date_buf, sizeof(date_buf), "%04zu-%02zu-%02zu",
                  2000 + 3 * group + uniform_index(rng, 5), 1 + uniform_index(rng, 12),
                  1 + uniform_index(rng, 28));
    out.attributes.push_back({user, "age", age_buf});
    out.attributes.push_back({user, "area_code", std::to_string(area)});
    out.attributes.push_back({user, "reg_date", date_buf});

    if (uniform(rng, 0.0, 1.0) < cfg.family_edge_prob) {
      static constexpr const char* kRelations[] = {"spouse", "parent", "child"};
      const std::string relative = detail::padded('f', relatives++);
      out.family.push_back({user, kRelations[uniform_index(rng, 3)], relative});
      out.entity_types[relative] = kUserType;
      shop_purchases(relative, group, cfg.relative_purchases, 0);
    }
  }

  std::size_t user_purchases = 0;
  for (const auto& t : out.ichiba) user_purchases += t.head.front() == 'u';
  if (user_purchases == 0) fail("gen: configuration yields no e-commerce interactions");
  if (out.travel.empty()) fail("gen: configuration yields no travel interactions");
  return out;
}

inline void write_label_triples(const std::string& path, const std::vector<LabelTriple>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '", path, "'");
  for (const auto& r : rows) out << r.head << '\t' << r.relation << '\t' << r.tail << '\n';
}

struct DataFiles {
  std::string ichiba = "ichiba.tsv";
  std::string travel = "travel.tsv";
  std::string family = "family.tsv";
  std::string attributes = "attributes.tsv";
  std::string entity_types = "entity_types.tsv";
  std::string groups = "groups.tsv";
  std::string users = "users.txt";
};

inline void write_generated(const std::filesystem::path& dir, const GeneratedData& data,
                            const DataFiles& files = {}) {
  std::filesystem::create_directories(dir);
  write_label_triples((dir / files.ichiba).string(), data.ichiba);
  write_label_triples((dir / files.travel).string(), data.travel);
  write_label_triples((dir / files.family).string(), data.family);
  write_label_triples((dir / files.attributes).string(), data.attributes);
  {
    std::ofstream out(dir / files.entity_types, std::ios::binary);
    for (const auto& [e, t] : data.entity_types) out << e << '\t' << t << '\n';
  }
  {
    std::ofstream out(dir / files.groups, std::ios::binary);
    for (const auto& [u, g] : data.groups) out << u << '\t' << g << '\n';
  }
  {
    std::ofstream out(dir / files.users, std::ios::binary);
    for (const auto& u : data.users) out << u << '\n';
  }
}

inline std::map<std::string, std::size_t> read_groups(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "'");
  std::map<std::string, std::size_t> groups;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 2) fail(path, ": line ", line_no, ": expected 2 fields");
    groups[f[0]] = static_cast<std::size_t>(std::stoul(f[1]));
  }
  return groups;
}

struct Campaign {
  std::size_t group = 0;
  std::vector<std::string> seeds;
  std::vector<std::string> held_out;   // remaining members of the group
  std::vector<std::string> negatives;  // 3 per held-out positive, other groups
};

inline Campaign make_campaign(const std::map<std::string, std::size_t>& groups,
                              std::size_t target, double seed_fraction, Rng& rng) {
  if (!(seed_fraction > 0.0 && seed_fraction < 1.0)) fail("campaign: seed fraction must be in (0, 1)");
  std::vector<std::string> members, others;
  for (const auto& [user, g] : groups) (g == target ? members : others).push_back(user);
  if (members.empty()) fail("campaign: group ", target, " does not exist");
  if (static_cast<double>(members.size()) < 2.0 / seed_fraction) {
    fail("campaign: group ", target, " has ", members.size(), " users, needs at least ",
         std::ceil(2.0 / seed_fraction));
  }
  Campaign c;
  c.group = target;
  shuffle(members, rng);
  const auto n_seeds = static_cast<std::size_t>(
      std::llround(seed_fraction * static_cast<double>(members.size())));
  c.seeds.assign(members.begin(), members.begin() + n_seeds);
  c.held_out.assign(members.begin() + n_seeds, members.end());
  const std::size_t need = 3 * c.held_out.size();
  if (others.size() < need) fail("campaign: need ", need, " negatives, have ", others.size());
  shuffle(others, rng);
  c.negatives.assign(others.begin(), others.begin() + need);
  std::sort(c.seeds.begin(), c.seeds.end());
  std::sort(c.held_out.begin(), c.held_out.end());
  std::sort(c.negatives.begin(), c.negatives.end());
  return c;
}

// "user<TAB>label" for the held-out positives and the negatives.
inline void write_test_pool(const std::string& path, const Campaign& c) {
  std::map<std::string, int> rows;
  for (const auto& u : c.held_out) rows[u] = 1;
  for (const auto& u : c.negatives) rows[u] = 0;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '", path, "'");
  for (const auto& [u, y] : rows) out << u << '\t' << y << '\n';
}

inline std::vector<std::pair<std::string, int>> read_test_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "'");
  std::vector<std::pair<std::string, int>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 2 || (f[1] != "0" && f[1] != "1")) {
      fail(path, ": line ", line_no, ": expected user<TAB>0|1");
    }
    rows.emplace_back(f[0], f[1] == "1" ? 1 : 0);
  }
  return rows;
}

}  // namespace lookalike
