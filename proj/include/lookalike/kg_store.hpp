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

// Knowledge-graph storage: vocabularies, TSV loaders, negative samplers and
// view-specific subgraph extraction. A KnowledgeGraph is immutable once
// assembled; samplers take the caller's RNG so trainers own their streams.

#pragma once

#include <compare>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lookalike/core.hpp"

namespace lookalike {

template <typename Tag>
struct Id {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const Id&) const = default;
  constexpr std::size_t index() const { return value; }
};

using EntityId = Id<struct EntityTag>;
using RelationId = Id<struct RelationTag>;
using CharId = Id<struct CharTag>;

// Bijective label <-> dense id map. Ids are assigned in sorted label order.
template <typename IdT>
class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::set<std::string> labels)
      : labels_(labels.begin(), labels.end()) {
    for (std::uint32_t i = 0; i < labels_.size(); ++i) index_.emplace(labels_[i], i);
  }

  std::size_t size() const { return labels_.size(); }

  std::optional<IdT> find(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return IdT{it->second};
  }

  IdT id(const std::string& label) const {
    auto found = find(label);
    if (!found) fail("unknown label '", label, "'");
    return *found;
  }

  const std::string& label(IdT id) const { return labels_.at(id.index()); }
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const Vocabulary& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD.
inline std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = s[i];
    int extra = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      extra = 3;
    } else {
      out.push_back(0xfffd);
      ++i;
      continue;
    }
    if (i + extra >= s.size()) {  // truncated sequence
      out.push_back(0xfffd);
      break;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const unsigned char cc = s[i + k];
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
    if (!ok) {
      out.push_back(0xfffd);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

// Character vocabulary. Id 0 is reserved for characters never seen while
// building the vocabulary.
class CharVocabulary {
 public:
  static constexpr CharId kUnknown{0};

  CharVocabulary() = default;
  explicit CharVocabulary(const std::set<char32_t>& chars) {
    std::uint32_t next = 1;
    for (char32_t c : chars) index_.emplace(c, next++);
    chars_.assign(chars.begin(), chars.end());
  }

  // Includes the reserved unknown slot.
  std::size_t size() const { return chars_.size() + 1; }

  std::vector<CharId> encode(std::string_view text) const {
    std::vector<CharId> out;
    for (char32_t c : utf8_decode(text)) {
      auto it = index_.find(c);
      out.push_back(it == index_.end() ? kUnknown : CharId{it->second});
    }
    return out;
  }

  const std::vector<char32_t>& chars() const { return chars_; }
  bool operator==(const CharVocabulary& other) const { return chars_ == other.chars_; }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, std::uint32_t> index_;
};

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;

  auto operator<=>(const Triple&) const = default;
};

struct AttributeTriple {
  EntityId subject;
  RelationId attribute;
  std::string literal;
  std::vector<CharId> chars;

  bool operator==(const AttributeTriple&) const = default;
};

struct LabelTriple {
  std::string head;
  std::string relation;
  std::string tail;
};

inline constexpr const char* kDefaultEntityType = "entity";
inline constexpr const char* kUserType = "user";

struct KnowledgeGraph {
  std::string view;
  Vocabulary<EntityId> entities;
  Vocabulary<RelationId> relations;
  CharVocabulary chars;
  std::vector<Triple> triples;
  std::vector<AttributeTriple> attributes;
  std::vector<std::string> entity_types;

  std::size_t duplicates_removed = 0;
  std::size_t skipped_empty_literals = 0;

  // Derived indexes, rebuilt by reindex().
  std::vector<std::vector<std::size_t>> by_head;
  std::vector<std::vector<std::size_t>> by_tail;
  std::vector<std::vector<std::size_t>> by_relation;
  std::vector<Triple> sorted_triples;
  std::map<std::string, std::vector<EntityId>> entities_by_type;
  // Distinct literals per attribute relation, sorted.
  std::vector<std::vector<std::string>> literal_pool;

  bool contains(const Triple& t) const {
    return std::binary_search(sorted_triples.begin(), sorted_triples.end(), t);
  }

  const std::string& type_of(EntityId e) const { return entity_types.at(e.index()); }
  const std::string& label(EntityId e) const { return entities.label(e); }
  const std::string& label(RelationId r) const { return relations.label(r); }

  const std::vector<EntityId>& same_type(EntityId e) const {
    return entities_by_type.at(type_of(e));
  }

  void reindex() {
    by_head.assign(entities.size(), {});
    by_tail.assign(entities.size(), {});
    by_relation.assign(relations.size(), {});
    for (std::size_t i = 0; i < triples.size(); ++i) {
      by_head[triples[i].head.index()].push_back(i);
      by_tail[triples[i].tail.index()].push_back(i);
      by_relation[triples[i].relation.index()].push_back(i);
    }
    sorted_triples = triples;
    std::sort(sorted_triples.begin(), sorted_triples.end());
    entities_by_type.clear();
    for (std::uint32_t e = 0; e < entities.size(); ++e) {
      entities_by_type[entity_types[e]].push_back(EntityId{e});
    }
    std::vector<std::set<std::string>> pools(relations.size());
    for (const auto& a : attributes) pools[a.attribute.index()].insert(a.literal);
    literal_pool.clear();
    for (auto& p : pools) literal_pool.emplace_back(p.begin(), p.end());
  }

  std::vector<LabelTriple> label_triples() const {
    std::vector<LabelTriple> out;
    out.reserve(triples.size());
    for (const auto& t : triples) {
      out.push_back({label(t.head), label(t.relation), label(t.tail)});
    }
    return out;
  }

  std::vector<LabelTriple> label_attributes() const {
    std::vector<LabelTriple> out;
    out.reserve(attributes.size());
    for (const auto& a : attributes) {
      out.push_back({label(a.subject), label(a.attribute), a.literal});
    }
    return out;
  }

  std::map<std::string, std::string> type_map() const {
    std::map<std::string, std::string> out;
    for (std::uint32_t e = 0; e < entities.size(); ++e) {
      out.emplace(entities.label(EntityId{e}), entity_types[e]);
    }
    return out;
  }
};

// Builds a graph from label-level data. Vocabularies are sorted, duplicate
// relational triples are dropped (and counted), entities missing from
// `types` get kDefaultEntityType.
inline KnowledgeGraph assemble_graph(std::string view,
                                     const std::vector<LabelTriple>& triples,
                                     const std::vector<LabelTriple>& attributes,
                                     const std::map<std::string, std::string>& types,
                                     const std::vector<std::string>& extra_entities = {}) {
  std::set<std::string> entity_labels(extra_entities.begin(), extra_entities.end());
  std::set<std::string> relation_labels;
  std::set<char32_t> char_set;
  for (const auto& t : triples) {
    entity_labels.insert(t.head);
    entity_labels.insert(t.tail);
    relation_labels.insert(t.relation);
  }
  for (const auto& a : attributes) {
    entity_labels.insert(a.head);
    relation_labels.insert(a.relation);
    for (char32_t c : utf8_decode(a.tail)) char_set.insert(c);
  }

  KnowledgeGraph kg;
  kg.view = std::move(view);
  kg.entities = Vocabulary<EntityId>(std::move(entity_labels));
  kg.relations = Vocabulary<RelationId>(std::move(relation_labels));
  kg.chars = CharVocabulary(char_set);

  kg.entity_types.reserve(kg.entities.size());
  for (const auto& label : kg.entities.labels()) {
    auto it = types.find(label);
    kg.entity_types.push_back(it == types.end() ? kDefaultEntityType : it->second);
  }

  std::set<Triple> seen;
  kg.triples.reserve(triples.size());
  for (const auto& t : triples) {
    Triple triple{kg.entities.id(t.head), kg.relations.id(t.relation),
                  kg.entities.id(t.tail)};
    if (!seen.insert(triple).second) {
      ++kg.duplicates_removed;
      continue;
    }
    kg.triples.push_back(triple);
  }
  for (const auto& a : attributes) {
    kg.attributes.push_back({kg.entities.id(a.head), kg.relations.id(a.relation), a.tail,
                             kg.chars.encode(a.tail)});
  }
  kg.reindex();
  return kg;
}

namespace detail {

// Reads a three-column TSV file. Blank lines are ignored; any other line
// without exactly three tab-separated fields is an error naming its line.
inline std::vector<std::pair<std::size_t, LabelTriple>> read_tsv3(const std::string& path,
                                                                  bool allow_empty_third) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "'");
  std::vector<std::pair<std::size_t, LabelTriple>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      fail(path, ": line ", line_no, ": expected 3 tab-separated fields, got ",
           fields.size());
    }
    for (int i = 0; i < 3; ++i) fields[i] = std::string(trim(fields[i]));
    if (fields[0].empty() || fields[1].empty() || (!allow_empty_third && fields[2].empty())) {
      fail(path, ": line ", line_no, ": empty field");
    }
    rows.push_back({line_no, {fields[0], fields[1], fields[2]}});
  }
  return rows;
}

}  // namespace detail

inline KnowledgeGraph load_triples(const std::string& path, std::string view,
                                   const std::map<std::string, std::string>& types = {}) {
  auto rows = detail::read_tsv3(path, /*allow_empty_third=*/false);
  if (rows.empty()) fail(path, ": no triples (empty file)");
  std::vector<LabelTriple> triples;
  triples.reserve(rows.size());
  for (auto& row : rows) triples.push_back(std::move(row.second));
  return assemble_graph(std::move(view), triples, {}, types);
}

// Reads `entity<TAB>type` lines.
inline std::map<std::string, std::string> load_entity_types(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "'");
  std::map<std::string, std::string> types;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2) {
      fail(path, ": line ", line_no, ": expected 2 tab-separated fields");
    }
    types[std::string(trim(fields[0]))] = std::string(trim(fields[1]));
  }
  return types;
}

struct AttributeLoadOptions {
  // When false, subjects absent from the entity vocabulary are an error.
  bool add_missing_subjects = true;
};

// Appends attribute triples to `kg`. The vocabularies are rebuilt in sorted
// order, so ids may shift relative to the input graph.
inline KnowledgeGraph load_attributes(const std::string& path, const KnowledgeGraph& kg,
                                      AttributeLoadOptions options = {}) {
  auto rows = detail::read_tsv3(path, /*allow_empty_third=*/true);
  auto triples = kg.label_triples();
  auto attributes = kg.label_attributes();
  auto types = kg.type_map();
  std::size_t skipped = kg.skipped_empty_literals;
  for (auto& [line_no, row] : rows) {
    if (row.tail.empty()) {
      ++skipped;
      continue;
    }
    if (!types.count(row.head)) {
      if (!options.add_missing_subjects) {
        fail(path, ": line ", line_no, ": unknown subject '", row.head, "'");
      }
      types[row.head] = kUserType;
    }
    attributes.push_back(std::move(row));
  }
  std::vector<std::string> keep = kg.entities.labels();
  KnowledgeGraph out = assemble_graph(kg.view, triples, attributes, types, keep);
  out.duplicates_removed += kg.duplicates_removed;
  out.skipped_empty_literals = skipped;
  return out;
}

enum class CorruptSide { kRandom, kHead, kTail };

struct TripleSample {
  Triple triple;
  bool head_corrupted = false;
  // True when every attempt hit a positive triple and the last draw was kept.
  bool collided = false;
};

inline constexpr int kMaxNegativeAttempts = 100;

// Corrupts the head or the tail with a uniformly drawn entity of the same
// type, retrying while the result is a known positive.
inline TripleSample negative_sample_triple(const KnowledgeGraph& kg, const Triple& positive,
                                           Rng& rng, CorruptSide side = CorruptSide::kRandom) {
  if (kg.triples.empty()) fail("negative sampling on an empty graph");
  bool corrupt_head = side == CorruptSide::kHead;
  if (side == CorruptSide::kRandom) corrupt_head = uniform_index(rng, 2) == 0;
  const auto& pool = kg.same_type(corrupt_head ? positive.head : positive.tail);

  Triple candidate = positive;
  for (int attempt = 0; attempt < kMaxNegativeAttempts; ++attempt) {
    candidate = positive;
    const EntityId replacement = pool[uniform_index(rng, pool.size())];
    (corrupt_head ? candidate.head : candidate.tail) = replacement;
    if (!kg.contains(candidate)) return {candidate, corrupt_head, false};
  }
  return {candidate, corrupt_head, true};
}

struct AttributeSample {
  AttributeTriple triple;
  bool subject_corrupted = false;
};

// Replaces the literal with a different literal observed under the same
// attribute relation. Falls back to a random subject of the same type when
// the relation has a single distinct literal.
inline AttributeSample negative_sample_attribute(const KnowledgeGraph& kg,
                                                 const AttributeTriple& positive, Rng& rng) {
  const auto& pool = kg.literal_pool.at(positive.attribute.index());
  AttributeSample out{positive, false};
  if (pool.size() >= 2) {
    const auto self = std::lower_bound(pool.begin(), pool.end(), positive.literal);
    const std::size_t self_index = static_cast<std::size_t>(self - pool.begin());
    std::size_t pick = uniform_index(rng, pool.size() - 1);
    if (self != pool.end() && *self == positive.literal && pick >= self_index) ++pick;
    out.triple.literal = pool[pick];
    out.triple.chars = kg.chars.encode(out.triple.literal);
    return out;
  }
  const auto& users = kg.same_type(positive.subject);
  out.subject_corrupted = true;
  if (users.size() < 2) return out;
  std::size_t pick = uniform_index(rng, users.size() - 1);
  const auto self = std::lower_bound(users.begin(), users.end(), positive.subject);
  if (pick >= static_cast<std::size_t>(self - users.begin())) ++pick;
  out.triple.subject = users[pick];
  return out;
}

inline const std::set<std::string>& default_family_relations() {
  static const std::set<std::string> relations{"spouse", "parent", "child"};
  return relations;
}

// Family-member subgraph for the given users: every family edge touching an
// input user, plus the interactions headed by those users' relatives who are
// not themselves inputs. Interactions of the input users are dropped. The
// vocabularies are shared with `kg`, so input users without family edges stay
// in the graph as isolated entities.
inline KnowledgeGraph family_subgraph(
    const KnowledgeGraph& kg, const std::set<EntityId>& users,
    const std::set<std::string>& family_relations = default_family_relations()) {
  std::vector<bool> is_family(kg.relations.size(), false);
  for (std::uint32_t r = 0; r < kg.relations.size(); ++r) {
    is_family[r] = family_relations.count(kg.relations.label(RelationId{r})) > 0;
  }

  KnowledgeGraph out;
  out.view = kg.view;
  out.entities = kg.entities;
  out.relations = kg.relations;
  out.chars = kg.chars;
  out.entity_types = kg.entity_types;

  std::set<EntityId> relatives;
  for (const auto& t : kg.triples) {
    if (!is_family[t.relation.index()]) continue;
    const bool head_in = users.count(t.head) > 0;
    const bool tail_in = users.count(t.tail) > 0;
    if (!head_in && !tail_in) continue;
    out.triples.push_back(t);
    if (!head_in) relatives.insert(t.head);
    if (!tail_in) relatives.insert(t.tail);
  }
  for (const auto& t : kg.triples) {
    if (is_family[t.relation.index()]) continue;
    if (relatives.count(t.head)) out.triples.push_back(t);
  }
  out.reindex();
  return out;
}

// Derives loyalty triples (user, loyalty_relation, value) from interaction
// counts: a user is loyal to a value reached more than `threshold` times.
struct LoyaltyRule {
  std::string interaction;  // e.g. "bought"
  std::string via;          // relation from the interacted entity to the value; empty = itself
  std::string loyalty_relation;
};

inline std::vector<LoyaltyRule> default_loyalty_rules() {
  return {{"bought", "sold_by", "loyal_shop"},
          {"bought", "item_under_leaf_genre", "loyal_genre"},
          {"booked", "", "loyal_hotel"}};
}

inline KnowledgeGraph derive_loyalty(const std::vector<const KnowledgeGraph*>& sources,
                                     int threshold,
                                     const std::vector<LoyaltyRule>& rules = default_loyalty_rules()) {
  std::vector<LabelTriple> triples;
  std::map<std::string, std::string> types;
  for (const KnowledgeGraph* kg : sources) {
    for (const auto& rule : rules) {
      const auto interaction = kg->relations.find(rule.interaction);
      if (!interaction) continue;
      std::optional<RelationId> via;
      if (!rule.via.empty()) {
        via = kg->relations.find(rule.via);
        if (!via) continue;
      }
      std::map<std::pair<EntityId, EntityId>, int> counts;
      for (std::size_t i : kg->by_relation[interaction->index()]) {
        const Triple& t = kg->triples[i];
        if (!via) {
          ++counts[{t.head, t.tail}];
          continue;
        }
        for (std::size_t j : kg->by_head[t.tail.index()]) {
          const Triple& hop = kg->triples[j];
          if (hop.relation == *via) ++counts[{t.head, hop.tail}];
        }
      }
      for (const auto& [pair, count] : counts) {
        if (count <= threshold) continue;
        triples.push_back({kg->label(pair.first), rule.loyalty_relation, kg->label(pair.second)});
        types[kg->label(pair.first)] = kg->type_of(pair.first);
        types[kg->label(pair.second)] = kg->type_of(pair.second);
      }
    }
  }
  return assemble_graph("loyalty", triples, {}, types);
}

// Entities of type user that occur in at least one triple or attribute.
inline std::vector<EntityId> present_users(const KnowledgeGraph& kg) {
  std::vector<bool> present(kg.entities.size(), false);
  for (const auto& t : kg.triples) {
    present[t.head.index()] = true;
    present[t.tail.index()] = true;
  }
  for (const auto& a : kg.attributes) present[a.subject.index()] = true;
  std::vector<EntityId> out;
  for (std::uint32_t e = 0; e < kg.entities.size(); ++e) {
    if (present[e] && kg.entity_types[e] == kUserType) out.push_back(EntityId{e});
  }
  return out;
}

}  // namespace lookalike
