/*
 * Copyright 2026 The kgrbr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "kgrbr/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "kgrbr/error.hpp"

namespace kgrbr {

namespace {

const std::vector<EntityId> kNoNeighbors;

} // namespace

ColumnOrder parse_column_order(std::string_view letters)
{
  if (letters.size() != 3)
    throw ConfigError("column order must have 3 letters from {h,r,t}: "
                      + std::string(letters));
  ColumnOrder order{};
  bool seen[3] = {false, false, false};
  for (std::size_t i = 0; i < 3; ++i) {
    int slot = -1;
    switch (letters[i]) {
    case 'h': slot = 0; order[i] = Column::Head; break;
    case 'r': slot = 1; order[i] = Column::Relation; break;
    case 't': slot = 2; order[i] = Column::Tail; break;
    default:
      throw ConfigError("bad column letter in " + std::string(letters));
    }
    if (seen[slot])
      throw ConfigError("column order is not a permutation: "
                        + std::string(letters));
    seen[slot] = true;
  }
  return order;
}

std::vector<StringTriple> parse_tsv(std::istream& in, const ColumnOrder& order)
{
  std::vector<StringTriple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;

    std::string fields[3];
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      if (n == 3)
        throw ParseError("expected 3 tab-separated fields, got more", lineno);
      fields[n++] = line.substr(start, tab - start);
      if (tab == std::string::npos)
        break;
      start = tab + 1;
    }
    if (n != 3)
      throw ParseError("expected 3 tab-separated fields, got "
                       + std::to_string(n), lineno);

    StringTriple x;
    for (std::size_t i = 0; i < 3; ++i) {
      switch (order[i]) {
      case Column::Head: x.head = std::move(fields[i]); break;
      case Column::Relation: x.relation = std::move(fields[i]); break;
      case Column::Tail: x.tail = std::move(fields[i]); break;
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<StringTriple> load_tsv(
    const std::filesystem::path& path, const ColumnOrder& order)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  try {
    return parse_tsv(in, order);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::uint32_t Dictionary::intern(const std::string& name)
{
  auto [it, inserted] =
      ids_.emplace(name, static_cast<std::uint32_t>(names_.size()));
  if (inserted)
    names_.push_back(name);
  return it->second;
}

std::optional<std::uint32_t> Dictionary::find(std::string_view name) const
{
  const auto it = ids_.find(std::string(name));
  if (it == ids_.end())
    return std::nullopt;
  return it->second;
}

KnowledgeGraph KnowledgeGraph::build(const std::vector<StringTriple>& train,
                                     const std::vector<StringTriple>& valid,
                                     const std::vector<StringTriple>& test)
{
  KnowledgeGraph g;
  auto encode_split = [&g](const std::vector<StringTriple>& src,
                           std::vector<Triplet>& dst) {
    dst.reserve(src.size());
    for (const auto& x : src) {
      const EntityId h{g.entities_.intern(x.head)};
      const RelationId r{g.relations_.intern(x.relation)};
      const EntityId t{g.entities_.intern(x.tail)};
      dst.push_back({h, r, t});
    }
  };
  encode_split(train, g.train_);
  encode_split(valid, g.valid_);
  encode_split(test, g.test_);
  g.index();
  return g;
}

KnowledgeGraph KnowledgeGraph::from_ids(std::size_t n_entities,
                                        std::size_t n_relations,
                                        std::vector<Triplet> train,
                                        std::vector<Triplet> valid,
                                        std::vector<Triplet> test)
{
  KnowledgeGraph g;
  for (std::size_t i = 0; i < n_entities; ++i)
    g.entities_.intern("e" + std::to_string(i));
  for (std::size_t i = 0; i < n_relations; ++i)
    g.relations_.intern("r" + std::to_string(i));
  for (const auto* split : {&train, &valid, &test}) {
    for (const auto& x : *split) {
      if (x.h.value >= n_entities || x.t.value >= n_entities
          || x.r.value >= n_relations)
        throw ConfigError("triplet id out of range");
    }
  }
  g.train_ = std::move(train);
  g.valid_ = std::move(valid);
  g.test_ = std::move(test);
  g.index();
  return g;
}

void KnowledgeGraph::index()
{
  train_set_.reserve(train_.size());
  for (const auto& x : train_) {
    if (!train_set_.insert(x).second)
      continue;
    train_unique_.push_back(x);
    out_index_[key(x.h.value, x.r)].push_back(x.t);
    in_index_[key(x.t.value, x.r)].push_back(x.h);
  }
  for (auto* idx : {&out_index_, &in_index_})
    for (auto& [k, list] : *idx)
      std::sort(list.begin(), list.end());

  all_known_ = train_set_;
  all_known_.insert(valid_.begin(), valid_.end());
  all_known_.insert(test_.begin(), test_.end());
}

const std::vector<Triplet>& KnowledgeGraph::split(Split s) const
{
  switch (s) {
  case Split::Train: return train_;
  case Split::Valid: return valid_;
  case Split::Test: return test_;
  }
  return train_;
}

std::span<const EntityId> KnowledgeGraph::neighbors_out(
    EntityId h, RelationId r) const
{
  const auto it = out_index_.find(key(h.value, r));
  return it == out_index_.end() ? std::span<const EntityId>(kNoNeighbors)
                                : std::span<const EntityId>(it->second);
}

std::span<const EntityId> KnowledgeGraph::neighbors_in(
    EntityId t, RelationId r) const
{
  const auto it = in_index_.find(key(t.value, r));
  return it == in_index_.end() ? std::span<const EntityId>(kNoNeighbors)
                               : std::span<const EntityId>(it->second);
}

StringTriple KnowledgeGraph::decode(const Triplet& x) const
{
  return {name(x.h), name(x.r), name(x.t)};
}

std::optional<Triplet> KnowledgeGraph::encode(const StringTriple& x) const
{
  const auto h = entities_.find(x.head);
  const auto r = relations_.find(x.relation);
  const auto t = entities_.find(x.tail);
  if (!h || !r || !t)
    return std::nullopt;
  return Triplet{EntityId{*h}, RelationId{*r}, EntityId{*t}};
}

std::string KnowledgeGraph::stats_json() const
{
  nlohmann::ordered_json j;
  j["entities"] = num_entities();
  j["relations"] = num_relations();
  j["train"] = train_.size();
  j["train_unique"] = train_unique_.size();
  j["valid"] = valid_.size();
  j["test"] = test_.size();
  j["known"] = all_known_.size();
  return j.dump(2);
}

void write_tsv(std::ostream& out, const KnowledgeGraph& g,
               std::span<const Triplet> triplets)
{
  for (const auto& x : triplets)
    out << g.name(x.h) << '\t' << g.name(x.r) << '\t' << g.name(x.t) << '\n';
}

} // namespace kgrbr
