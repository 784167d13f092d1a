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

#ifndef KGRBR_GRAPH_HPP_
#define KGRBR_GRAPH_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgrbr/types.hpp"

namespace kgrbr {

struct StringTriple {
  std::string head;
  std::string relation;
  std::string tail;
  bool operator==(const StringTriple&) const = default;
};

enum class Column { Head, Relation, Tail };

/// Which file column holds which triple slot; column_order[i] names the slot
/// stored in column i.
using ColumnOrder = std::array<Column, 3>;

inline constexpr ColumnOrder kHeadRelationTail{
    Column::Head, Column::Relation, Column::Tail};

/// Parses "hrt", "htr", "rht", ... into a ColumnOrder. Throws ConfigError.
ColumnOrder parse_column_order(std::string_view letters);

/// Reads a 3-column TSV file. Blank lines are skipped, duplicates kept.
std::vector<StringTriple> load_tsv(
    const std::filesystem::path& path,
    const ColumnOrder& order = kHeadRelationTail);

std::vector<StringTriple> parse_tsv(
    std::istream& in, const ColumnOrder& order = kHeadRelationTail);

/// Bidirectional string <-> dense id map.
class Dictionary {
public:
  std::uint32_t intern(const std::string& name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

enum class Split { Train, Valid, Test };

/// Dictionary-encoded triple store. Adjacency indices and the reasoning
/// membership set cover the train split only; all_known covers every split
/// and is what filtered evaluation consults. Immutable after construction.
class KnowledgeGraph {
public:
  KnowledgeGraph() = default;

  static KnowledgeGraph build(const std::vector<StringTriple>& train,
                              const std::vector<StringTriple>& valid,
                              const std::vector<StringTriple>& test);

  /// Builds from already-encoded triplets over entities [0, n_entities) and
  /// relations [0, n_relations); names are synthesized as "e<i>" / "r<i>".
  static KnowledgeGraph from_ids(std::size_t n_entities,
                                 std::size_t n_relations,
                                 std::vector<Triplet> train,
                                 std::vector<Triplet> valid = {},
                                 std::vector<Triplet> test = {});

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_relations() const { return relations_.size(); }
  const Dictionary& entities() const { return entities_; }
  const Dictionary& relations() const { return relations_; }

  const std::vector<Triplet>& split(Split s) const;
  const std::vector<Triplet>& train() const { return train_; }
  const std::vector<Triplet>& valid() const { return valid_; }
  const std::vector<Triplet>& test() const { return test_; }

  /// Distinct train triplets in first-appearance order.
  const std::vector<Triplet>& train_unique() const { return train_unique_; }

  /// Membership in the train split (the graph used for reasoning).
  bool contains(const Triplet& x) const { return train_set_.contains(x); }

  /// Membership in train, valid or test (the filtering set).
  bool is_known(const Triplet& x) const { return all_known_.contains(x); }

  /// Sorted, duplicate-free tails t with (h, r, t) in train.
  std::span<const EntityId> neighbors_out(EntityId h, RelationId r) const;
  /// Sorted, duplicate-free heads h with (h, r, t) in train.
  std::span<const EntityId> neighbors_in(EntityId t, RelationId r) const;

  std::size_t train_set_size() const { return train_set_.size(); }
  std::size_t known_size() const { return all_known_.size(); }

  std::string name(EntityId e) const { return entities_.name(e.value); }
  std::string name(RelationId r) const { return relations_.name(r.value); }
  StringTriple decode(const Triplet& x) const;

  /// Encodes names against the dictionaries; nullopt if any name is unknown.
  std::optional<Triplet> encode(const StringTriple& x) const;

  /// Entity/relation/triple counts per split as a JSON object.
  std::string stats_json() const;

private:
  static std::uint64_t key(std::uint32_t node, RelationId r) {
    return (std::uint64_t{node} << 32) | r.value;
  }
  void index();

  Dictionary entities_;
  Dictionary relations_;
  std::vector<Triplet> train_, valid_, test_;
  std::vector<Triplet> train_unique_;
  std::unordered_set<Triplet, TripletHash> train_set_;
  std::unordered_set<Triplet, TripletHash> all_known_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> out_index_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> in_index_;
};

/// Writes triples as TSV in (head, relation, tail) order.
void write_tsv(std::ostream& out, const KnowledgeGraph& g,
               std::span<const Triplet> triplets);

} // namespace kgrbr

#endif // KGRBR_GRAPH_HPP_
