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

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "kgrbr/error.hpp"
#include "kgrbr/rules.hpp"

namespace kgrbr {

namespace {

using PairKey = std::uint64_t;

PairKey pair_key(EntityId x, EntityId y)
{
  return (std::uint64_t{x.value} << 32) | y.value;
}

EntityId first_of(PairKey k) { return EntityId{static_cast<std::uint32_t>(k >> 32)}; }

struct PairKeyHash {
  std::size_t operator()(PairKey k) const noexcept
  {
    return static_cast<std::size_t>(mix64(k));
  }
};

using PairSet = std::unordered_set<PairKey, PairKeyHash>;

/// Train relations linking x -> y, keyed by (x, y).
class PairRelations {
public:
  explicit PairRelations(const KnowledgeGraph& g)
  {
    for (const auto& x : g.train_unique())
      map_[pair_key(x.h, x.t)].push_back(x.r.value);
  }

  const std::vector<std::uint32_t>* find(PairKey k) const
  {
    const auto it = map_.find(k);
    return it == map_.end() ? nullptr : &it->second;
  }

private:
  std::unordered_map<PairKey, std::vector<std::uint32_t>, PairKeyHash> map_;
};

class Emitter {
public:
  Emitter(const KnowledgeGraph& g, const MinerConfig& cfg,
          const PairRelations& pairs, std::vector<Rule>& out)
  : g_(g), cfg_(cfg), pairs_(pairs), out_(out)
  {}

  /// Emits one rule per head relation satisfied by at least one body binding.
  void emit(const std::vector<Atom>& body, const PairSet& bindings)
  {
    std::map<std::uint32_t, std::size_t> support;
    for (const PairKey k : bindings)
      if (const auto* rels = pairs_.find(k))
        for (const auto r : *rels)
          ++support[r];

    const std::size_t min_support = std::max<std::size_t>(cfg_.min_support, 1);
    for (const auto& [head, sup] : support) {
      if (sup < min_support)
        continue;
      if (body.size() == 1 && body[0].relation.value == head
          && body[0].arg1 == Var::X)
        continue; // B(X,Y) => B(X,Y)

      std::size_t denom = bindings.size();
      if (cfg_.pca_confidence) {
        denom = 0;
        for (const PairKey k : bindings)
          if (!g_.neighbors_out(first_of(k), RelationId{head}).empty())
            ++denom;
      }
      const double conf = static_cast<double>(sup) / static_cast<double>(denom);
      if (conf < cfg_.min_confidence)
        continue;

      Rule r;
      r.body = body;
      r.head = RelationId{head};
      r.support = sup;
      r.confidence = conf;
      out_.push_back(std::move(r));
    }
  }

private:
  const KnowledgeGraph& g_;
  const MinerConfig& cfg_;
  const PairRelations& pairs_;
  std::vector<Rule>& out_;
};

void mine_chain_rules(const KnowledgeGraph& g,
                      const std::vector<std::vector<Triplet>>& by_relation,
                      Emitter& emitter);

} // namespace

std::vector<Rule> mine_rules(const KnowledgeGraph& g, const MinerConfig& cfg)
{
  if (cfg.max_body_atoms < 1 || cfg.max_body_atoms > 2)
    throw ConfigError("max_body_atoms must be 1 or 2");

  std::vector<Rule> out;
  const PairRelations pairs(g);
  Emitter emitter(g, cfg, pairs, out);

  std::vector<std::vector<Triplet>> by_relation(g.num_relations());
  for (const auto& x : g.train_unique())
    by_relation[x.r.value].push_back(x);

  // Single-atom bodies: B(X,Y) binds (h,t); B(Y,X) binds (t,h).
  for (std::uint32_t b = 0; b < g.num_relations(); ++b) {
    if (by_relation[b].empty())
      continue;
    for (const bool forward : {true, false}) {
      PairSet bindings;
      for (const auto& x : by_relation[b])
        bindings.insert(forward ? pair_key(x.h, x.t) : pair_key(x.t, x.h));
      const Atom a{RelationId{b}, forward ? Var::X : Var::Y,
                   forward ? Var::Y : Var::X};
      emitter.emit({a}, bindings);
    }
  }
  if (cfg.max_body_atoms >= 2)
    mine_chain_rules(g, by_relation, emitter);

  std::stable_sort(out.begin(), out.end(), [](const Rule& a, const Rule& b) {
    if (a.head != b.head)
      return a.head < b.head;
    if (a.body.size() != b.body.size())
      return a.body.size() < b.body.size();
    return a.body < b.body;
  });
  return out;
}

namespace {

void mine_chain_rules(const KnowledgeGraph& g,
                      const std::vector<std::vector<Triplet>>& by_relation,
                      Emitter& emitter)
{
  // Incident train edges per entity: (relation, other end, outgoing?).
  struct Edge {
    std::uint32_t relation;
    EntityId other;
    bool outgoing;
  };
  std::vector<std::vector<Edge>> incident(g.num_entities());
  for (const auto& x : g.train_unique()) {
    incident[x.h.value].push_back({x.r.value, x.t, true});
    incident[x.t.value].push_back({x.r.value, x.h, false});
  }

  // Two-atom bodies. The X atom is b1(X,Z) or b1(Z,X); the Y atom is b2(Z,Y)
  // when z has an outgoing b2 edge, b2(Y,Z) for an incoming one.
  for (std::uint32_t b1 = 0; b1 < g.num_relations(); ++b1) {
    for (const bool x_first : {true, false}) {
      std::map<std::pair<std::uint32_t, bool>, PairSet> patterns;
      for (const auto& f : by_relation[b1]) {
        const EntityId x = x_first ? f.h : f.t;
        const EntityId z = x_first ? f.t : f.h;
        for (const auto& e : incident[z.value])
          patterns[{e.relation, e.outgoing}].insert(pair_key(x, e.other));
      }
      const Atom a1{RelationId{b1}, x_first ? Var::X : Var::Z,
                    x_first ? Var::Z : Var::X};
      for (const auto& [pattern, bindings] : patterns) {
        const auto [b2, z_first] = pattern;
        const Atom a2{RelationId{b2}, z_first ? Var::Z : Var::Y,
                      z_first ? Var::Y : Var::Z};
        emitter.emit({a1, a2}, bindings);
      }
    }
  }
}

} // namespace

} // namespace kgrbr
