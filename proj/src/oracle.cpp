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

#include "kgrbr/oracle.hpp"

#include <algorithm>
#include <stdexcept>

#include "kgrbr/error.hpp"

namespace kgrbr::oracle {

namespace {

/// Dense [relation][head][tail] membership over the raw train list.
class FactTable {
public:
  explicit FactTable(const KnowledgeGraph& g)
  : ne_(g.num_entities()), bits_(g.num_relations() * ne_ * ne_, false)
  {
    for (const auto& x : g.train())
      bits_[at(x.h.value, x.r.value, x.t.value)] = true;
  }

  bool holds(std::uint32_t h, std::uint32_t r, std::uint32_t t) const
  {
    return bits_[at(h, r, t)];
  }
  bool holds(const Triplet& x) const { return holds(x.h.value, x.r.value, x.t.value); }

private:
  std::size_t at(std::uint32_t h, std::uint32_t r, std::uint32_t t) const
  {
    return (std::size_t{r} * ne_ + h) * ne_ + t;
  }
  std::size_t ne_;
  std::vector<bool> bits_;
};

Triplet ground(const Atom& a, std::uint32_t x, std::uint32_t y, std::uint32_t z)
{
  auto val = [&](Var v) {
    return v == Var::X ? x : (v == Var::Y ? y : z);
  };
  return {EntityId{val(a.arg1)}, a.relation, EntityId{val(a.arg2)}};
}

class PhiEnumerator {
public:
  PhiEnumerator(const KnowledgeGraph& g, const TripletScorer& scorer,
                const RuleIndex& index, std::size_t max_depth,
                std::size_t limit)
  : facts_(g), scorer_(scorer), rules_(index.all()), n_entities_(g.num_entities()),
    max_depth_(max_depth), limit_(limit)
  {}

  double run(const Triplet& x)
  {
    best_ = facts_.holds(x) ? 1.0 : scorer_.score(x);
    visit({x}, 1.0, 0);
    return best_;
  }

private:
  void visit(const std::vector<Triplet>& state, double h, std::size_t depth)
  {
    if (++states_ > limit_)
      throw InstanceTooLarge("exhaustive_phi state budget exceeded");

    double l = h;
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < state.size(); ++i) {
      if (!facts_.holds(state[i])) {
        l *= scorer_.score(state[i]);
        open.push_back(i);
      }
    }
    best_ = std::min(best_, l);
    if (depth == max_depth_ || open.empty())
      return;
    if (open.size() > 1)
      throw std::logic_error("state with two out-of-graph triplets");

    const Triplet target = state[open[0]];
    const std::uint32_t x = target.h.value, y = target.t.value;
    for (const Rule& rule : rules_) {
      if (rule.head != target.r)
        continue;
      const double child_h = h * *rule.omega;
      if (rule.body.size() == 1) {
        visit(replace(state, open[0], {ground(rule.body[0], x, y, 0)}),
              child_h, depth + 1);
        continue;
      }
      for (std::uint32_t z = 0; z < n_entities_; ++z) {
        const Triplet a = ground(rule.body[0], x, y, z);
        const Triplet b = ground(rule.body[1], x, y, z);
        if (facts_.holds(a) || facts_.holds(b))
          visit(replace(state, open[0], {a, b}), child_h, depth + 1);
      }
    }
  }

  static std::vector<Triplet> replace(const std::vector<Triplet>& state,
                                      std::size_t pos,
                                      std::initializer_list<Triplet> with)
  {
    std::vector<Triplet> out(state.begin(), state.begin() + static_cast<std::ptrdiff_t>(pos));
    out.insert(out.end(), with);
    out.insert(out.end(), state.begin() + static_cast<std::ptrdiff_t>(pos) + 1,
               state.end());
    return out;
  }

  FactTable facts_;
  const TripletScorer& scorer_;
  const std::vector<Rule>& rules_;
  std::uint32_t n_entities_;
  std::size_t max_depth_;
  std::size_t limit_;
  std::size_t states_ = 0;
  double best_ = 0;
};

} // namespace

double exhaustive_phi(const KnowledgeGraph& g, const TripletScorer& scorer,
                      const RuleIndex& index, const Triplet& x,
                      std::size_t max_depth, std::size_t state_limit)
{
  PhiEnumerator e(g, scorer, index, max_depth, state_limit);
  return e.run(x);
}

std::vector<Rule> exhaustive_rules(const KnowledgeGraph& g,
                                   std::size_t max_body_atoms)
{
  const FactTable facts(g);
  const auto ne = static_cast<std::uint32_t>(g.num_entities());
  const auto nr = static_cast<std::uint32_t>(g.num_relations());

  // All body shapes: single atoms over (X,Y) and chains X-atom & Y-atom.
  std::vector<std::vector<Atom>> bodies;
  for (std::uint32_t b = 0; b < nr; ++b) {
    bodies.push_back({{RelationId{b}, Var::X, Var::Y}});
    bodies.push_back({{RelationId{b}, Var::Y, Var::X}});
  }
  if (max_body_atoms >= 2) {
    for (std::uint32_t b1 = 0; b1 < nr; ++b1)
      for (const bool x_first : {true, false})
        for (std::uint32_t b2 = 0; b2 < nr; ++b2)
          for (const bool z_first : {true, false})
            bodies.push_back(
                {{RelationId{b1}, x_first ? Var::X : Var::Z, x_first ? Var::Z : Var::X},
                 {RelationId{b2}, z_first ? Var::Z : Var::Y, z_first ? Var::Y : Var::Z}});
  }

  std::vector<Rule> out;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bindings;
  for (const auto& body : bodies) {
    bindings.clear();
    for (std::uint32_t x = 0; x < ne; ++x) {
      for (std::uint32_t y = 0; y < ne; ++y) {
        bool holds = false;
        if (body.size() == 1) {
          holds = facts.holds(ground(body[0], x, y, 0));
        } else {
          for (std::uint32_t z = 0; z < ne && !holds; ++z)
            holds = facts.holds(ground(body[0], x, y, z))
                    && facts.holds(ground(body[1], x, y, z));
        }
        if (holds)
          bindings.emplace_back(x, y);
      }
    }
    if (bindings.empty())
      continue;

    for (std::uint32_t head = 0; head < nr; ++head) {
      if (body.size() == 1 && body[0].relation.value == head
          && body[0].arg1 == Var::X)
        continue;
      std::size_t support = 0;
      for (const auto& [x, y] : bindings)
        support += facts.holds(x, head, y) ? 1 : 0;
      if (support == 0)
        continue;
      Rule r;
      r.body = body;
      r.head = RelationId{head};
      r.support = support;
      r.confidence = static_cast<double>(support)
                     / static_cast<double>(bindings.size());
      out.push_back(std::move(r));
    }
  }

  std::sort(out.begin(), out.end(), [](const Rule& a, const Rule& b) {
    if (a.head != b.head)
      return a.head < b.head;
    if (a.body.size() != b.body.size())
      return a.body.size() < b.body.size();
    return a.body < b.body;
  });
  return out;
}

} // namespace kgrbr::oracle
