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

#include "kgrbr/reasoner.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <ostream>
#include <queue>
#include <unordered_map>

#include <json.hpp>

namespace kgrbr {

namespace {

EntityId bind(Var v, EntityId x, EntityId y, EntityId z)
{
  switch (v) {
  case Var::X: return x;
  case Var::Y: return y;
  case Var::Z: return z;
  }
  return x;
}

Triplet ground(const Atom& a, EntityId x, EntityId y, EntityId z = {})
{
  return {bind(a.arg1, x, y, z), a.relation, bind(a.arg2, x, y, z)};
}

/// Z candidates reachable from `node` (bound to `at`) through atom a.
std::span<const EntityId> z_candidates(const KnowledgeGraph& g, const Atom& a,
                                       Var at, EntityId node)
{
  // a = rel(at, Z): Z is a tail of node; a = rel(Z, at): Z is a head of node.
  return a.arg1 == at ? g.neighbors_out(node, a.relation)
                      : g.neighbors_in(node, a.relation);
}

struct SignatureHash {
  std::size_t operator()(const std::vector<Triplet>& sig) const noexcept
  {
    std::size_t h = sig.size();
    TripletHash th;
    for (const auto& x : sig)
      h = static_cast<std::size_t>(mix64(h ^ th(x)));
    return h;
  }
};

struct QueueEntry {
  double h;
  std::size_t seq;
  std::size_t slot;
};

struct QueueOrder {
  double eps;
  // std::priority_queue pops the "largest"; invert so the smallest H wins.
  bool operator()(const QueueEntry& a, const QueueEntry& b) const
  {
    if (std::abs(a.h - b.h) > eps)
      return a.h > b.h;
    return a.seq > b.seq;
  }
};

} // namespace

std::optional<std::size_t> SearchState::open_index() const
{
  for (std::size_t i = 0; i < triplets.size(); ++i)
    if (!triplets[i].in_kg)
      return i;
  return std::nullopt;
}

std::vector<Triplet> SearchState::signature() const
{
  std::vector<Triplet> sig;
  sig.reserve(triplets.size());
  for (const auto& st : triplets)
    sig.push_back(st.triplet);
  std::sort(sig.begin(), sig.end());
  return sig;
}

std::vector<Expansion> expand_triplet(const KnowledgeGraph& g,
                                      const RuleIndex& index, const Triplet& x)
{
  std::vector<Expansion> out;
  std::vector<EntityId> zs;
  for (const Rule& rule : index.rules_for(x.r)) {
    const RuleId id = index.id_of(rule);
    if (!rule.is_chain()) {
      out.push_back({id, {ground(rule.body[0], x.h, x.t)}});
      continue;
    }
    const Atom& xa = rule.body[0];
    const Atom& ya = rule.body[1];
    const auto from_x = z_candidates(g, xa, Var::X, x.h);
    const auto from_y = z_candidates(g, ya, Var::Y, x.t);
    zs.clear();
    std::set_union(from_x.begin(), from_x.end(), from_y.begin(), from_y.end(),
                   std::back_inserter(zs));
    for (const EntityId z : zs)
      out.push_back({id, {ground(xa, x.h, x.t, z), ground(ya, x.h, x.t, z)}});
  }
  return out;
}

std::vector<SearchState> extend_state(const KnowledgeGraph& g,
                                      const TripletScorer& scorer,
                                      const RuleIndex& index,
                                      const SearchState& s)
{
  const auto open = s.open_index();
  assert(open && "terminal states are never extended");
  if (!open)
    return {};

  std::vector<SearchState> children;
  for (auto& e : expand_triplet(g, index, s.triplets[*open].triplet)) {
    SearchState c;
    c.triplets.reserve(s.triplets.size() + e.replacement.size() - 1);
    c.triplets.insert(c.triplets.end(), s.triplets.begin(),
                      s.triplets.begin() + static_cast<std::ptrdiff_t>(*open));
    for (const auto& t : e.replacement)
      c.triplets.push_back({t, g.contains(t)});
    c.triplets.insert(c.triplets.end(),
                      s.triplets.begin() + static_cast<std::ptrdiff_t>(*open) + 1,
                      s.triplets.end());
    c.h_score = s.h_score * *index.rule(e.rule).omega;
    c.l_score = c.h_score;
    for (const auto& st : c.triplets)
      if (!st.in_kg)
        c.l_score *= scorer.score(st.triplet);
    c.depth = s.depth + 1;
    c.path = s.path;
    c.path.push_back(e.rule);
    children.push_back(std::move(c));
  }
  return children;
}

const char* to_string(PopAction a)
{
  switch (a) {
  case PopAction::Extend: return "extend";
  case PopAction::Cutoff: return "cutoff";
  case PopAction::DepthLimit: return "depth_limit";
  case PopAction::Terminal: return "terminal";
  }
  return "?";
}

const char* to_string(ChildAction a)
{
  switch (a) {
  case ChildAction::Push: return "push";
  case ChildAction::Reject: return "reject";
  case ChildAction::Terminal: return "terminal";
  case ChildAction::Duplicate: return "duplicate";
  }
  return "?";
}

std::string JsonTraceWriter::describe(const SearchState& s) const
{
  std::string sig;
  for (const auto& st : s.triplets) {
    if (!sig.empty())
      sig += ' ';
    sig += '(' + g_.name(st.triplet.h) + ',' + g_.name(st.triplet.r) + ','
           + g_.name(st.triplet.t) + ')';
    if (!st.in_kg)
      sig += '*';
  }
  return sig;
}

void JsonTraceWriter::on_pop(const SearchState& s, double phi, PopAction a)
{
  nlohmann::ordered_json j;
  j["event"] = "pop";
  j["state"] = describe(s);
  j["h"] = s.h_score;
  j["l"] = s.l_score;
  j["phi"] = phi;
  j["action"] = to_string(a);
  out_ << j.dump() << '\n';
}

void JsonTraceWriter::on_child(const SearchState& parent,
                               const SearchState& child, double phi,
                               ChildAction a)
{
  nlohmann::ordered_json j;
  j["event"] = "child";
  j["parent"] = describe(parent);
  j["state"] = describe(child);
  j["rule"] = child.path.back();
  j["h"] = child.h_score;
  j["l"] = child.l_score;
  j["phi"] = phi;
  j["action"] = to_string(a);
  out_ << j.dump() << '\n';
}

PhiResult phi(const KnowledgeGraph& g, const TripletScorer& scorer,
              const RuleIndex& index, const Triplet& x,
              const SearchConfig& cfg, SearchObserver* observer)
{
  PhiResult result;
  const bool in_kg = g.contains(x);
  result.phi = in_kg ? 1.0 : scorer.score(x);
  if (in_kg || index.rules_for(x.r).empty())
    return result;

  std::vector<SearchState> slots;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueOrder> queue(
      QueueOrder{cfg.epsilon_tie});
  std::unordered_map<std::vector<Triplet>, double, SignatureHash> best_h;
  std::size_t seq = 0;

  auto push = [&](SearchState s) {
#ifndef NDEBUG
    const auto violation = check_state_invariants(s, index, &scorer);
    assert(!violation && "search state invariant violated");
#endif
    queue.push({s.h_score, seq++, slots.size()});
    slots.push_back(std::move(s));
  };

  SearchState root;
  root.triplets.push_back({x, false});
  root.h_score = 1.0;
  root.l_score = result.phi;
  best_h[root.signature()] = root.h_score;
  push(std::move(root));

  while (!queue.empty()) {
    if (result.pops >= cfg.max_pops) {
      result.truncated = true;
      break;
    }
    const QueueEntry top = queue.top();
    queue.pop();
    ++result.pops;
    SearchState cur = std::move(slots[top.slot]);

    if (cur.l_score < result.phi) {
      result.phi = cur.l_score;
      result.best_path = cur.path;
    }

    PopAction action = PopAction::Extend;
    if (cur.terminal())
      action = PopAction::Terminal;
    else if (!(cur.h_score < result.phi))
      action = PopAction::Cutoff;
    else if (cur.depth >= cfg.max_depth)
      action = PopAction::DepthLimit;
    if (observer)
      observer->on_pop(cur, result.phi, action);
    if (action != PopAction::Extend)
      continue;

    for (auto& child : extend_state(g, scorer, index, cur)) {
      ChildAction ca = ChildAction::Push;
      if (!(child.h_score < cur.l_score)) {
        ca = ChildAction::Reject;
      } else if (child.terminal()) {
        ca = ChildAction::Terminal;
        if (child.l_score < result.phi) {
          result.phi = child.l_score;
          result.best_path = child.path;
        }
      } else {
        auto [it, inserted] = best_h.try_emplace(child.signature(), child.h_score);
        if (!inserted) {
          if (it->second <= child.h_score)
            ca = ChildAction::Duplicate;
          else
            it->second = child.h_score;
        }
      }
      if (observer)
        observer->on_child(cur, child, result.phi, ca);
      if (ca == ChildAction::Push)
        push(std::move(child));
    }
  }
  return result;
}

std::optional<std::string> check_state_invariants(const SearchState& s,
                                                  const RuleIndex& index,
                                                  const TripletScorer* scorer)
{
  std::size_t open = 0;
  for (const auto& st : s.triplets)
    open += st.in_kg ? 0 : 1;
  if (open > 1)
    return "more than one out-of-graph triplet";
  if (s.depth != s.path.size())
    return "depth differs from path length";

  std::size_t chains = 0;
  double h = 1.0;
  for (const RuleId id : s.path) {
    const Rule& r = index.rule(id);
    chains += r.is_chain() ? 1 : 0;
    h *= *r.omega;
  }
  if (s.triplets.size() != chains + 1)
    return "triplet count differs from 1 + chain extensions";
  if (!(s.h_score >= 1.0))
    return "H below 1";
  if (std::abs(s.h_score - h) > 1e-12 * h)
    return "H is not the product of rule scores";
  if (!(s.l_score >= s.h_score))
    return "L below H";
  if (scorer) {
    double l = s.h_score;
    for (const auto& st : s.triplets)
      if (!st.in_kg)
        l *= scorer->score(st.triplet);
    if (std::abs(s.l_score - l) > 1e-12 * l)
      return "L is not H times the triplet scores";
  }
  return std::nullopt;
}

} // namespace kgrbr
