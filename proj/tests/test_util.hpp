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

// Shared fixtures for the unit and acceptance suites: random instances,
// fixed-value scorers and a finite-difference gradient check.

#ifndef KGRBR_TESTS_TEST_UTIL_HPP_
#define KGRBR_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgrbr/embedding.hpp"
#include "kgrbr/graph.hpp"
#include "kgrbr/reasoner.hpp"
#include "kgrbr/rules.hpp"
#include "kgrbr/scorer.hpp"

namespace kgrbr::testing {

inline Triplet T(std::uint32_t h, std::uint32_t r, std::uint32_t t)
{
  return {EntityId{h}, RelationId{r}, EntityId{t}};
}

inline Atom A(std::uint32_t rel, Var a, Var b) { return {RelationId{rel}, a, b}; }

inline Rule make_rule(std::vector<Atom> body, std::uint32_t head,
                      std::optional<double> omega = std::nullopt)
{
  Rule r;
  r.body = std::move(body);
  r.head = RelationId{head};
  r.omega = omega;
  return r;
}

/// Scores from a table; train facts score 1, anything else the default.
class MapScorer final : public TripletScorer {
public:
  MapScorer(const KnowledgeGraph& g, double fallback) : g_(g), fallback_(fallback) {}

  void set(const Triplet& x, double s) { scores_[x] = s; }

  double score(const Triplet& x) const override
  {
    if (g_.contains(x))
      return 1.0;
    const auto it = scores_.find(x);
    return it == scores_.end() ? fallback_ : it->second;
  }

private:
  const KnowledgeGraph& g_;
  double fallback_;
  std::unordered_map<Triplet, double, TripletHash> scores_;
};

/// Uniform components in [-scale, scale]; TransH normals are unit length.
inline EmbeddingModel random_model(std::mt19937_64& rng, ModelKind kind,
                                   std::size_t dim, std::size_t n_entities,
                                   std::size_t n_relations, double scale,
                                   int norm_order = 2)
{
  EmbeddingModel m(kind, dim, n_entities, n_relations, norm_order);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : m.entity_data()) v = u(rng);
  for (auto& v : m.relation_data()) v = u(rng);
  if (kind == ModelKind::TransH) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t r = 0; r < n_relations; ++r) {
      auto w = m.normal(RelationId{static_cast<std::uint32_t>(r)});
      double norm = 0;
      for (auto& v : w) {
        v = n(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (auto& v : w) v /= norm;
    }
  }
  return m;
}

inline std::vector<Triplet> random_triplets(std::mt19937_64& rng,
                                            std::size_t n_entities,
                                            std::size_t n_relations,
                                            std::size_t count)
{
  std::uniform_int_distribution<std::uint32_t> e(0, static_cast<std::uint32_t>(n_entities - 1));
  std::uniform_int_distribution<std::uint32_t> r(0, static_cast<std::uint32_t>(n_relations - 1));
  std::vector<Triplet> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(T(e(rng), r(rng), e(rng)));
  return out;
}

/// A random closed, connected rule over relations [0, n_relations), never
/// the tautology B(X,Y) => B(X,Y). Canonical form.
inline Rule random_rule(std::mt19937_64& rng, std::size_t n_relations,
                        double chain_probability = 0.7)
{
  std::uniform_int_distribution<std::uint32_t> rel(0, static_cast<std::uint32_t>(n_relations - 1));
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution chain(chain_probability);
  for (;;) {
    Rule r;
    r.head = RelationId{rel(rng)};
    if (chain(rng)) {
      const bool x_first = coin(rng), z_first = coin(rng);
      r.body = {x_first ? A(rel(rng), Var::X, Var::Z) : A(rel(rng), Var::Z, Var::X),
                z_first ? A(rel(rng), Var::Z, Var::Y) : A(rel(rng), Var::Y, Var::Z)};
    } else {
      const auto b = rel(rng);
      if (coin(rng)) {
        if (b == r.head.value)
          continue;
        r.body = {A(b, Var::X, Var::Y)};
      } else {
        r.body = {A(b, Var::Y, Var::X)};
      }
    }
    return canonicalize(std::move(r));
  }
}

struct InstanceLimits {
  std::size_t max_entities = 50;
  std::size_t max_relations = 8;
  std::size_t max_train = 300;
  std::size_t max_rules = 10;
  std::size_t dim = 4;
};

/// Graph, embedding model and measured rules for randomized reasoning tests.
struct Instance {
  KnowledgeGraph g;
  EmbeddingModel model{ModelKind::TransE, 1, 0, 0};
  RuleIndex index;
};

inline Instance random_instance(std::mt19937_64& rng, const InstanceLimits& lim = {})
{
  std::uniform_int_distribution<std::size_t> ne(4, lim.max_entities);
  std::uniform_int_distribution<std::size_t> nr(1, lim.max_relations);
  const std::size_t n_entities = ne(rng), n_relations = nr(rng);
  std::uniform_int_distribution<std::size_t> nt(1, std::min(lim.max_train, 4 * n_entities));
  std::uniform_int_distribution<std::size_t> nrules(1, lim.max_rules);
  // Scale controls how far rule and triplet scores sit above 1, so both
  // pruning regimes (tight and loose) are exercised across instances.
  std::uniform_real_distribution<double> scale(0.05, 1.0);
  std::bernoulli_distribution transh(0.3);

  Instance inst;
  inst.g = KnowledgeGraph::from_ids(n_entities, n_relations,
                                    random_triplets(rng, n_entities, n_relations, nt(rng)));
  inst.model = random_model(rng, transh(rng) ? ModelKind::TransH : ModelKind::TransE,
                            lim.dim, n_entities, n_relations, scale(rng));
  std::vector<Rule> rules;
  const std::size_t n_rules = nrules(rng);
  for (std::size_t i = 0; i < n_rules; ++i)
    rules.push_back(random_rule(rng, n_relations));
  inst.index = RuleIndex::build(std::move(rules), inst.model);
  return inst;
}

/// Query triplets biased towards relations that head at least one rule.
inline Triplet random_query(std::mt19937_64& rng, const Instance& inst)
{
  std::uniform_int_distribution<std::uint32_t> e(
      0, static_cast<std::uint32_t>(inst.g.num_entities() - 1));
  std::uniform_int_distribution<std::size_t> pick(0, inst.index.size() - 1);
  std::bernoulli_distribution from_train(0.1);
  if (from_train(rng) && !inst.g.train().empty()) {
    std::uniform_int_distribution<std::size_t> i(0, inst.g.train().size() - 1);
    return inst.g.train()[i(rng)];
  }
  const RelationId r = inst.index.empty()
                           ? RelationId{0}
                           : inst.index.rule(static_cast<RuleId>(pick(rng))).head;
  return {EntityId{e(rng)}, r, EntityId{e(rng)}};
}

/// Records every violated state invariant seen during phi().
class InvariantObserver final : public SearchObserver {
public:
  InvariantObserver(const RuleIndex& index, const TripletScorer& scorer)
  : index_(index), scorer_(scorer) {}

  void on_pop(const SearchState& s, double, PopAction) override { check(s); }

  void on_child(const SearchState& parent, const SearchState& child, double,
                ChildAction) override
  {
    check(child);
    if (!(child.h_score > parent.h_score))
      violations.push_back("child H not above parent H");
  }

  std::vector<std::string> violations;
  std::size_t states_checked = 0;

private:
  void check(const SearchState& s)
  {
    ++states_checked;
    if (auto v = check_state_invariants(s, index_, &scorer_))
      violations.push_back(*v);
  }
  const RuleIndex& index_;
  const TripletScorer& scorer_;
};

/// Dense vector of every model parameter, in entity, relation, normal order.
inline std::vector<double*> parameter_pointers(EmbeddingModel& m)
{
  std::vector<double*> out;
  for (auto& v : m.entity_data()) out.push_back(&v);
  for (auto& v : m.relation_data()) out.push_back(&v);
  for (auto& v : m.normal_data()) out.push_back(&v);
  return out;
}

/// Flattens a sparse gradient onto parameter_pointers() order.
inline std::vector<double> dense_gradient(const EmbeddingModel& m, const Gradient& g)
{
  const std::size_t k = m.dim();
  const std::size_t ne = m.entity_data().size(), nr = m.relation_data().size();
  std::vector<double> out(ne + nr + m.normal_data().size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t base = 0;
    switch (g.block(i)) {
    case Gradient::Block::Entity: base = 0; break;
    case Gradient::Block::Relation: base = ne; break;
    case Gradient::Block::Normal: base = ne + nr; break;
    }
    const auto v = g.values(i);
    for (std::size_t j = 0; j < k; ++j)
      out[base + g.row(i) * k + j] += v[j];
  }
  return out;
}

/// ||analytic - numeric|| / max(||analytic||, ||numeric||) for the hinge
/// loss of (pos, neg), using central differences with step h.
inline double gradient_relative_error(EmbeddingModel model, const Triplet& pos,
                                      const Triplet& neg, double margin,
                                      double h = 1e-6)
{
  Gradient grad(model.dim());
  hinge_loss(model, pos, neg, margin, &grad);
  const auto analytic = dense_gradient(model, grad);
  const auto params = parameter_pointers(model);
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + h;
    const double up = hinge_loss(model, pos, neg, margin, nullptr);
    *params[i] = saved - h;
    const double down = hinge_loss(model, pos, neg, margin, nullptr);
    *params[i] = saved;
    const double numeric = (up - down) / (2 * h);
    diff += (analytic[i] - numeric) * (analytic[i] - numeric);
    na += analytic[i] * analytic[i];
    nn += numeric * numeric;
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn));
  return denom == 0 ? 0 : std::sqrt(diff) / denom;
}

/// h + r - t for TransE, the same on hyperplane projections for TransH.
inline std::vector<double> residual(const EmbeddingModel& m, const Triplet& x)
{
  const auto h = m.entity(x.h), t = m.entity(x.t);
  const auto d = m.relation_vector(x.r);
  std::vector<double> diff(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    diff[i] = h[i] - t[i];
  if (m.kind() == ModelKind::TransH) {
    const auto w = m.normal(x.r);
    double dot = 0;
    for (std::size_t i = 0; i < m.dim(); ++i)
      dot += w[i] * diff[i];
    for (std::size_t i = 0; i < m.dim(); ++i)
      diff[i] -= dot * w[i];
  }
  for (std::size_t i = 0; i < m.dim(); ++i)
    diff[i] += d[i];
  return diff;
}

/// A random active-hinge gradient-check instance: a small model whose
/// score differences sit well away from the hinge and norm kinks.
struct GradientCase {
  EmbeddingModel model{ModelKind::TransE, 1, 0, 0};
  Triplet pos, neg;
  double margin = 1;
};

inline GradientCase random_gradient_case(std::mt19937_64& rng, ModelKind kind,
                                         int norm_order)
{
  std::uniform_int_distribution<std::size_t> dim(2, 8);
  for (;;) {
    GradientCase c;
    const std::size_t k = dim(rng);
    c.model = random_model(rng, kind, k, 5, 3, 0.5, norm_order);
    const auto t = random_triplets(rng, 5, 3, 1)[0];
    std::uniform_int_distribution<std::uint32_t> e(0, 4);
    c.pos = t;
    c.neg = t;
    (std::bernoulli_distribution(0.5)(rng) ? c.neg.h : c.neg.t) = EntityId{e(rng)};
    if (c.neg == c.pos)
      continue;
    const double gap = c.model.score_raw(c.neg) - c.model.score_raw(c.pos);
    c.margin = std::max(0.5, gap + 0.5);
    if (c.margin + c.model.score_raw(c.pos) - c.model.score_raw(c.neg) < 1e-2)
      continue;
    if (norm_order == 1) {
      bool smooth = true;
      for (const auto& x : {c.pos, c.neg})
        for (const double v : residual(c.model, x))
          smooth = smooth && std::abs(v) > 1e-3;
      if (!smooth)
        continue;
    }
    if (c.model.score_raw(c.pos) < 1e-3 || c.model.score_raw(c.neg) < 1e-3)
      continue;
    return c;
  }
}

} // namespace kgrbr::testing

#endif // KGRBR_TESTS_TEST_UTIL_HPP_
