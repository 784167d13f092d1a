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

#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "kgrbr/oracle.hpp"
#include "kgrbr/reasoner.hpp"
#include "scenario.hpp"
#include "test_util.hpp"

namespace kgrbr {
namespace {

using testing::A;
using testing::MapScorer;
using testing::Scenario;
using testing::T;
using testing::make_rule;

SearchState root_state(const Triplet& x, const TripletScorer& scorer)
{
  SearchState s;
  s.triplets.push_back({x, false});
  s.l_score = scorer.score(x);
  return s;
}

TEST(ExpandTriplet, ChainThroughXAtom)
{
  // rule B1(X,Z) & B2(Z,Y) => r(X,Y); train has (h,B1,z1).
  const auto g = KnowledgeGraph::from_ids(3, 3, {T(0, 1, 2)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Z), A(2, Var::Z, Var::Y)}, 0, 1.1)});
  const auto ex = expand_triplet(g, idx, T(0, 0, 1));
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].replacement, (std::vector<Triplet>{T(0, 1, 2), T(2, 2, 1)}));
  EXPECT_TRUE(g.contains(ex[0].replacement[0]));
  EXPECT_FALSE(g.contains(ex[0].replacement[1]));
}

TEST(ExpandTriplet, ReversedArguments)
{
  // rule B3(Z,X) & B4(Z,Y) => r(X,Y); train has (z1,B3,h).
  const auto g = KnowledgeGraph::from_ids(3, 5, {T(2, 3, 0)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(3, Var::Z, Var::X), A(4, Var::Z, Var::Y)}, 0, 1.1)});
  const auto ex = expand_triplet(g, idx, T(0, 0, 1));
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].replacement, (std::vector<Triplet>{T(2, 3, 0), T(2, 4, 1)}));
}

TEST(ExpandTriplet, NoRulesForRelation)
{
  const auto g = KnowledgeGraph::from_ids(3, 3, {T(0, 1, 2)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Z), A(2, Var::Z, Var::Y)}, 0, 1.1)});
  EXPECT_TRUE(expand_triplet(g, idx, T(0, 2, 1)).empty());
}

TEST(ExpandTriplet, UnionWithoutDuplicates)
{
  // z = 2 is reachable from both sides; z = 3 only from Y.
  const auto g = KnowledgeGraph::from_ids(4, 3, {T(0, 1, 2), T(2, 2, 1), T(3, 2, 1)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Z), A(2, Var::Z, Var::Y)}, 0, 1.1),
       make_rule({A(1, Var::X, Var::Y)}, 0, 1.2)});
  const auto ex = expand_triplet(g, idx, T(0, 0, 1));
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[0].replacement[0], T(0, 1, 2));
  EXPECT_EQ(ex[1].replacement[0], T(0, 1, 3));
  EXPECT_EQ(ex[2].replacement, (std::vector<Triplet>{T(0, 1, 1)}));
  for (const auto& e : ex) {
    if (e.replacement.size() == 2) {
      EXPECT_TRUE(g.contains(e.replacement[0]) || g.contains(e.replacement[1]));
    }
  }
}

TEST(ExtendState, ScoresOfChildren)
{
  const auto g = KnowledgeGraph::from_ids(3, 3, {T(0, 1, 2), T(2, 2, 1)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Z), A(2, Var::Z, Var::Y)}, 0, 1.1)});
  const MapScorer scorer(g, 1.5);
  const auto kids = extend_state(g, scorer, idx, root_state(T(0, 0, 1), scorer));
  ASSERT_EQ(kids.size(), 1u);
  EXPECT_EQ(kids[0].h_score, 1.1);
  EXPECT_EQ(kids[0].l_score, 1.1);
  EXPECT_TRUE(kids[0].terminal());
  EXPECT_EQ(kids[0].depth, 1u);
  EXPECT_EQ(kids[0].path, std::vector<RuleId>{0});
}

TEST(ExtendState, HeuristicIsProductOfOmegas)
{
  // Second level: (0,1,2) is open and rewritten by a 1.2 rule.
  const auto g = KnowledgeGraph::from_ids(4, 4, {T(2, 2, 1), T(0, 3, 3)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Z), A(2, Var::Z, Var::Y)}, 0, 1.1),
       make_rule({A(3, Var::X, Var::Z), A(3, Var::Z, Var::Y)}, 1, 1.2)});
  const MapScorer scorer(g, 1.5);
  const auto lvl1 = extend_state(g, scorer, idx, root_state(T(0, 0, 1), scorer));
  ASSERT_EQ(lvl1.size(), 1u);
  EXPECT_EQ(lvl1[0].h_score, 1.1);
  EXPECT_EQ(lvl1[0].l_score, 1.1 * 1.5);
  const auto lvl2 = extend_state(g, scorer, idx, lvl1[0]);
  ASSERT_EQ(lvl2.size(), 1u);
  EXPECT_EQ(lvl2[0].h_score, 1.1 * 1.2);
  EXPECT_EQ(lvl2[0].triplets.size(), 3u);
  EXPECT_EQ(lvl2[0].depth, 2u);
  EXPECT_FALSE(check_state_invariants(lvl2[0], idx, &scorer).has_value());
}

TEST(Phi, FastPathWithoutRules)
{
  // score_raw = 0.4, k = 2.
  const auto g = KnowledgeGraph::from_ids(2, 1, {});
  EmbeddingModel m(ModelKind::TransE, 2, 2, 1);
  m.relation_data() = {0.24, 0.32};
  const EmbeddingScorer scorer(m, g);
  const auto r = phi(g, scorer, RuleIndex{}, T(0, 0, 1));
  EXPECT_NEAR(r.phi, 1.2, 1e-15);
  EXPECT_TRUE(r.best_path.empty());
  EXPECT_EQ(r.pops, 0u);
}

TEST(Phi, SingleDerivation)
{
  // train {(a,B1,b),(b,B2,c)}; rule omega 1.1; query (a,r,c) scores 1.5.
  const auto g = KnowledgeGraph::from_ids(3, 3, {T(0, 1, 1), T(1, 2, 2)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Z), A(2, Var::Z, Var::Y)}, 0, 1.1)});
  MapScorer scorer(g, 1.5);
  const auto r = phi(g, scorer, idx, T(0, 0, 2));
  EXPECT_EQ(r.phi, 1.1);
  EXPECT_EQ(r.best_path, std::vector<RuleId>{0});
  EXPECT_EQ(oracle::exhaustive_phi(g, scorer, idx, T(0, 0, 2), 3), 1.1);
}

TEST(Phi, TrainQueryIsOne)
{
  const auto g = KnowledgeGraph::from_ids(3, 3, {T(0, 0, 2)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Z), A(2, Var::Z, Var::Y)}, 0, 1.1)});
  const MapScorer scorer(g, 1.5);
  EXPECT_EQ(phi(g, scorer, idx, T(0, 0, 2)).phi, 1.0);
}

TEST(Phi, DepthZeroKeepsEmbeddingScore)
{
  const auto g = KnowledgeGraph::from_ids(3, 3, {T(0, 1, 1), T(1, 2, 2)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Z), A(2, Var::Z, Var::Y)}, 0, 1.1)});
  const MapScorer scorer(g, 1.5);
  SearchConfig cfg;
  cfg.max_depth = 0;
  EXPECT_EQ(phi(g, scorer, idx, T(0, 0, 2), cfg).phi, 1.5);
  EXPECT_EQ(oracle::exhaustive_phi(g, scorer, idx, T(0, 0, 2), 0), 1.5);
}

TEST(Phi, MaxPopsTruncates)
{
  const Scenario sc;
  SearchConfig cfg;
  cfg.max_pops = 2;
  const auto r = phi(sc.graph(), sc.scorer(), sc.index(), Scenario::query(), cfg);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.pops, 2u);
  EXPECT_EQ(r.phi, 1.5); // incumbent after s0 and s1
  const auto full = phi(sc.graph(), sc.scorer(), sc.index(), Scenario::query());
  EXPECT_FALSE(full.truncated);
}

TEST(Phi, ScenarioWalkthrough)
{
  const Scenario sc;
  testing::EventLog log;
  const auto r = phi(sc.graph(), sc.scorer(), sc.index(), Scenario::query(), {}, &log);
  EXPECT_DOUBLE_EQ(r.phi, Scenario::kPhi);
  EXPECT_EQ(r.best_path, (std::vector<RuleId>{sc.rule_id(1), sc.rule_id(3)}));

  using S = Scenario;
  const auto pops = log.pops();
  const std::vector<std::pair<Triplet, PopAction>> expected = {
      {T(S::h, 0, S::t), PopAction::Extend},     // s0
      {T(S::h, 1, S::m1), PopAction::Extend},    // s1
      {T(S::h, 5, S::m3), PopAction::Extend},    // s3
      {T(S::h, 5, S::m4), PopAction::Extend},    // s4
      {T(S::m6, 10, S::m4), PopAction::Cutoff},  // s6
      {T(S::m7, 12, S::m4), PopAction::Cutoff},  // s7
      {T(S::h, 7, S::m5), PopAction::Cutoff},    // s5
  };
  ASSERT_EQ(pops.size(), expected.size());
  for (std::size_t i = 0; i < pops.size(); ++i) {
    ASSERT_TRUE(pops[i].open.has_value());
    EXPECT_EQ(*pops[i].open, expected[i].first) << "pop " << i;
    EXPECT_EQ(pops[i].action, static_cast<int>(expected[i].second)) << "pop " << i;
  }

  // s2 terminates straight from s0, before s1 is popped.
  ASSERT_GE(log.events.size(), 3u);
  EXPECT_FALSE(log.events[2].pop);
  EXPECT_FALSE(log.events[2].open.has_value());
  EXPECT_EQ(log.events[2].action, static_cast<int>(ChildAction::Terminal));
  EXPECT_EQ(log.events[2].phi, 1.5);

  // Both children of s3 are rejected: H reaches L of s3.
  std::size_t rejected = 0;
  for (const auto& e : log.events)
    if (!e.pop && e.action == static_cast<int>(ChildAction::Reject)) {
      ++rejected;
      EXPECT_GE(e.h, Scenario::kPhi);
    }
  EXPECT_EQ(rejected, 2u);

  EXPECT_DOUBLE_EQ(oracle::exhaustive_phi(sc.graph(), sc.scorer(), sc.index(),
                                          Scenario::query(), 10),
                   Scenario::kPhi);
}

TEST(Phi, TraceWriterEmitsJsonLines)
{
  const Scenario sc;
  std::ostringstream out;
  JsonTraceWriter w(out, sc.graph());
  phi(sc.graph(), sc.scorer(), sc.index(), Scenario::query(), {}, &w);
  std::istringstream in(out.str());
  std::string line;
  std::size_t pops = 0, lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    ++lines;
    if (j["event"] == "pop")
      ++pops;
    EXPECT_TRUE(j.contains("h") && j.contains("l") && j.contains("phi")
                && j.contains("action"));
  }
  EXPECT_EQ(pops, 7u);
  EXPECT_GT(lines, pops);
  EXPECT_NE(out.str().find("\"state\":\"(e0,r0,e1)*\""), std::string::npos);
}

TEST(Phi, EqualHeuristicsPopInInsertionOrder)
{
  // Two chain derivations with the same omega; the lower z is pushed first.
  const auto g = KnowledgeGraph::from_ids(4, 3, {T(0, 1, 2), T(0, 1, 3)});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Z), A(2, Var::Z, Var::Y)}, 0, 1.1)});
  const MapScorer scorer(g, 1.5);
  testing::EventLog log;
  phi(g, scorer, idx, T(0, 0, 1), {}, &log);
  const auto pops = log.pops();
  ASSERT_EQ(pops.size(), 3u);
  EXPECT_EQ(*pops[1].open, T(2, 2, 1));
  EXPECT_EQ(*pops[2].open, T(3, 2, 1));
}

TEST(Phi, DuplicateStatesNotRequeued)
{
  // Two single-atom rules that both rewrite (0,r0,1) to (0,r1,1) with
  // different omegas; the second reaches the same triplet set.
  const auto g = KnowledgeGraph::from_ids(2, 3, {});
  const auto idx = RuleIndex::from_measured(
      {make_rule({A(1, Var::X, Var::Y)}, 0, 1.01), make_rule({A(2, Var::X, Var::Y)}, 0, 1.02),
       make_rule({A(1, Var::X, Var::Y)}, 2, 1.01)});
  MapScorer scorer(g, 1.5);
  testing::EventLog log;
  const auto r = phi(g, scorer, idx, T(0, 0, 1), {}, &log);
  std::size_t dup = 0;
  for (const auto& e : log.events)
    if (!e.pop && e.action == static_cast<int>(ChildAction::Duplicate))
      ++dup;
  EXPECT_EQ(dup, 1u);
  EXPECT_DOUBLE_EQ(r.phi, oracle::exhaustive_phi(g, scorer, idx, T(0, 0, 1), 4));
}

TEST(PhiProperty, MatchesOracleAndKeepsInvariants)
{
  std::mt19937_64 rng(99);
  testing::InstanceLimits lim;
  lim.max_entities = 25;
  lim.max_train = 120;
  std::size_t queries = 0;
  for (int round = 0; round < 40; ++round) {
    const auto inst = testing::random_instance(rng, lim);
    const EmbeddingScorer scorer(inst.model, inst.g);
    for (int q = 0; q < 3; ++q) {
      const auto x = testing::random_query(rng, inst);
      SearchConfig cfg;
      cfg.max_depth = 3;
      testing::InvariantObserver obs(inst.index, scorer);
      const auto r = phi(inst.g, scorer, inst.index, x, cfg, &obs);
      const double want = oracle::exhaustive_phi(inst.g, scorer, inst.index, x, 3);
      EXPECT_NEAR(r.phi, want, 1e-9) << "round " << round;
      EXPECT_LE(r.phi, scorer.score(x));
      EXPECT_GE(r.phi, 1.0);
      EXPECT_TRUE(obs.violations.empty()) << obs.violations.front();
      ++queries;
    }
  }
  EXPECT_EQ(queries, 120u);
}

TEST(PhiProperty, BestPathReproducesPhi)
{
  std::mt19937_64 rng(5);
  for (int round = 0; round < 30; ++round) {
    const auto inst = testing::random_instance(rng);
    const EmbeddingScorer scorer(inst.model, inst.g);
    const auto x = testing::random_query(rng, inst);
    SearchConfig cfg;
    cfg.max_depth = 3;
    const auto r = phi(inst.g, scorer, inst.index, x, cfg);
    if (r.best_path.empty()) {
      EXPECT_EQ(r.phi, inst.g.contains(x) ? 1.0 : scorer.score(x));
      continue;
    }
    double h = 1;
    for (const auto id : r.best_path)
      h *= *inst.index.rule(id).omega;
    EXPECT_LE(h, r.phi * (1 + 1e-12));
  }
}

} // namespace
} // namespace kgrbr
