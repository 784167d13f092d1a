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

#ifndef KGRBR_REASONER_HPP_
#define KGRBR_REASONER_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kgrbr/graph.hpp"
#include "kgrbr/rules.hpp"
#include "kgrbr/scorer.hpp"

namespace kgrbr {

struct StateTriplet {
  Triplet triplet;
  bool in_kg = false;
};

/// A set of triplets reached from the query by rewriting its single
/// out-of-graph triplet with rules.
///
/// Invariants: at most one triplet has in_kg == false; h_score is the product
/// of omega over path; l_score = h_score * product of triplet scores; depth
/// equals path.size(); a chain rule grows the state by one triplet, a
/// single-atom rule keeps its size.
struct SearchState {
  std::vector<StateTriplet> triplets;
  double h_score = 1.0;
  double l_score = 1.0;
  std::size_t depth = 0;
  std::vector<RuleId> path;

  /// Index of the out-of-graph triplet; nullopt for a terminal state.
  std::optional<std::size_t> open_index() const;
  bool terminal() const { return !open_index().has_value(); }

  /// Sorted triplet list; identical for states holding the same multiset.
  std::vector<Triplet> signature() const;
};

struct SearchConfig {
  std::size_t max_depth = 10;
  std::size_t max_pops = 100000;
  /// H values closer than this pop in insertion order. Keep at 0 (exact
  /// ordering) unless scores carry accumulated rounding noise.
  double epsilon_tie = 0.0;
};

/// One way to rewrite a triplet: the rule used and its grounded body.
struct Expansion {
  RuleId rule;
  std::vector<Triplet> replacement;
};

/// Groundings of every rule whose head matches x.r, with X = x.h, Y = x.t.
/// Chain rules bind Z to every train neighbour of x.h through the X atom and
/// of x.t through the Y atom, so at least one replacement triplet is a train
/// fact. Single-atom rules yield their one grounded triplet. Output ordered by
/// rule (ascending omega) then Z; free of duplicates.
std::vector<Expansion> expand_triplet(const KnowledgeGraph& g,
                                      const RuleIndex& index, const Triplet& x);

/// Children of a non-terminal state, one per expansion of its open triplet.
std::vector<SearchState> extend_state(const KnowledgeGraph& g,
                                      const TripletScorer& scorer,
                                      const RuleIndex& index,
                                      const SearchState& s);

enum class PopAction { Extend, Cutoff, DepthLimit, Terminal };
enum class ChildAction { Push, Reject, Terminal, Duplicate };

const char* to_string(PopAction a);
const char* to_string(ChildAction a);

/// Receives search events; used for traces and invariant checking.
class SearchObserver {
public:
  virtual ~SearchObserver() = default;
  virtual void on_pop(const SearchState& /*s*/, double /*phi*/, PopAction) {}
  virtual void on_child(const SearchState& /*parent*/,
                        const SearchState& /*child*/, double /*phi*/,
                        ChildAction) {}
};

/// Writes one JSON object per event (line-delimited JSON).
class JsonTraceWriter final : public SearchObserver {
public:
  JsonTraceWriter(std::ostream& out, const KnowledgeGraph& g) : out_(out), g_(g) {}
  void on_pop(const SearchState& s, double phi, PopAction a) override;
  void on_child(const SearchState& parent, const SearchState& child,
                double phi, ChildAction a) override;

private:
  std::string describe(const SearchState& s) const;
  std::ostream& out_;
  const KnowledgeGraph& g_;
};

struct PhiResult {
  double phi = 1.0;
  std::vector<RuleId> best_path; ///< rules leading to the minimizing state
  bool truncated = false;        ///< max_pops was hit
  std::size_t pops = 0;
};

/// Best-first search for the minimum state score reachable from x.
///
/// The queue is ordered by H (FIFO on ties). Phi starts at the query's own
/// score and takes the minimum L of every popped state. A state is extended
/// only while H < Phi and depth < max_depth; a child is kept only if its H is
/// below the parent's L. Children whose triplets are all train facts update
/// Phi immediately instead of being queued. Identical triplet multisets are
/// queued again only on a strictly lower H.
PhiResult phi(const KnowledgeGraph& g, const TripletScorer& scorer,
              const RuleIndex& index, const Triplet& x,
              const SearchConfig& cfg = {}, SearchObserver* observer = nullptr);

/// Describes the first violated state invariant, or nullopt. When scorer is
/// given, l_score is recomputed and compared as well.
std::optional<std::string> check_state_invariants(
    const SearchState& s, const RuleIndex& index,
    const TripletScorer* scorer = nullptr);

} // namespace kgrbr

#endif // KGRBR_REASONER_HPP_
