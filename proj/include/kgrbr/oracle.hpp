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

#ifndef KGRBR_ORACLE_HPP_
#define KGRBR_ORACLE_HPP_

// Brute-force reference implementations. They share no search or indexing
// code with the reasoner and the miner: membership is a dense table built from
// the raw train list and groundings enumerate every entity. Exponential; for
// small instances only.

#include <cstddef>
#include <vector>

#include "kgrbr/graph.hpp"
#include "kgrbr/rules.hpp"
#include "kgrbr/scorer.hpp"

namespace kgrbr::oracle {

/// Minimum state score over every state reachable from x in at most
/// max_depth rule applications, including x's own score. No pruning, no
/// memoization. Throws InstanceTooLarge after state_limit states.
double exhaustive_phi(const KnowledgeGraph& g, const TripletScorer& scorer,
                      const RuleIndex& index, const Triplet& x,
                      std::size_t max_depth,
                      std::size_t state_limit = 5'000'000);

/// Every closed connected rule with support >= 1 and at most max_body_atoms
/// atoms, with exact support and standard confidence over distinct (X, Y)
/// bindings. Sorted like mine_rules.
std::vector<Rule> exhaustive_rules(const KnowledgeGraph& g,
                                   std::size_t max_body_atoms);

} // namespace kgrbr::oracle

#endif // KGRBR_ORACLE_HPP_
