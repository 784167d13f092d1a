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

// Five-entity link-prediction fixture with hand-computed metrics.
//
// One dimension, TransE: entity e_i sits at i, the single relation is +1, so
// score_raw(a, b) = |a + 1 - b| and triplet_score = 1 + |a + 1 - b| outside
// train.
//
//   train (0,1) (1,2)   valid (2,2)   test T1 (2,3)  T2 (0,2)  T3 (4,0)
//
// Known = train + valid + test. Filtered candidate scores:
//
//   T1 score 1. head (0,3)=3 (1,3)=2 (3,3)=2 (4,3)=3 -> rank 1
//               tail (2,0)=4 (2,1)=3 (2,4)=2         -> rank 1
//   T2 score 2. head (3,2)=3 (4,2)=4                 -> rank 1
//               tail (0,0)=2 (0,3)=3 (0,4)=4         -> rank 2 (tie counts)
//   T3 score 6. head (0,0)=2 (1,0)=3 (2,0)=4 (3,0)=5 -> rank 5
//               tail (4,1)=5 (4,2)=4 (4,3)=3 (4,4)=2 -> rank 5
//
// Pooled ranks 1,1,1,2,5,5: MR 15/6 = 2.5, MRR 3.9/6 = 0.65, Hits@1 0.5,
// Hits@10 1. Head ranks 1,1,5: MR 7/3, MRR 2.2/3, Hits@1 2/3. Tail ranks
// 1,2,5: MR 8/3, MRR 1.7/3, Hits@1 1/3.

#ifndef KGRBR_TESTS_METRIC_FIXTURE_HPP_
#define KGRBR_TESTS_METRIC_FIXTURE_HPP_

#include "kgrbr/embedding.hpp"
#include "kgrbr/graph.hpp"
#include "test_util.hpp"

namespace kgrbr::testing {

struct MetricFixture {
  KnowledgeGraph g = KnowledgeGraph::from_ids(5, 1, {T(0, 0, 1), T(1, 0, 2)},
                                              {T(2, 0, 2)},
                                              {T(2, 0, 3), T(0, 0, 2), T(4, 0, 0)});
  EmbeddingModel model = make_model();

  static EmbeddingModel make_model()
  {
    EmbeddingModel m(ModelKind::TransE, 1, 5, 1);
    m.entity_data() = {0, 1, 2, 3, 4};
    m.relation_data() = {1};
    return m;
  }

  static constexpr std::size_t kHeadRanks[] = {1, 1, 5};
  static constexpr std::size_t kTailRanks[] = {1, 2, 5};
  static constexpr double kMr = 2.5, kMrr = 0.65, kHits1 = 0.5, kHits10 = 1.0;
  static constexpr double kHeadMr = 7.0 / 3, kHeadMrr = 2.2 / 3, kHeadHits1 = 2.0 / 3;
  static constexpr double kTailMr = 8.0 / 3, kTailMrr = 1.7 / 3, kTailHits1 = 1.0 / 3;
};

} // namespace kgrbr::testing

#endif // KGRBR_TESTS_METRIC_FIXTURE_HPP_
