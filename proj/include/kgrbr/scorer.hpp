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

#ifndef KGRBR_SCORER_HPP_
#define KGRBR_SCORER_HPP_

#include "kgrbr/embedding.hpp"
#include "kgrbr/graph.hpp"
#include "kgrbr/types.hpp"

namespace kgrbr {

/// Per-triplet score used by the reasoner: >= 1, exactly 1 for train facts,
/// lower is more plausible.
class TripletScorer {
public:
  virtual ~TripletScorer() = default;
  virtual double score(const Triplet& x) const = 0;
};

/// Adapts an embedding model: 1 for train facts, score_raw / k + 1 otherwise.
class EmbeddingScorer final : public TripletScorer {
public:
  EmbeddingScorer(const EmbeddingModel& model, const KnowledgeGraph& g)
  : model_(model), g_(g)
  {}

  double score(const Triplet& x) const override
  {
    return model_.triplet_score(g_, x);
  }

  const EmbeddingModel& model() const { return model_; }

private:
  const EmbeddingModel& model_;
  const KnowledgeGraph& g_;
};

} // namespace kgrbr

#endif // KGRBR_SCORER_HPP_
