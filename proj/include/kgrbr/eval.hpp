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

#ifndef KGRBR_EVAL_HPP_
#define KGRBR_EVAL_HPP_

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrbr/graph.hpp"
#include "kgrbr/rules.hpp"

namespace kgrbr {

/// Which slot of the test triplet is replaced by every entity.
enum class Side { Head, Tail };

const char* to_string(Side s);
Side parse_side(std::string_view s);

enum class Sides { Both, Head, Tail };
Sides parse_sides(std::string_view s);

/// Lower is better. Must be safe to call concurrently when evaluating with
/// more than one thread.
using ScoreFn = std::function<double(const Triplet&)>;

/// Rank of test among itself and its corruptions on `side`. With filtered,
/// corruptions present in any split are skipped. Ties count against the test
/// triplet: rank = 1 + #(score < test) + #(score == test).
std::size_t rank_candidates(const KnowledgeGraph& g, const ScoreFn& score,
                            const Triplet& test, Side side,
                            bool filtered = true);

/// Scores every candidate with `base`, rescores the test triplet and the N
/// best-scoring corruptions with `refined`, then ranks as rank_candidates
/// does. Throws ConfigError when window == 0.
std::size_t rerank_window(const KnowledgeGraph& g, const ScoreFn& base,
                          const ScoreFn& refined, const Triplet& test,
                          Side side, std::size_t window, bool filtered = true);

struct Metrics {
  double mr = 0;
  double mrr = 0;
  double hits1 = 0;
  double hits10 = 0;
  std::size_t n_queries = 0;
};

Metrics compute_metrics(std::span<const std::size_t> ranks);

struct QueryRank {
  std::size_t test_index = 0;
  Side side = Side::Tail;
  std::size_t rank = 1;
};

struct Evaluation {
  Metrics pooled;
  Metrics head;
  Metrics tail;
  std::vector<QueryRank> ranks; ///< ordered by test index, head before tail
};

struct EvalOptions {
  Sides sides = Sides::Both;
  bool filtered = true;
  std::size_t threads = 1;
};

using RankFn = std::function<std::size_t(const Triplet& test, Side side)>;

/// Runs rank_fn for every (test triplet, side) pair and aggregates. Output is
/// identical for any thread count.
Evaluation evaluate_with(std::span<const Triplet> tests, const EvalOptions& opts,
                         const RankFn& rank_fn);

/// Filtered (or raw) evaluation of a scorer over every candidate.
Evaluation evaluate(const KnowledgeGraph& g, const ScoreFn& score,
                    std::span<const Triplet> tests, const EvalOptions& opts = {});

/// Baseline and reasoning ranks of one (test triplet, side) query.
struct RankRecord {
  std::size_t test_index = 0;
  Side side = Side::Tail;
  std::size_t rank_baseline = 1;
  std::size_t rank_emrbr = 1;
};

/// Pairs two rank streams by (test_index, side). Throws DataError listing
/// keys present in only one stream.
std::vector<RankRecord> join_ranks(std::span<const QueryRank> baseline,
                                   std::span<const QueryRank> emrbr);

struct DeltaRow {
  std::size_t test_index = 0;
  Side side = Side::Tail;
  std::size_t rank_emrbr = 1;
  std::size_t rank_baseline = 1;
  long long delta = 0; ///< rank_baseline - rank_emrbr
};

/// Rank-delta table sorted by descending improvement; ties by test index then
/// side.
std::vector<DeltaRow> compare_ranks(std::span<const QueryRank> baseline,
                                    std::span<const QueryRank> emrbr);
std::vector<DeltaRow> compare_ranks(std::span<const RankRecord> records);

void write_rank_csv(std::ostream& out, std::span<const RankRecord> records);
std::vector<RankRecord> read_rank_csv(std::istream& in);
void write_delta_csv(std::ostream& out, std::span<const DeltaRow> rows);

/// Test indices whose relation heads at least min_rules rules, by descending
/// rule count then ascending index, truncated to limit.
std::vector<std::size_t> build_rule_rich_subset(std::span<const Triplet> tests,
                                                const RuleIndex& index,
                                                std::size_t min_rules,
                                                std::size_t limit);

/// {"mr":..,"mrr":..,"hits1":..,"hits10":..,"n_queries":..,
///  "percent":{..},"per_side":{"head":{..},"tail":{..}}}
std::string metrics_json(const Evaluation& e);

/// Aligned text table of one or more named evaluations.
std::string metrics_table(
    std::span<const std::pair<std::string, const Evaluation*>> rows);

} // namespace kgrbr

#endif // KGRBR_EVAL_HPP_
