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

#include "kgrbr/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kgrbr/error.hpp"

namespace kgrbr {

namespace {

Triplet corrupt(const Triplet& x, Side side, EntityId e)
{
  Triplet c = x;
  (side == Side::Head ? c.h : c.t) = e;
  return c;
}

/// Corruptions of test on side, excluding test itself and (when filtered)
/// every known triplet, in entity-id order.
template <typename Fn>
void for_each_candidate(const KnowledgeGraph& g, const Triplet& test, Side side,
                        bool filtered, Fn&& fn)
{
  const auto n = static_cast<std::uint32_t>(g.num_entities());
  for (std::uint32_t e = 0; e < n; ++e) {
    const Triplet c = corrupt(test, side, EntityId{e});
    if (c == test || (filtered && g.is_known(c)))
      continue;
    fn(c);
  }
}

std::size_t pessimistic_rank(double test_score, std::span<const double> others)
{
  std::size_t rank = 1;
  for (const double s : others)
    if (s <= test_score)
      ++rank;
  return rank;
}

nlohmann::ordered_json to_json(const Metrics& m)
{
  nlohmann::ordered_json j;
  j["mr"] = m.mr;
  j["mrr"] = m.mrr;
  j["hits1"] = m.hits1;
  j["hits10"] = m.hits10;
  j["n_queries"] = m.n_queries;
  return j;
}

} // namespace

const char* to_string(Side s) { return s == Side::Head ? "head" : "tail"; }

Side parse_side(std::string_view s)
{
  if (s == "head") return Side::Head;
  if (s == "tail") return Side::Tail;
  throw DataError("unknown side: " + std::string(s));
}

Sides parse_sides(std::string_view s)
{
  if (s == "both") return Sides::Both;
  if (s == "head") return Sides::Head;
  if (s == "tail") return Sides::Tail;
  throw ConfigError("sides must be both, head or tail: " + std::string(s));
}

std::size_t rank_candidates(const KnowledgeGraph& g, const ScoreFn& score,
                            const Triplet& test, Side side, bool filtered)
{
  const double test_score = score(test);
  std::size_t rank = 1;
  for_each_candidate(g, test, side, filtered, [&](const Triplet& c) {
    if (score(c) <= test_score)
      ++rank;
  });
  return rank;
}

std::size_t rerank_window(const KnowledgeGraph& g, const ScoreFn& base,
                          const ScoreFn& refined, const Triplet& test,
                          Side side, std::size_t window, bool filtered)
{
  if (window == 0)
    throw ConfigError("rerank window must be >= 1");

  std::vector<std::pair<double, Triplet>> cands;
  for_each_candidate(g, test, side, filtered, [&](const Triplet& c) {
    cands.emplace_back(base(c), c);
  });
  const std::size_t top = std::min(window, cands.size());
  // Ties in the base score are broken by candidate order (entity id).
  std::stable_sort(cands.begin(), cands.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> scores;
  scores.reserve(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i)
    scores.push_back(i < top ? refined(cands[i].second) : cands[i].first);
  return pessimistic_rank(refined(test), scores);
}

Metrics compute_metrics(std::span<const std::size_t> ranks)
{
  Metrics m;
  m.n_queries = ranks.size();
  if (ranks.empty())
    return m;
  double sum = 0, rr = 0;
  std::size_t h1 = 0, h10 = 0;
  for (const auto r : ranks) {
    sum += static_cast<double>(r);
    rr += 1.0 / static_cast<double>(r);
    h1 += r <= 1 ? 1 : 0;
    h10 += r <= 10 ? 1 : 0;
  }
  const auto n = static_cast<double>(ranks.size());
  m.mr = sum / n;
  m.mrr = rr / n;
  m.hits1 = static_cast<double>(h1) / n;
  m.hits10 = static_cast<double>(h10) / n;
  return m;
}

Evaluation evaluate_with(std::span<const Triplet> tests, const EvalOptions& opts,
                         const RankFn& rank_fn)
{
  std::vector<QueryRank> queries;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (opts.sides != Sides::Tail)
      queries.push_back({i, Side::Head, 0});
    if (opts.sides != Sides::Head)
      queries.push_back({i, Side::Tail, 0});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t q = next++; q < queries.size(); q = next++)
      queries[q].rank = rank_fn(tests[queries[q].test_index], queries[q].side);
  };
  const std::size_t n_threads = std::max<std::size_t>(1, opts.threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t)
      pool.emplace_back(worker);
  }

  Evaluation e;
  std::vector<std::size_t> all, head, tail;
  for (const auto& q : queries) {
    all.push_back(q.rank);
    (q.side == Side::Head ? head : tail).push_back(q.rank);
  }
  e.pooled = compute_metrics(all);
  e.head = compute_metrics(head);
  e.tail = compute_metrics(tail);
  e.ranks = std::move(queries);
  return e;
}

Evaluation evaluate(const KnowledgeGraph& g, const ScoreFn& score,
                    std::span<const Triplet> tests, const EvalOptions& opts)
{
  return evaluate_with(tests, opts, [&](const Triplet& x, Side side) {
    return rank_candidates(g, score, x, side, opts.filtered);
  });
}

std::vector<RankRecord> join_ranks(std::span<const QueryRank> baseline,
                                   std::span<const QueryRank> emrbr)
{
  using Key = std::pair<std::size_t, int>;
  std::map<Key, std::size_t> base, ours;
  for (const auto& q : baseline)
    base[{q.test_index, static_cast<int>(q.side)}] = q.rank;
  for (const auto& q : emrbr)
    ours[{q.test_index, static_cast<int>(q.side)}] = q.rank;

  std::string missing;
  auto note = [&missing](const Key& k, const char* where) {
    if (!missing.empty())
      missing += ", ";
    missing += std::to_string(k.first) + "/"
               + to_string(static_cast<Side>(k.second)) + " (" + where + ")";
  };
  for (const auto& [k, r] : base)
    if (!ours.contains(k))
      note(k, "missing from reasoning ranks");
  for (const auto& [k, r] : ours)
    if (!base.contains(k))
      note(k, "missing from baseline ranks");
  if (!missing.empty())
    throw DataError("rank streams differ: " + missing);

  std::vector<RankRecord> out;
  out.reserve(base.size());
  for (const auto& [k, r] : base)
    out.push_back({k.first, static_cast<Side>(k.second), r, ours.at(k)});
  return out;
}

std::vector<DeltaRow> compare_ranks(std::span<const RankRecord> records)
{
  std::vector<DeltaRow> rows;
  rows.reserve(records.size());
  for (const auto& r : records)
    rows.push_back({r.test_index, r.side, r.rank_emrbr, r.rank_baseline,
                    static_cast<long long>(r.rank_baseline)
                        - static_cast<long long>(r.rank_emrbr)});
  std::sort(rows.begin(), rows.end(), [](const DeltaRow& a, const DeltaRow& b) {
    if (a.delta != b.delta)
      return a.delta > b.delta;
    if (a.test_index != b.test_index)
      return a.test_index < b.test_index;
    return a.side < b.side;
  });
  return rows;
}

std::vector<DeltaRow> compare_ranks(std::span<const QueryRank> baseline,
                                    std::span<const QueryRank> emrbr)
{
  const auto records = join_ranks(baseline, emrbr);
  return compare_ranks(records);
}

void write_rank_csv(std::ostream& out, std::span<const RankRecord> records)
{
  out << "test_index,side,rank_baseline,rank_emrbr\n";
  for (const auto& r : records)
    out << r.test_index << ',' << to_string(r.side) << ',' << r.rank_baseline
        << ',' << r.rank_emrbr << '\n';
}

std::vector<RankRecord> read_rank_csv(std::istream& in)
{
  std::vector<RankRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || (lineno == 1 && line.starts_with("test_index")))
      continue;
    std::istringstream ls(line);
    std::string idx, side, rb, re;
    if (!std::getline(ls, idx, ',') || !std::getline(ls, side, ',')
        || !std::getline(ls, rb, ',') || !std::getline(ls, re, ','))
      throw ParseError("expected test_index,side,rank_baseline,rank_emrbr",
                       lineno);
    try {
      out.push_back({std::stoull(idx), parse_side(side), std::stoull(rb),
                     std::stoull(re)});
    } catch (const std::logic_error&) {
      throw ParseError("bad rank record", lineno);
    } catch (const DataError&) {
      throw ParseError("bad side '" + side + "'", lineno);
    }
  }
  return out;
}

void write_delta_csv(std::ostream& out, std::span<const DeltaRow> rows)
{
  out << "test_index,rank_emrbr,rank_baseline,side,delta\n";
  for (const auto& r : rows)
    out << r.test_index << ',' << r.rank_emrbr << ',' << r.rank_baseline << ','
        << to_string(r.side) << ',' << r.delta << '\n';
}

std::vector<std::size_t> build_rule_rich_subset(std::span<const Triplet> tests,
                                                const RuleIndex& index,
                                                std::size_t min_rules,
                                                std::size_t limit)
{
  std::vector<std::pair<std::size_t, std::size_t>> scored; // (count, index)
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const auto n = index.rules_for(tests[i].r).size();
    if (n >= min_rules)
      scored.emplace_back(n, i);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first)
      return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scored.size() && i < limit; ++i)
    out.push_back(scored[i].second);
  return out;
}

std::string metrics_json(const Evaluation& e)
{
  auto j = to_json(e.pooled);
  nlohmann::ordered_json pct;
  pct["mrr"] = 100.0 * e.pooled.mrr;
  pct["hits1"] = 100.0 * e.pooled.hits1;
  pct["hits10"] = 100.0 * e.pooled.hits10;
  j["percent"] = pct;
  j["per_side"]["head"] = to_json(e.head);
  j["per_side"]["tail"] = to_json(e.tail);
  return j.dump(2);
}

std::string metrics_table(
    std::span<const std::pair<std::string, const Evaluation*>> rows)
{
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %-6s %10s %8s %8s %8s %8s\n", "model",
                "side", "MR", "MRR%", "H@1%", "H@10%", "n");
  out += buf;
  for (const auto& [name, e] : rows) {
    const std::pair<const char*, const Metrics*> parts[] = {
        {"both", &e->pooled}, {"head", &e->head}, {"tail", &e->tail}};
    for (const auto& [side, m] : parts) {
      std::snprintf(buf, sizeof buf,
                    "%-10s %-6s %10.2f %8.2f %8.2f %8.2f %8zu\n", name.c_str(),
                    side, m->mr, 100 * m->mrr, 100 * m->hits1,
                    100 * m->hits10, m->n_queries);
      out += buf;
    }
  }
  return out;
}

} // namespace kgrbr
