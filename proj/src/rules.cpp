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

#include "kgrbr/rules.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "kgrbr/error.hpp"
#include "kgrbr/format.hpp"

namespace kgrbr {

namespace {

bool mentions(const Atom& a, Var v) { return a.arg1 == v || a.arg2 == v; }

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, std::string_view sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + sep.size();
  }
  return out;
}

std::optional<Var> parse_var(std::string_view s)
{
  if (s == "X") return Var::X;
  if (s == "Y") return Var::Y;
  if (s == "Z") return Var::Z;
  return std::nullopt;
}

struct ParsedAtom {
  std::string_view relation;
  Var arg1, arg2;
};

ParsedAtom parse_atom(std::string_view text, std::size_t lineno)
{
  text = trim(text);
  const auto open = text.rfind('(');
  if (open == std::string_view::npos || open == 0 || text.back() != ')')
    throw ParseError("malformed atom '" + std::string(text) + "'", lineno);
  const auto args = text.substr(open + 1, text.size() - open - 2);
  const auto comma = args.find(',');
  if (comma == std::string_view::npos)
    throw ParseError("malformed atom '" + std::string(text) + "'", lineno);
  const auto a1 = parse_var(trim(args.substr(0, comma)));
  const auto a2 = parse_var(trim(args.substr(comma + 1)));
  if (!a1 || !a2)
    throw ParseError("atom variables must be X, Y or Z in '"
                     + std::string(text) + "'", lineno);
  return {text.substr(0, open), *a1, *a2};
}

} // namespace

char to_char(Var v)
{
  switch (v) {
  case Var::X: return 'X';
  case Var::Y: return 'Y';
  case Var::Z: return 'Z';
  }
  return '?';
}

bool is_well_formed(const Rule& rule)
{
  for (const auto& a : rule.body)
    if (a.arg1 == a.arg2)
      return false;
  if (rule.body.size() == 1) {
    const auto& a = rule.body[0];
    return mentions(a, Var::X) && mentions(a, Var::Y);
  }
  if (rule.body.size() == 2) {
    const auto& a = rule.body[0];
    const auto& b = rule.body[1];
    if (!mentions(a, Var::Z) || !mentions(b, Var::Z))
      return false;
    const bool ax = mentions(a, Var::X), ay = mentions(a, Var::Y);
    const bool bx = mentions(b, Var::X), by = mentions(b, Var::Y);
    return (ax && by && !ay && !bx) || (ay && bx && !ax && !by);
  }
  return false;
}

Rule canonicalize(Rule rule)
{
  if (!is_well_formed(rule))
    throw ConfigError("rule body is not closed and connected");
  if (rule.body.size() == 2 && !mentions(rule.body[0], Var::X))
    std::swap(rule.body[0], rule.body[1]);
  return rule;
}

double measure_rule(const EmbeddingModel& model, const Rule& rule)
{
  const Rule canon = canonicalize(rule);
  auto check = [&model](RelationId r) {
    if (r.value >= model.num_relations())
      throw DimensionError("rule relation id " + std::to_string(r.value)
                           + " outside model");
  };
  check(canon.head);
  for (const auto& a : canon.body)
    check(a.relation);

  const std::size_t k = model.dim();
  std::vector<double> diff(k, 0.0);

  // Walk X -> (Z ->) Y; an atom whose first argument is the node we stand on
  // is traversed forwards.
  Var at = Var::X;
  for (const auto& a : canon.body) {
    const bool forward = a.arg1 == at;
    const double sign = forward ? 1.0 : -1.0;
    const auto v = model.relation_vector(a.relation);
    for (std::size_t i = 0; i < k; ++i)
      diff[i] += sign * v[i];
    at = forward ? a.arg2 : a.arg1;
  }
  const auto head = model.relation_vector(canon.head);
  for (std::size_t i = 0; i < k; ++i)
    diff[i] -= head[i];

  const double omega =
      std::exp(vector_norm(diff, model.norm_order()) / static_cast<double>(k));
  return std::max(omega, kOmegaFloor);
}

std::string format_rule_text(const Rule& rule, const Dictionary& relations)
{
  std::string s;
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    const auto& a = rule.body[i];
    if (i)
      s += " & ";
    s += relations.name(a.relation.value);
    s += '(';
    s += to_char(a.arg1);
    s += ',';
    s += to_char(a.arg2);
    s += ')';
  }
  s += " => ";
  s += relations.name(rule.head.value);
  s += "(X,Y)";
  return s;
}

std::string format_rule(const Rule& rule, const Dictionary& relations)
{
  std::string s = format_rule_text(rule, relations);
  s += '\t';
  s += std::to_string(rule.support);
  s += '\t';
  s += format_double(rule.confidence);
  if (rule.omega) {
    s += '\t';
    s += format_double(*rule.omega);
  }
  return s;
}

std::optional<Rule> parse_rule_line(std::string_view line,
                                    const Dictionary& relations,
                                    std::size_t lineno)
{
  const auto cols = split(line, "\t");
  const auto parts = split(cols[0], "=>");
  if (parts.size() != 2)
    throw ParseError("rule must contain exactly one '=>'", lineno);

  const auto head = parse_atom(parts[1], lineno);
  if (head.arg1 != Var::X || head.arg2 != Var::Y)
    throw ParseError("rule head must be over (X,Y)", lineno);

  Rule rule;
  bool unknown = false;
  auto resolve = [&](std::string_view name) {
    const auto id = relations.find(name);
    if (!id)
      unknown = true;
    return RelationId{id.value_or(0)};
  };
  rule.head = resolve(head.relation);
  for (const auto atom_text : split(parts[0], "&")) {
    const auto a = parse_atom(atom_text, lineno);
    rule.body.push_back({resolve(a.relation), a.arg1, a.arg2});
  }
  if (!is_well_formed(rule))
    throw ParseError("rule body is not closed and connected", lineno);

  if (cols.size() > 1 && !trim(cols[1]).empty()) {
    const auto v = parse_double(trim(cols[1]));
    if (!v || *v < 0)
      throw ParseError("bad support column", lineno);
    rule.support = static_cast<std::size_t>(*v);
  }
  if (cols.size() > 2 && !trim(cols[2]).empty()) {
    const auto v = parse_double(trim(cols[2]));
    if (!v)
      throw ParseError("bad confidence column", lineno);
    rule.confidence = *v;
  }
  if (cols.size() > 3 && !trim(cols[3]).empty()) {
    const auto v = parse_double(trim(cols[3]));
    if (!v)
      throw ParseError("bad omega column", lineno);
    rule.omega = *v;
  }
  if (unknown)
    return std::nullopt;
  return canonicalize(std::move(rule));
}

RuleFile read_rules(std::istream& in, const Dictionary& relations)
{
  RuleFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line).front() == '#')
      continue;
    auto rule = parse_rule_line(line, relations, lineno);
    if (rule)
      out.rules.push_back(std::move(*rule));
    else
      ++out.skipped_unknown_relation;
  }
  return out;
}

RuleFile read_rules(const std::filesystem::path& path,
                    const Dictionary& relations)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  return read_rules(in, relations);
}

void write_rules(std::ostream& out, std::span<const Rule> rules,
                 const Dictionary& relations)
{
  for (const auto& r : rules)
    out << format_rule(r, relations) << '\n';
}

RuleIndex RuleIndex::build(std::vector<Rule> rules, const EmbeddingModel& model)
{
  for (auto& r : rules) {
    r = canonicalize(std::move(r));
    r.omega = measure_rule(model, r);
  }
  return from_measured(std::move(rules));
}

RuleIndex RuleIndex::from_measured(std::vector<Rule> rules)
{
  // Dedupe by shape, keeping the most confident copy (then the most support).
  std::map<std::pair<std::uint32_t, std::vector<Atom>>, Rule> unique;
  for (auto& r : rules) {
    if (!r.omega || !(*r.omega >= 1.0))
      throw ConfigError("rule index requires measured rules with omega >= 1");
    r = canonicalize(std::move(r));
    auto key = std::make_pair(r.head.value, r.body);
    auto it = unique.find(key);
    if (it == unique.end()) {
      unique.emplace(std::move(key), std::move(r));
    } else if (r.confidence > it->second.confidence
               || (r.confidence == it->second.confidence
                   && r.support > it->second.support)) {
      it->second = std::move(r);
    }
  }

  RuleIndex idx;
  idx.rules_.reserve(unique.size());
  for (auto& [key, r] : unique)
    idx.rules_.push_back(std::move(r));
  std::stable_sort(idx.rules_.begin(), idx.rules_.end(),
                   [](const Rule& a, const Rule& b) {
                     if (a.head != b.head)
                       return a.head < b.head;
                     return *a.omega < *b.omega;
                   });
  for (std::size_t i = 0; i < idx.rules_.size();) {
    std::size_t j = i;
    while (j < idx.rules_.size() && idx.rules_[j].head == idx.rules_[i].head)
      ++j;
    idx.ranges_[idx.rules_[i].head.value] = {i, j};
    i = j;
  }
  return idx;
}

std::span<const Rule> RuleIndex::rules_for(RelationId head) const
{
  const auto it = ranges_.find(head.value);
  if (it == ranges_.end())
    return {};
  return std::span<const Rule>(rules_).subspan(
      it->second.first, it->second.second - it->second.first);
}

} // namespace kgrbr
