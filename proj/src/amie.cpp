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

#include <fstream>
#include <istream>
#include <sstream>

#include "kgrbr/error.hpp"
#include "kgrbr/format.hpp"
#include "kgrbr/rules.hpp"

// AMIE prints one rule per line:
//   ?a  r1  ?b  ?b  r2  ?c   => ?a  h  ?c <TAB> head coverage <TAB> std conf
//   <TAB> pca conf <TAB> positive examples <TAB> body size <TAB> ...

namespace kgrbr {

namespace {

constexpr std::size_t kStdConfidenceColumn = 2;
constexpr std::size_t kPositiveExamplesColumn = 4;

std::vector<std::string> tokens(const std::string& s)
{
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;)
    out.push_back(tok);
  return out;
}

enum class Outcome { Ok, UnknownRelation, TooLong, Unsupported };

Outcome convert(const std::vector<std::string>& body,
                const std::vector<std::string>& head,
                const Dictionary& relations, Rule& rule, std::size_t lineno)
{
  if (head.size() != 3 || body.empty() || body.size() % 3 != 0)
    throw ParseError("malformed AMIE rule", lineno);
  if (body.size() / 3 > 2)
    return Outcome::TooLong;

  auto is_var = [](const std::string& s) { return s.size() > 1 && s[0] == '?'; };
  if (!is_var(head[0]) || !is_var(head[2]) || head[0] == head[2])
    return Outcome::Unsupported;

  std::string z_name;
  auto var_of = [&](const std::string& s) -> std::optional<Var> {
    if (!is_var(s))
      return std::nullopt;
    if (s == head[0]) return Var::X;
    if (s == head[2]) return Var::Y;
    if (z_name.empty())
      z_name = s;
    if (s == z_name) return Var::Z;
    return std::nullopt;
  };

  bool unknown = false;
  auto resolve = [&](const std::string& name) {
    const auto id = relations.find(name);
    if (!id)
      unknown = true;
    return RelationId{id.value_or(0)};
  };

  rule = Rule{};
  rule.head = resolve(head[1]);
  for (std::size_t i = 0; i < body.size(); i += 3) {
    const auto a1 = var_of(body[i]);
    const auto a2 = var_of(body[i + 2]);
    if (!a1 || !a2)
      return Outcome::Unsupported;
    rule.body.push_back({resolve(body[i + 1]), *a1, *a2});
  }
  if (!is_well_formed(rule))
    return Outcome::Unsupported;
  if (unknown)
    return Outcome::UnknownRelation;
  rule = canonicalize(std::move(rule));
  return Outcome::Ok;
}

} // namespace

AmieImport parse_amie(std::istream& in, const Dictionary& relations)
{
  AmieImport out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto arrow = line.find("=>");
    if (arrow == std::string::npos)
      continue;

    std::vector<std::string> cols;
    {
      std::istringstream cs(line);
      for (std::string c; std::getline(cs, c, '\t');)
        cols.push_back(c);
    }
    const auto rule_text = cols.at(0);
    const auto pos = rule_text.find("=>");
    if (pos == std::string::npos)
      throw ParseError("'=>' must be in the first column", lineno);
    const auto body = tokens(rule_text.substr(0, pos));
    const auto head = tokens(rule_text.substr(pos + 2));

    Rule rule;
    switch (convert(body, head, relations, rule, lineno)) {
    case Outcome::TooLong: ++out.skipped_too_long; continue;
    case Outcome::Unsupported: ++out.skipped_unsupported; continue;
    case Outcome::UnknownRelation: ++out.skipped_unknown_relation; continue;
    case Outcome::Ok: break;
    }
    if (cols.size() > kStdConfidenceColumn)
      if (const auto v = parse_double(cols[kStdConfidenceColumn]))
        rule.confidence = *v;
    if (cols.size() > kPositiveExamplesColumn)
      if (const auto v = parse_double(cols[kPositiveExamplesColumn]); v && *v >= 0)
        rule.support = static_cast<std::size_t>(*v);
    out.rules.push_back(std::move(rule));
  }
  return out;
}

AmieImport parse_amie(const std::filesystem::path& path,
                      const Dictionary& relations)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  return parse_amie(in, relations);
}

std::string format_amie(const Rule& rule, const Dictionary& relations)
{
  auto var = [](Var v) -> const char* {
    switch (v) {
    case Var::X: return "?a";
    case Var::Y: return "?b";
    case Var::Z: return "?z";
    }
    return "?";
  };
  std::string s;
  for (const auto& a : rule.body) {
    s += var(a.arg1);
    s += "  ";
    s += relations.name(a.relation.value);
    s += "  ";
    s += var(a.arg2);
    s += "  ";
  }
  s += " => ?a  ";
  s += relations.name(rule.head.value);
  s += "  ?b";
  return s;
}

} // namespace kgrbr
