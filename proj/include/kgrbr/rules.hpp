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

#ifndef KGRBR_RULES_HPP_
#define KGRBR_RULES_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgrbr/embedding.hpp"
#include "kgrbr/graph.hpp"
#include "kgrbr/types.hpp"

namespace kgrbr {

enum class Var : std::uint8_t { X, Y, Z };

char to_char(Var v);

/// relation(arg1, arg2)
struct Atom {
  RelationId relation;
  Var arg1 = Var::X;
  Var arg2 = Var::Y;
  auto operator<=>(const Atom&) const = default;
};

/// Horn rule body => head(X, Y) with one or two body atoms.
///
/// A two-atom body is closed and connected: each atom holds Z and exactly one
/// of X and Y. In canonical form the X atom comes first. A one-atom body ranges
/// over {X, Y} in either order. omega is unset until the rule is measured
/// against an embedding model.
struct Rule {
  std::vector<Atom> body;
  RelationId head;
  std::optional<double> omega;
  std::size_t support = 0;
  double confidence = 0;

  bool is_chain() const { return body.size() == 2; }

  /// Same body and head; scores ignored.
  bool same_shape(const Rule& other) const
  {
    return head == other.head && body == other.body;
  }
  bool operator==(const Rule&) const = default;
};

using RuleId = std::uint32_t;

/// Lower bound applied to every measured omega; keeps H strictly increasing
/// along a search path.
inline constexpr double kOmegaFloor = 1.0 + 1e-12;

/// True if the body satisfies the closed/connected shape constraints.
bool is_well_formed(const Rule& rule);

/// Orders two-atom bodies X-atom first. Throws ConfigError if malformed.
Rule canonicalize(Rule rule);

/// exp(||path - head|| / k), floored at kOmegaFloor, where path is the signed
/// sum of body relation vectors walked from X to Y: an atom traversed along
/// its direction adds its vector, against its direction subtracts it.
/// Throws DimensionError when a relation id is outside the model.
double measure_rule(const EmbeddingModel& model, const Rule& rule);

/// "B1(X,Z) & B2(Z,Y) => H(X,Y)" without the numeric columns.
std::string format_rule_text(const Rule& rule, const Dictionary& relations);

/// Canonical rule-file line: rule text, support, confidence and (if measured)
/// omega, tab separated.
std::string format_rule(const Rule& rule, const Dictionary& relations);

/// Parses a canonical rule-file line. Throws ParseError; returns nullopt when
/// a relation name is not in the dictionary.
std::optional<Rule> parse_rule_line(std::string_view line,
                                    const Dictionary& relations,
                                    std::size_t lineno = 1);

struct RuleFile {
  std::vector<Rule> rules;
  std::size_t skipped_unknown_relation = 0;
};

RuleFile read_rules(std::istream& in, const Dictionary& relations);
RuleFile read_rules(const std::filesystem::path& path,
                    const Dictionary& relations);
void write_rules(std::ostream& out, std::span<const Rule> rules,
                 const Dictionary& relations);

struct AmieImport {
  std::vector<Rule> rules;
  std::size_t skipped_unknown_relation = 0;
  std::size_t skipped_too_long = 0;
  std::size_t skipped_unsupported = 0; ///< constants, open or disconnected rules
};

/// Imports AMIE output. Lines without "=>" (banner, header) are ignored.
/// Support is read from the "Positive Examples" column and confidence from
/// "Std Confidence" when present.
AmieImport parse_amie(std::istream& in, const Dictionary& relations);
AmieImport parse_amie(const std::filesystem::path& path,
                      const Dictionary& relations);

/// AMIE-style rule text ("?a  r1  ?b  ?b  r2  ?c   => ?a  h  ?c").
std::string format_amie(const Rule& rule, const Dictionary& relations);

struct MinerConfig {
  std::size_t max_body_atoms = 2;
  std::size_t min_support = 2;
  double min_confidence = 0.5;
  bool pca_confidence = false;
};

/// Enumerates every closed connected rule over the train split with at most
/// max_body_atoms atoms. Support and body counts are over distinct (X, Y)
/// bindings. Output sorted by head relation, then body.
std::vector<Rule> mine_rules(const KnowledgeGraph& g, const MinerConfig& cfg);

/// Measured rules grouped by head relation, each group sorted by ascending
/// omega. A rule's id is its position in all().
class RuleIndex {
public:
  RuleIndex() = default;

  /// Measures every rule with model, drops duplicates keeping the highest
  /// confidence, groups and sorts.
  static RuleIndex build(std::vector<Rule> rules, const EmbeddingModel& model);

  /// Uses omega values already present. Throws ConfigError if any rule is
  /// unmeasured, malformed or has omega < 1.
  static RuleIndex from_measured(std::vector<Rule> rules);

  std::span<const Rule> rules_for(RelationId head) const;
  const Rule& rule(RuleId id) const { return rules_.at(id); }
  RuleId id_of(const Rule& r) const
  {
    return static_cast<RuleId>(&r - rules_.data());
  }
  const std::vector<Rule>& all() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

private:
  std::vector<Rule> rules_;
  std::unordered_map<std::uint32_t, std::pair<std::size_t, std::size_t>> ranges_;
};

} // namespace kgrbr

#endif // KGRBR_RULES_HPP_
