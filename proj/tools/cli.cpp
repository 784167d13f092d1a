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

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgrbr/embedding.hpp"
#include "kgrbr/error.hpp"
#include "kgrbr/eval.hpp"
#include "kgrbr/format.hpp"
#include "kgrbr/graph.hpp"
#include "kgrbr/oracle.hpp"
#include "kgrbr/reasoner.hpp"
#include "kgrbr/rules.hpp"
#include "kgrbr/scorer.hpp"

namespace kgrbr::cli {

namespace fs = std::filesystem;

namespace {

/// Raised when a run finished but a guard (truncation under --strict, oracle
/// disagreement) fired.
class GuardTripped : public Error {
public:
  using Error::Error;
};

struct DataOptions {
  std::string dir;
  std::string columns = "hrt";
};

struct TrainOptions {
  DataOptions data;
  std::string out;
  std::string model = "transe";
  TrainConfig cfg;
  std::string neg = "uniform";
  bool quiet = false;
};

struct RulesOptions {
  DataOptions data;
  bool mine = false;
  std::string import_path;
  MinerConfig miner;
  std::string model_file;
  std::string out;
};

struct EvaluateOptions {
  DataOptions data;
  std::string model_file;
  std::string rules;
  SearchConfig search;
  std::size_t rerank_top = 0;
  std::string subset;
  bool oracle = false;
  std::size_t threads = 1;
  std::string sides = "both";
  bool raw = false;
  bool strict = false;
  std::string trace;
  std::size_t limit = 0;
  std::string out;
};

struct SubsetOptions {
  DataOptions data;
  std::string rules;
  std::size_t min_rules = 1;
  std::size_t limit = 1000;
  std::string out;
};

struct CompareOptions {
  std::string ranks;
  std::string out;
};

void add_data_options(CLI::App* sub, DataOptions& d)
{
  sub->add_option("--data", d.dir,
                  "Dataset directory holding train.txt, valid.txt, test.txt")
      ->required();
  sub->add_option("--columns", d.columns,
                  "Column order of the TSV files, a permutation of h, r, t");
}

/// Every long option of sub also reads KGRBR_<NAME> from the environment.
void mirror_env(CLI::App* sub)
{
  for (CLI::Option* opt : sub->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help")
      continue;
    std::string env = "KGRBR_";
    for (const char c : names.front())
      env += c == '-' ? '_' : static_cast<char>(std::toupper(c));
    opt->envname(env);
  }
}

std::ofstream open_out(const fs::path& path)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path.string());
  return in;
}

/// Loads train.txt plus valid.txt and test.txt when present. Entity and
/// relation ids depend only on the files, so every command sees the same ids.
KnowledgeGraph load_dataset(const DataOptions& d)
{
  const auto order = parse_column_order(d.columns);
  const fs::path dir(d.dir);
  if (!fs::is_directory(dir))
    throw IoError("dataset directory not found: " + d.dir);
  auto optional_split = [&](const char* name) {
    const fs::path p = dir / name;
    return fs::exists(p) ? load_tsv(p, order) : std::vector<StringTriple>{};
  };
  const auto train = load_tsv(dir / "train.txt", order);
  return KnowledgeGraph::build(train, optional_split("valid.txt"),
                               optional_split("test.txt"));
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err)
{
  TrainConfig cfg = o.cfg;
  cfg.kind = parse_model_kind(o.model);
  cfg.neg_sampling = parse_negative_sampling(o.neg);
  cfg.validate();
  const auto g = load_dataset(o.data);

  const std::size_t step = std::max<std::size_t>(1, cfg.epochs / 10);
  auto result = train(g, cfg, [&](std::size_t epoch, double loss) {
    if (!o.quiet && ((epoch + 1) % step == 0 || epoch + 1 == cfg.epochs))
      err << "epoch " << epoch + 1 << "/" << cfg.epochs << " loss "
          << format_double(loss) << "\n";
  });

  const fs::path dir(o.out);
  fs::create_directories(dir);
  save_model(result.model, dir / "model.bin");
  auto log = open_out(dir / "train_loss.csv");
  log << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    log << e + 1 << ',' << format_double(result.epoch_loss[e]) << '\n';

  out << "wrote " << (dir / "model.bin").string() << " (" << to_string(cfg.kind)
      << ", k=" << cfg.dim << ", " << g.num_entities() << " entities, "
      << g.num_relations() << " relations)\n";
  return kOk;
}

int cmd_rules(const RulesOptions& o, std::ostream& out, std::ostream& err)
{
  const auto g = load_dataset(o.data);
  const auto model = load_model(fs::path(o.model_file), g);

  std::vector<Rule> rules;
  if (o.mine) {
    rules = mine_rules(g, o.miner);
    err << "mined " << rules.size() << " rules\n";
  } else {
    auto imported = parse_amie(fs::path(o.import_path), g.relations());
    err << "imported " << imported.rules.size() << " rules; skipped "
        << imported.skipped_unknown_relation << " with unknown relations, "
        << imported.skipped_too_long << " longer than two body atoms, "
        << imported.skipped_unsupported << " of unsupported shape\n";
    rules = std::move(imported.rules);
  }

  const auto index = RuleIndex::build(std::move(rules), model);
  auto file = open_out(o.out);
  write_rules(file, index.all(), g.relations());
  out << "wrote " << index.size() << " rules to " << o.out << "\n";
  return kOk;
}

std::vector<Triplet> select_tests(const KnowledgeGraph& g,
                                  const EvaluateOptions& o)
{
  std::vector<Triplet> tests;
  if (o.subset.empty()) {
    tests = g.test();
  } else {
    const auto rows = load_tsv(fs::path(o.subset), parse_column_order(o.data.columns));
    for (const auto& row : rows) {
      const auto x = g.encode(row);
      if (!x)
        throw DataError("subset triplet not in dataset vocabulary: " + row.head
                        + " " + row.relation + " " + row.tail);
      tests.push_back(*x);
    }
  }
  if (tests.empty())
    throw DataError("no test triplets to evaluate");
  if (o.limit > 0 && tests.size() > o.limit)
    tests.resize(o.limit);
  return tests;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err)
{
  const Sides sides = parse_sides(o.sides);
  if (o.threads == 0)
    throw ConfigError("--threads must be >= 1");
  const auto g = load_dataset(o.data);
  const auto model = load_model(fs::path(o.model_file), g);
  auto rule_file = read_rules(fs::path(o.rules), g.relations());
  if (rule_file.skipped_unknown_relation > 0)
    err << "skipped " << rule_file.skipped_unknown_relation
        << " rules with unknown relations\n";
  std::vector<Rule> rules;
  for (auto& r : rule_file.rules) {
    if (!r.omega)
      r.omega = measure_rule(model, r);
    rules.push_back(std::move(r));
  }
  const auto index = RuleIndex::from_measured(std::move(rules));
  const auto tests = select_tests(g, o);
  const EmbeddingScorer scorer(model, g);

  if (!o.trace.empty()) {
    auto trace = open_out(o.trace);
    JsonTraceWriter writer(trace, g);
    for (std::size_t i = 0; i < tests.size(); ++i) {
      const auto s = g.decode(tests[i]);
      nlohmann::ordered_json q;
      q["event"] = "query";
      q["test_index"] = i;
      q["triplet"] = s.head + " " + s.relation + " " + s.tail;
      trace << q.dump() << '\n';
      phi(g, scorer, index, tests[i], o.search, &writer);
    }
  }

  std::atomic<bool> truncated{false};
  std::atomic<std::size_t> oracle_checks{0};
  std::mutex oracle_mu;
  std::vector<std::string> oracle_failures;

  const ScoreFn base = [&](const Triplet& x) { return scorer.score(x); };
  const ScoreFn refined = [&](const Triplet& x) {
    const auto r = phi(g, scorer, index, x, o.search);
    if (r.truncated)
      truncated = true;
    return r.phi;
  };
  auto verify = [&](const Triplet& x) {
    const double fast = refined(x);
    const double slow = oracle::exhaustive_phi(g, scorer, index, x,
                                               o.search.max_depth);
    ++oracle_checks;
    if (std::abs(fast - slow) > 1e-9) {
      const auto s = g.decode(x);
      std::lock_guard lock(oracle_mu);
      oracle_failures.push_back(s.head + " " + s.relation + " " + s.tail
                                + ": phi " + format_double(fast) + " vs oracle "
                                + format_double(slow));
    }
  };

  EvalOptions eo;
  eo.sides = sides;
  eo.filtered = !o.raw;
  eo.threads = o.threads;

  const auto baseline = evaluate(g, base, tests, eo);
  const auto emrbr = evaluate_with(tests, eo, [&](const Triplet& x, Side side) {
    if (o.oracle)
      verify(x);
    return o.rerank_top > 0
               ? rerank_window(g, base, refined, x, side, o.rerank_top, eo.filtered)
               : rank_candidates(g, refined, x, side, eo.filtered);
  });

  const auto records = join_ranks(baseline.ranks, emrbr.ranks);
  const auto deltas = compare_ranks(records);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  {
    nlohmann::ordered_json j;
    j["baseline"] = nlohmann::ordered_json::parse(metrics_json(baseline));
    j["emrbr"] = nlohmann::ordered_json::parse(metrics_json(emrbr));
    j["filtered"] = eo.filtered;
    j["sides"] = o.sides;
    j["rerank_top"] = o.rerank_top;
    j["max_depth"] = o.search.max_depth;
    j["rules"] = index.size();
    j["truncated"] = truncated.load();
    auto f = open_out(dir / "metrics.json");
    f << j.dump(2) << '\n';
  }
  {
    auto f = open_out(dir / "ranks.csv");
    write_rank_csv(f, records);
  }
  {
    auto f = open_out(dir / "delta.csv");
    write_delta_csv(f, deltas);
  }

  const std::pair<std::string, const Evaluation*> rows[] = {
      {"baseline", &baseline}, {"emrbr", &emrbr}};
  out << metrics_table(rows);

  if (o.oracle) {
    std::sort(oracle_failures.begin(), oracle_failures.end());
    out << "oracle: " << oracle_checks.load() - oracle_failures.size() << "/"
        << oracle_checks.load() << " queries agree\n";
    for (const auto& f : oracle_failures)
      err << "oracle mismatch: " << f << "\n";
    if (!oracle_failures.empty())
      throw GuardTripped("phi disagrees with the exhaustive oracle");
  }
  if (truncated) {
    err << "warning: search hit --max-pops on at least one query\n";
    if (o.strict)
      throw GuardTripped("search truncated under --strict");
  }
  return kOk;
}

int cmd_subset(const SubsetOptions& o, std::ostream& out)
{
  const auto g = load_dataset(o.data);
  auto rule_file = read_rules(fs::path(o.rules), g.relations());
  // Only rule counts per head matter here; unmeasured rules get the floor.
  for (auto& r : rule_file.rules)
    if (!r.omega)
      r.omega = kOmegaFloor;
  const auto index = RuleIndex::from_measured(std::move(rule_file.rules));
  const auto picked = build_rule_rich_subset(g.test(), index, o.min_rules, o.limit);
  std::vector<Triplet> rows;
  rows.reserve(picked.size());
  for (const auto i : picked)
    rows.push_back(g.test()[i]);
  auto f = open_out(o.out);
  write_tsv(f, g, rows);
  out << "wrote " << rows.size() << " of " << g.test().size()
      << " test triplets to " << o.out << "\n";
  return kOk;
}

int cmd_compare(const CompareOptions& o, std::ostream& out)
{
  auto in = open_in(o.ranks);
  const auto records = read_rank_csv(in);
  const auto rows = compare_ranks(records);
  if (o.out.empty()) {
    write_delta_csv(out, rows);
  } else {
    auto f = open_out(o.out);
    write_delta_csv(f, rows);
  }
  return kOk;
}

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// key=value lines become "--key=value" arguments. Blank lines and lines
/// starting with '#' are ignored.
std::vector<std::string> read_config(const fs::path& path)
{
  auto in = open_in(path);
  std::vector<std::string> args;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#')
      continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno)
                        + ": expected key=value");
    auto key = trim(std::string_view(t).substr(0, eq));
    const auto value = trim(std::string_view(t).substr(eq + 1));
    if (key.starts_with("--"))
      key.erase(0, 2);
    if (key.empty())
      throw ConfigError(path.string() + ":" + std::to_string(lineno)
                        + ": empty key");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

/// Removes --config from args and splices the file's arguments in right
/// after the subcommand name, so flags given on the command line win.
std::vector<std::string> expand_config(std::vector<std::string> args)
{
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw ConfigError("--config needs a file argument");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty())
    if (const char* env = std::getenv("KGRBR_CONFIG"))
      path = env;
  if (path.empty() || args.empty())
    return args;
  const auto extra = read_config(path);
  args.insert(args.begin() + 1, extra.begin(), extra.end());
  return args;
}

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out,
        std::ostream& err)
{
  CLI::App app{"Knowledge-graph completion with embeddings and rule-based "
               "reasoning",
               "kgrbr"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", "kgrbr 1.0.0");
  // Handled before parsing; registered so it shows up in --help.
  std::string config_path;
  app.add_option("--config", config_path,
                 "key=value file of option defaults (also KGRBR_CONFIG)");

  TrainOptions train_o;
  auto* train_cmd = app.add_subcommand("train", "Train a TransE or TransH model");
  add_data_options(train_cmd, train_o.data);
  train_cmd->add_option("--out", train_o.out,
                        "Output directory for model.bin and train_loss.csv")
      ->required();
  train_cmd->add_option("--model", train_o.model, "transe or transh");
  train_cmd->add_option("--dim", train_o.cfg.dim, "Embedding dimension");
  train_cmd->add_option("--lr", train_o.cfg.learning_rate, "SGD learning rate");
  train_cmd->add_option("--margin", train_o.cfg.margin, "Hinge margin");
  train_cmd->add_option("--epochs", train_o.cfg.epochs, "Training epochs");
  train_cmd->add_option("--batch-size", train_o.cfg.batch_size, "Minibatch size");
  train_cmd->add_option("--norm", train_o.cfg.norm_order, "Norm order, 1 or 2");
  train_cmd->add_option("--neg", train_o.neg,
                        "Negative sampling: uniform or bernoulli");
  train_cmd->add_option("--seed", train_o.cfg.seed, "Master random seed");
  train_cmd->add_flag("--quiet", train_o.quiet, "No per-epoch progress");

  RulesOptions rules_o;
  auto* rules_cmd = app.add_subcommand(
      "rules", "Mine or import rules and measure them with a model");
  add_data_options(rules_cmd, rules_o.data);
  auto* mine = rules_cmd->add_flag("--mine", rules_o.mine,
                                   "Mine rules from the train split");
  auto* import = rules_cmd->add_option("--import", rules_o.import_path,
                                       "AMIE output file to import");
  mine->excludes(import);
  rules_cmd->add_option("--min-support", rules_o.miner.min_support,
                        "Miner: minimum support");
  rules_cmd->add_option("--min-confidence", rules_o.miner.min_confidence,
                        "Miner: minimum confidence");
  rules_cmd->add_option("--max-body-atoms", rules_o.miner.max_body_atoms,
                        "Miner: 1 or 2 body atoms");
  rules_cmd->add_flag("--pca", rules_o.miner.pca_confidence,
                      "Miner: use PCA confidence");
  rules_cmd->add_option("--model-file", rules_o.model_file,
                        "Model used to measure rules")
      ->required();
  rules_cmd->add_option("--out", rules_o.out, "Output rule file")->required();

  EvaluateOptions eval_o;
  auto* eval_cmd = app.add_subcommand(
      "evaluate", "Rank test triplets with the embedding and with reasoning");
  add_data_options(eval_cmd, eval_o.data);
  eval_cmd->add_option("--model-file", eval_o.model_file, "Trained model")
      ->required();
  eval_cmd->add_option("--rules", eval_o.rules, "Rule file")->required();
  eval_cmd->add_option("--max-depth", eval_o.search.max_depth,
                       "Maximum rule applications per path");
  eval_cmd->add_option("--max-pops", eval_o.search.max_pops,
                       "Queue pops per search before truncation");
  eval_cmd->add_option("--epsilon-tie", eval_o.search.epsilon_tie,
                       "H difference treated as a tie");
  eval_cmd->add_option("--rerank-top", eval_o.rerank_top,
                       "Only rescore the N best baseline candidates (0 = all)");
  eval_cmd->add_option("--subset", eval_o.subset,
                       "TSV of test triplets to evaluate instead of test.txt");
  eval_cmd->add_flag("--oracle", eval_o.oracle,
                     "Check every query against exhaustive search");
  eval_cmd->add_option("--threads", eval_o.threads, "Worker threads");
  eval_cmd->add_option("--sides", eval_o.sides, "both, head or tail");
  eval_cmd->add_flag("--raw", eval_o.raw, "Raw instead of filtered ranking");
  eval_cmd->add_flag("--strict", eval_o.strict, "Exit 3 if any search truncates");
  eval_cmd->add_option("--trace", eval_o.trace,
                       "Write a JSON-lines search trace of each test triplet");
  eval_cmd->add_option("--limit", eval_o.limit,
                       "Evaluate at most N test triplets (0 = all)");
  eval_cmd->add_option("--out", eval_o.out,
                       "Output directory for metrics.json, ranks.csv, delta.csv")
      ->required();

  SubsetOptions subset_o;
  auto* subset_cmd = app.add_subcommand(
      "subset", "Select test triplets whose relation has many rules");
  add_data_options(subset_cmd, subset_o.data);
  subset_cmd->add_option("--rules", subset_o.rules, "Rule file")->required();
  subset_cmd->add_option("--min-rules", subset_o.min_rules,
                         "Minimum rules with the triplet's relation as head");
  subset_cmd->add_option("--limit", subset_o.limit, "Maximum subset size");
  subset_cmd->add_option("--out", subset_o.out, "Output TSV")->required();

  CompareOptions compare_o;
  auto* compare_cmd = app.add_subcommand(
      "compare", "Rank-delta table from a ranks.csv file");
  compare_cmd->add_option("--ranks", compare_o.ranks, "ranks.csv")->required();
  compare_cmd->add_option("--out", compare_o.out,
                          "Output CSV (default: standard output)");

  DataOptions stats_o;
  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics as JSON");
  add_data_options(stats_cmd, stats_o);

  for (auto* sub : {train_cmd, rules_cmd, eval_cmd, subset_cmd, compare_cmd,
                    stats_cmd})
    mirror_env(sub);

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kOk : kUsageError;
    }
    if (rules_cmd->parsed() && !rules_o.mine && rules_o.import_path.empty())
      throw ConfigError("rules needs --mine or --import");

    if (train_cmd->parsed())
      return cmd_train(train_o, out, err);
    if (rules_cmd->parsed())
      return cmd_rules(rules_o, out, err);
    if (eval_cmd->parsed())
      return cmd_evaluate(eval_o, out, err);
    if (subset_cmd->parsed())
      return cmd_subset(subset_o, out);
    if (compare_cmd->parsed())
      return cmd_compare(compare_o, out);
    out << load_dataset(stats_o).stats_json() << "\n";
    return kOk;
  } catch (const GuardTripped& e) {
    err << "error: " << e.what() << "\n";
    return kGuardTripped;
  } catch (const InstanceTooLarge& e) {
    err << "error: " << e.what() << "\n";
    return kGuardTripped;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

} // namespace kgrbr::cli
