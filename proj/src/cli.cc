#include "mechnli/cli.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "mechnli/annotate.h"
#include "mechnli/bridge_client.h"
#include "mechnli/corpus.h"
#include "mechnli/dataset.h"
#include "mechnli/errors.h"
#include "mechnli/evalharness.h"
#include "mechnli/extract.h"
#include "mechnli/genfilter.h"
#include "mechnli/lm.h"
#include "mechnli/neurologic.h"
#include "mechnli/perturb.h"
#include "mechnli/random.h"
#include "mechnli/text.h"

namespace mechnli {

using nlohmann::json;

std::string ConfigHash(const json &config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(Fnv1a64(config.dump())));
  return buf;
}

json MakeManifest(const std::string &command, const json &config, std::uint64_t seed,
                  const json &counts) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return {{"tool", "mechnli"},         {"version", kToolVersion}, {"command", command},
          {"config", config},          {"config_hash", ConfigHash(config)},
          {"seed", seed},              {"counts", counts},        {"created_at", stamp}};
}

std::map<std::string, std::string> ParseFlatConfig(const std::string &text) {
  std::map<std::string, std::string> out;
  for (const auto &raw : SplitLines(text)) {
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidConfig("config line without `=`: " + line);
    std::string key = Trim(line.substr(0, eq));
    std::string value = Trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw InvalidConfig("config line without a key: " + line);
    out[key] = value;
  }
  return out;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is
// rethrown after all workers stop.
void ParallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto &t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<json> ReadJsonl(const std::string &path) {
  std::vector<json> out;
  std::size_t line_no = 0;
  for (const auto &line : SplitLines(ReadFile(path))) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error &e) {
      throw SchemaViolation(line_no, e.what());
    }
  }
  return out;
}

template <typename T, typename F>
std::vector<T> ParseEach(const std::vector<json> &records, F parse) {
  std::vector<T> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out.push_back(parse(records[i]));
    } catch (const SchemaViolation &e) {
      throw SchemaViolation(i + 1, e.reason());
    }
  }
  return out;
}

std::string JoinLines(const std::vector<json> &records) {
  std::string out;
  for (const auto &r : records) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

void WriteManifest(const std::string &path, const json &manifest) {
  WriteFile(path, manifest.dump(2) + "\n");
}

std::string GroupIdOf(const ExtractionResult &r) { return r.abstract_id; }

std::vector<ExtractionResult> LoadExtractions(const std::string &path) {
  return ParseEach<ExtractionResult>(ReadJsonl(path), ExtractionFromJson);
}

// Sentences of the supporting set followed by the conclusion, for pool and
// typing contexts.
Abstract AsAbstract(const ExtractionResult &r) {
  Abstract a;
  a.id = r.abstract_id;
  a.sentences = r.supporting.sentences;
  a.mentions = r.supporting.mentions;
  const std::size_t n = a.sentences.size();
  a.sentences.push_back({n, r.conclusion.plain_text});
  for (auto m : {r.conclusion.regulator, r.conclusion.regulated}) {
    m.sentence_index = n;
    a.mentions.push_back(std::move(m));
  }
  return a;
}

std::vector<std::string> TrainingSequence(const ExtractionResult &r) {
  auto tokens = Tokenize(r.supporting.PremiseText());
  auto hyp = Tokenize(RenderMarked(r.conclusion));
  tokens.insert(tokens.end(), hyp.begin(), hyp.end());
  return tokens;
}

// Options shared by commands that type entities.
struct TypingOptions {
  std::string lexicon;
  std::string default_type;
  std::string pool;

  void Register(CLI::App *cmd) {
    cmd->add_option("--lexicon", lexicon, "entity type lexicon (surface<TAB>type)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--default-type", default_type, "type for surfaces the lexicon lacks");
    cmd->add_option("--pool", pool,
                    "out-of-text entity pool (surface<TAB>type); built from the input when empty")
        ->check(CLI::ExistingFile);
  }

  LexiconTyper Typer() const {
    std::optional<std::string> def;
    if (!default_type.empty()) def = default_type;
    return lexicon.empty() ? LexiconTyper(def) : LexiconTyper::FromFile(lexicon, def);
  }

  EntityPool Pool(const std::vector<ExtractionResult> &records, const EntityTyper &typer) const {
    if (!pool.empty()) return EntityPool::FromFile(pool);
    std::vector<Abstract> abstracts;
    for (const auto &r : records) abstracts.push_back(AsAbstract(r));
    return EntityPool::FromCorpus(abstracts, typer);
  }

  json ToJson() const {
    return {{"lexicon", lexicon}, {"default_type", default_type}, {"pool", pool}};
  }
};

struct Common {
  std::uint64_t seed = 13;
  int jobs = 1;
  std::string config;
};

void AddCommon(CLI::App *cmd, Common &common) {
  cmd->add_option("--seed", common.seed, "random seed");
  cmd->add_option("--jobs", common.jobs, "worker threads; output does not depend on it")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--config", common.config, "flat key = value file with option defaults");
}

// --- extract ---------------------------------------------------------------

struct ExtractCmd {
  Common common;
  std::string corpus;
  std::string output;
  std::string phrases;
  std::size_t min_premise = 3;
  std::size_t max_premise = 15;
  bool lenient = false;

  void Register(CLI::App &app) {
    auto *cmd = app.add_subcommand("extract", "split abstracts into premise/conclusion pairs");
    cmd->add_option("--corpus", corpus, "line-delimited abstracts")->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--output", output, "extraction records (.jsonl)")->required();
    cmd->add_option("--phrases", phrases, "conclusion phrase list, one per line")
        ->check(CLI::ExistingFile);
    cmd->add_option("--min-premise", min_premise, "fewest supporting sentences");
    cmd->add_option("--max-premise", max_premise, "most supporting sentences");
    cmd->add_flag("--lenient", lenient, "skip malformed records instead of failing");
    AddCommon(cmd, common);
  }

  json Config() const {
    return {{"corpus", corpus},           {"phrases", phrases},
            {"min_premise", min_premise}, {"max_premise", max_premise},
            {"lenient", lenient}};
  }

  int Run(std::ostream &out, std::ostream &err) const {
    const PhraseTable table = phrases.empty() ? PhraseTable::Default() : PhraseTable::FromFile(phrases);
    if (min_premise > max_premise) throw InvalidConfig("min-premise exceeds max-premise");
    std::vector<LoadReport> reports;
    const auto abstracts = LoadCorpus(corpus, LoadOptions{lenient}, &reports);
    for (const auto &r : reports) err << corpus << ":" << r.line << ": skipped: " << r.reason << "\n";
    std::vector<std::optional<ExtractionResult>> results(abstracts.size());
    ParallelFor(abstracts.size(), common.jobs, [&](std::size_t i) {
      results[i] = SplitAbstract(abstracts[i], table, {min_premise, max_premise});
    });
    std::vector<json> records;
    for (const auto &r : results) {
      if (r) records.push_back(ExtractionToJson(*r));
    }
    WriteFile(output, JoinLines(records));
    const json counts = {{"abstracts", abstracts.size()},
                         {"extracted", records.size()},
                         {"skipped_records", reports.size()}};
    WriteManifest(output + ".manifest.json", MakeManifest("extract", Config(), common.seed, counts));
    out << "extracted " << records.size() << " of " << abstracts.size() << " abstracts\n";
    return kExitOk;
  }
};

// --- perturb ---------------------------------------------------------------

struct PerturbCmd {
  Common common;
  std::string input;
  std::string output;
  std::string kinds = "SEN,SEP,SRE,SREO,VNeg,SN,LPR";
  std::string antonyms;
  std::string negation;
  TypingOptions typing;

  void Register(CLI::App &app) {
    auto *cmd = app.add_subcommand("perturb", "apply rule-based perturbations");
    cmd->add_option("--input", input, "extraction records")->required()->check(CLI::ExistingFile);
    cmd->add_option("--output", output, "group records (.jsonl)")->required();
    cmd->add_option("--kinds", kinds, "comma-separated perturbation kinds");
    cmd->add_option("--antonyms", antonyms, "antonym lexicon (term<TAB>antonym)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--negation", negation, "negation rules (pattern<TAB>replacement)")
        ->check(CLI::ExistingFile);
    typing.Register(cmd);
    AddCommon(cmd, common);
  }

  json Config() const {
    return {{"input", input}, {"kinds", kinds}, {"antonyms", antonyms},
            {"negation", negation}, {"typing", typing.ToJson()}};
  }

  int Run(std::ostream &out, std::ostream &) const {
    const KindSet kind_set = ParseKindList(kinds);
    const auto records = LoadExtractions(input);
    const LexiconTyper typer = typing.Typer();
    const EntityPool pool = typing.Pool(records, typer);
    const NegationRules rules = negation.empty() ? NegationRules::Default()
                                                 : NegationRules::FromFile(negation);
    const AntonymLexicon lexicon = antonyms.empty() ? AntonymLexicon::Default()
                                                    : AntonymLexicon::FromFile(antonyms);
    PerturbResources res;
    res.typer = &typer;
    res.pool = &pool;
    res.negation = &rules;
    res.antonyms = &lexicon;

    std::vector<Group> groups(records.size());
    ParallelFor(records.size(), common.jobs, [&](std::size_t i) {
      const auto &r = records[i];
      Group &g = groups[i];
      g.group_id = GroupIdOf(r);
      g.source_abstract_id = r.abstract_id;
      g.premise = r.supporting.PremiseText();
      g.positive = RenderMarked(r.conclusion);
      const auto outputs = PerturbAll(r.conclusion, r.supporting, res,
                                      MixSeed(common.seed, g.group_id), kind_set);
      for (const auto &[kind, c] : outputs) g.negatives[kind].push_back(RenderMarked(c));
    });
    std::vector<json> lines;
    json per_kind = json::object();
    for (auto kind : kAllKinds) per_kind[std::string(KindName(kind))] = 0;
    for (const auto &g : groups) {
      lines.push_back(GroupToJson(g));
      for (auto kind : g.Applicable()) {
        per_kind[std::string(KindName(kind))] = per_kind[std::string(KindName(kind))].get<int>() + 1;
      }
    }
    WriteFile(output, JoinLines(lines));
    const json counts = {{"groups", groups.size()}, {"applicable", per_kind}};
    WriteManifest(output + ".manifest.json", MakeManifest("perturb", Config(), common.seed, counts));
    out << "perturbed " << groups.size() << " groups\n";
    return kExitOk;
  }
};

// --- train-lm --------------------------------------------------------------

struct TrainLmCmd {
  Common common;
  std::string input;
  std::string output;
  int order = 3;
  double discount = 0.4;

  void Register(CLI::App &app) {
    auto *cmd = app.add_subcommand("train-lm", "train the bundled n-gram generator");
    cmd->add_option("--input", input, "extraction records")->required()->check(CLI::ExistingFile);
    cmd->add_option("--output", output, "model file (.json)")->required();
    cmd->add_option("--order", order, "n-gram order");
    cmd->add_option("--discount", discount, "absolute discount in (0,1)");
    AddCommon(cmd, common);
  }

  json Config() const {
    return {{"input", input}, {"order", order}, {"discount", discount}};
  }

  int Run(std::ostream &out, std::ostream &) const {
    std::vector<std::vector<std::string>> corpus;
    for (const auto &r : LoadExtractions(input)) corpus.push_back(TrainingSequence(r));
    const NGramLM lm = NGramLM::Train(corpus, order, discount);
    lm.Save(output);
    const json counts = {{"sequences", corpus.size()}, {"vocab", lm.vocab().size()}};
    WriteManifest(output + ".manifest.json", MakeManifest("train-lm", Config(), common.seed, counts));
    out << "trained order-" << order << " model over " << corpus.size() << " sequences, "
        << lm.vocab().size() << " types\n";
    return kExitOk;
  }
};

// --- decode ----------------------------------------------------------------

struct DecodeCmd {
  Common common;
  std::string input;
  std::string model;
  std::string output;
  std::string schemes = "GEN,SEN,SRE,NG";
  bool paper = false;
  bool desk = false;
  bool bridge = false;
  std::optional<int> beam_size;
  std::optional<int> prune_factor;
  std::optional<int> min_len;
  std::optional<int> max_len;
  int keep = 1;
  TypingOptions typing;

  void Register(CLI::App &app) {
    auto *cmd = app.add_subcommand("decode", "generate hypotheses with constrained beam search");
    cmd->add_option("--input", input, "extraction records")->required()->check(CLI::ExistingFile);
    cmd->add_option("--model", model, "n-gram model from train-lm")->check(CLI::ExistingFile);
    cmd->add_option("--output", output, "generation records (.jsonl)")->required();
    cmd->add_option("--schemes", schemes, "comma-separated subset of GEN,SEN,SRE,NG");
    auto *p = cmd->add_flag("--paper-config", paper, "beam 50 / prune 50 decoder preset");
    auto *d = cmd->add_flag("--desk-config", desk, "beam 8 / prune 8 decoder preset (default)");
    p->excludes(d);
    cmd->add_flag("--bridge", bridge, std::string("score with the bridge named by ") + kBridgeEnvVar);
    cmd->add_option("--beam-size", beam_size, "override the preset beam size");
    cmd->add_option("--prune-factor", prune_factor, "override the preset prune factor");
    cmd->add_option("--min-len", min_len, "override the preset minimum length");
    cmd->add_option("--max-len", max_len, "override the preset maximum length");
    cmd->add_option("--keep", keep, "candidates kept per scheme")->check(CLI::PositiveNumber);
    typing.Register(cmd);
    AddCommon(cmd, common);
  }

  DecoderConfig Decoder() const {
    DecoderConfig cfg = paper ? DecoderConfig::Paper() : DecoderConfig::Desk();
    if (beam_size) cfg.beam_size = *beam_size;
    if (prune_factor) cfg.prune_factor = *prune_factor;
    if (min_len) cfg.min_len = *min_len;
    if (max_len) cfg.max_len = *max_len;
    cfg.Validate();
    return cfg;
  }

  json Config() const {
    return {{"input", input},   {"model", model},         {"schemes", schemes},
            {"bridge", bridge}, {"decoder", Decoder().ToJson()}, {"keep", keep},
            {"typing", typing.ToJson()}};
  }

  int Run(std::ostream &out, std::ostream &err) const {
    const DecoderConfig cfg = Decoder();
    std::set<std::string> wanted;
    for (const auto &raw : SplitList(schemes)) {
      std::string s = raw;
      for (auto &ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (s != "GEN" && s != "SEN" && s != "SRE" && s != "NG") {
        throw InvalidConfig("unknown scheme `" + raw + "`");
      }
      wanted.insert(s);
    }
    const auto records = LoadExtractions(input);
    const LexiconTyper typer = typing.Typer();
    const EntityPool pool = typing.Pool(records, typer);

    std::unique_ptr<BridgeClient> client;
    std::optional<NGramLM> lm;
    if (bridge) {
      auto ep = BridgeEndpoint::FromEnv();
      if (!ep) throw ModelUnavailable(std::string(kBridgeEnvVar) + " is not set");
      client = std::make_unique<BridgeClient>(*ep);
    } else {
      if (model.empty()) throw InvalidConfig("decode needs --model or --bridge");
      lm = NGramLM::Load(model);
    }

    std::vector<std::vector<json>> per_record(records.size());
    ParallelFor(records.size(), common.jobs, [&](std::size_t i) {
      const auto &r = records[i];
      const std::string group = GroupIdOf(r);
      std::unique_ptr<BridgeScorer> remote;
      if (client) remote = std::make_unique<BridgeScorer>(*client, r.supporting.PremiseText());
      const SequenceScorer &scorer = remote ? static_cast<const SequenceScorer &>(*remote) : *lm;
      const auto prompt = remote ? std::vector<TokenId>{}
                                 : scorer.Encode(Tokenize(r.supporting.PremiseText()));

      auto run = [&](const std::string &kind, const std::string &scheme,
                     const ConstraintSet &constraints) {
        json rec = {{"group_id", group},
                    {"kind", kind},
                    {"scheme", scheme},
                    {"constraints", constraints.ToJson()}};
        json candidates = json::array();
        try {
          auto results = Decode(scorer, constraints, cfg, prompt);
          for (std::size_t k = 0; k < results.size() && k < static_cast<std::size_t>(keep); ++k) {
            candidates.push_back({{"text", Detokenize(scorer.Decode(results[k].tokens))},
                                  {"model_score", results[k].model_score},
                                  {"satisfied_clauses", results[k].satisfied_clauses},
                                  {"fully_satisfied", results[k].fully_satisfied}});
          }
        } catch (const NoHypothesis &e) {
          rec["error"] = e.what();
        }
        rec["candidates"] = candidates;
        per_record[i].push_back(std::move(rec));
      };

      if (wanted.count("GEN")) run("GEN", "none", ConstraintSet{});
      if (wanted.count("SEN")) run("GEN-ND", "SEN", BuildSenConstraints(r.conclusion));
      if (wanted.count("SRE")) {
        if (auto sre = SreTarget(r, typer, pool, MixSeed(common.seed, group))) {
          run("GEN-ND", "SRE", BuildSreConstraints(r.conclusion, sre->first, sre->second));
        }
      }
      if (wanted.count("NG")) run("GEN-ND", "NG", BuildNgConstraints(r.conclusion));
    });
    std::vector<json> lines;
    std::size_t failed = 0;
    for (auto &recs : per_record) {
      for (auto &rec : recs) {
        if (rec.contains("error")) ++failed;
        lines.push_back(std::move(rec));
      }
    }
    if (failed) err << failed << " decodes produced no hypothesis\n";
    WriteFile(output, JoinLines(lines));
    const json counts = {{"groups", records.size()}, {"decodes", lines.size()},
                         {"no_hypothesis", failed}};
    WriteManifest(output + ".manifest.json", MakeManifest("decode", Config(), common.seed, counts));
    out << "decoded " << lines.size() << " constraint sets for " << records.size() << " groups\n";
    return kExitOk;
  }

  static std::vector<std::string> SplitList(const std::string &list) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= list.size()) {
      auto comma = list.find(',', start);
      if (comma == std::string::npos) comma = list.size();
      std::string item = Trim(std::string_view(list).substr(start, comma - start));
      if (!item.empty()) out.push_back(item);
      start = comma + 1;
    }
    return out;
  }

  // Replacement surface and role for GEN-ND SRE: an in-text same-type entity
  // when one exists, otherwise one from the pool.
  static std::optional<std::pair<std::string, Role>> SreTarget(const ExtractionResult &r,
                                                               const EntityTyper &typer,
                                                               const EntityPool &pool,
                                                               std::uint64_t seed) {
    std::optional<MarkedConclusion> swapped;
    try {
      swapped = ApplySre(r.conclusion, r.supporting, typer, seed);
      if (!swapped) swapped = ApplySreo(r.conclusion, r.supporting, pool, typer, seed);
    } catch (const UntypedEntity &) {
      return std::nullopt;
    }
    if (!swapped) return std::nullopt;
    if (swapped->regulator.surface != r.conclusion.regulator.surface) {
      return std::make_pair(swapped->regulator.surface, Role::kRegulator);
    }
    return std::make_pair(swapped->regulated.surface, Role::kRegulated);
  }
};

// --- filter ----------------------------------------------------------------

struct FilterCmd {
  Common common;
  std::string input;
  std::string extractions;
  std::string output;
  std::string relations;
  double lambda = 0.45;
  double delta = 0.9;
  bool bridge = false;

  void Register(CLI::App &app) {
    auto *cmd = app.add_subcommand("filter", "accept generated hypotheses as negatives");
    cmd->add_option("--input", input, "generation records from decode")->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--extractions", extractions, "extraction records (gold conclusions)")
        ->required()->check(CLI::ExistingFile);
    cmd->add_option("--output", output, "accepted negatives (.jsonl)")->required();
    cmd->add_option("--lambda", lambda, "GEN quality ceiling");
    cmd->add_option("--delta", delta, "GEN-ND SRE similarity ceiling");
    cmd->add_option("--relations", relations, "relation lexicon (keyword<TAB>label)")
        ->check(CLI::ExistingFile);
    cmd->add_flag("--bridge", bridge,
                  std::string("score with the bridge named by ") + kBridgeEnvVar);
    AddCommon(cmd, common);
  }

  json Config() const {
    return {{"input", input},   {"extractions", extractions}, {"relations", relations},
            {"lambda", lambda}, {"delta", delta},             {"bridge", bridge}};
  }

  int Run(std::ostream &out, std::ostream &) const {
    const FilterConfig fcfg{lambda, delta};
    fcfg.Validate();
    std::map<std::string, ExtractionResult> gold;
    for (auto &r : LoadExtractions(extractions)) {
      const std::string id = GroupIdOf(r);
      gold.emplace(id, std::move(r));
    }
    const auto records = ReadJsonl(input);

    std::unique_ptr<BridgeClient> client;
    std::unique_ptr<SimilarityScorer> sim;
    std::unique_ptr<RelationPredictor> rel;
    if (bridge) {
      auto ep = BridgeEndpoint::FromEnv();
      if (!ep) throw ModelUnavailable(std::string(kBridgeEnvVar) + " is not set");
      client = std::make_unique<BridgeClient>(*ep);
      sim = std::make_unique<BridgeSimilarity>(*client);
      rel = std::make_unique<BridgeRelationPredictor>(*client);
    } else {
      sim = std::make_unique<CosineSimilarity>();
      rel = std::make_unique<KeywordRelationPredictor>(
          relations.empty() ? KeywordRelationPredictor::Default()
                            : KeywordRelationPredictor::FromFile(relations));
    }

    std::vector<std::optional<json>> accepted(records.size());
    ParallelFor(records.size(), common.jobs, [&](std::size_t i) {
      const json &rec = records[i];
      std::string group;
      std::string kind;
      std::string scheme;
      ConstraintSet constraints;
      try {
        group = rec.at("group_id").get<std::string>();
        kind = rec.at("kind").get<std::string>();
        scheme = rec.at("scheme").get<std::string>();
        constraints = ConstraintSet::FromJson(rec.at("constraints"));
      } catch (const json::exception &e) {
        throw SchemaViolation(i + 1, e.what());
      } catch (const SchemaViolation &e) {
        throw SchemaViolation(i + 1, e.reason());
      }
      auto it = gold.find(group);
      if (it == gold.end()) throw UnknownId("generation for unknown group `" + group + "`");
      const MarkedConclusion &c = it->second.conclusion;
      const json candidates = rec.value("candidates", json::array());
      for (const auto &cand : candidates) {
        const std::string text = cand.value("text", "");
        bool ok = false;
        if (kind == "GEN") {
          try {
            ok = FilterGen(text, c, *sim, *rel, fcfg);
          } catch (const MissingEntities &) {
            ok = false;
          }
        } else if (kind == "GEN-ND") {
          auto s = ParseGndScheme(scheme);
          if (!s) throw SchemaViolation(i + 1, "unknown scheme `" + scheme + "`");
          ok = FilterGnd(text, c, *s, constraints, *sim, fcfg);
        } else {
          throw SchemaViolation(i + 1, "unknown generation kind `" + kind + "`");
        }
        if (ok) {
          accepted[i] = json{{"group_id", group}, {"kind", kind}, {"scheme", scheme},
                             {"hypothesis", text}};
          break;
        }
      }
    });
    std::vector<json> lines;
    for (auto &a : accepted) {
      if (a) lines.push_back(std::move(*a));
    }
    WriteFile(output, JoinLines(lines));
    const json counts = {{"generations", records.size()}, {"accepted", lines.size()}};
    WriteManifest(output + ".manifest.json", MakeManifest("filter", Config(), common.seed, counts));
    out << "accepted " << lines.size() << " of " << records.size() << " generations\n";
    return kExitOk;
  }
};

// --- assemble --------------------------------------------------------------

struct AssembleCmd {
  Common common;
  std::string groups_path;
  std::vector<std::string> generated;
  std::string output_dir;
  bool balanced = false;
  std::size_t cap = SplitPolicy::kPaperCap;
  double train_ratio = 0.63;
  double dev_ratio = 0.22;
  double test_ratio = 0.15;

  void Register(CLI::App &app) {
    auto *cmd = app.add_subcommand("assemble", "build train/dev/test files");
    cmd->add_option("--groups", groups_path, "group records from perturb")->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--generated", generated, "accepted negatives from filter (repeatable)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--output-dir", output_dir, "directory for split files")->required();
    cmd->add_flag("--balanced", balanced, "cap each rule-based train category");
    cmd->add_option("--cap", cap, "per-category train cap under --balanced");
    cmd->add_option("--train-ratio", train_ratio, "share of groups in train");
    cmd->add_option("--dev-ratio", dev_ratio, "share of groups in dev");
    cmd->add_option("--test-ratio", test_ratio, "share of groups in test");
    AddCommon(cmd, common);
  }

  json Config() const {
    return {{"groups", groups_path}, {"generated", generated},     {"balanced", balanced},
            {"cap", cap},            {"train_ratio", train_ratio}, {"dev_ratio", dev_ratio},
            {"test_ratio", test_ratio}};
  }

  int Run(std::ostream &out, std::ostream &) const {
    auto groups = ParseEach<Group>(ReadJsonl(groups_path), GroupFromJson);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < groups.size(); ++i) index.emplace(groups[i].group_id, i);
    for (const auto &path : generated) {
      const auto records = ReadJsonl(path);
      for (std::size_t i = 0; i < records.size(); ++i) {
        const json &rec = records[i];
        if (!rec.is_object() || !rec.contains("group_id") || !rec.contains("kind") ||
            !rec.contains("hypothesis")) {
          throw SchemaViolation(i + 1, "accepted record needs group_id, kind, hypothesis");
        }
        const std::string group = rec["group_id"].get<std::string>();
        auto kind = ParseKind(rec["kind"].get<std::string>());
        if (!kind || IsRuleBased(*kind)) throw SchemaViolation(i + 1, "not a generation kind");
        auto it = index.find(group);
        if (it == index.end()) throw UnknownId("accepted negative for unknown group `" + group + "`");
        auto &hyps = groups[it->second].negatives[*kind];
        const std::string h = rec["hypothesis"].get<std::string>();
        if (std::find(hyps.begin(), hyps.end(), h) == hyps.end()) hyps.push_back(h);
      }
    }
    SplitPolicy policy;
    policy.ratios = {train_ratio, dev_ratio, test_ratio};
    if (balanced) policy.balance_cap = cap;
    const Assembly assembly = Assemble(groups, policy, common.seed);

    std::filesystem::create_directories(output_dir);
    const std::filesystem::path dir(output_dir);
    json counts = json::object();
    for (Split s : kAllSplits) {
      const auto part = assembly.InSplit(s);
      WriteFile((dir / (std::string(SplitName(s)) + ".jsonl")).string(), InstancesToJsonl(part));
      counts[std::string(SplitName(s))] = part.size();
    }
    WriteFile((dir / "stats.json").string(), assembly.stats.ToJson().dump(2) + "\n");
    WriteManifest((dir / "manifest.json").string(),
                  MakeManifest("assemble", Config(), common.seed, counts));
    out << assembly.stats.ToTable();
    return kExitOk;
  }
};

// --- stats -----------------------------------------------------------------

struct StatsCmd {
  Common common;
  std::string dataset_dir;
  std::string groups_path;
  std::string output;

  void Register(CLI::App &app) {
    auto *cmd = app.add_subcommand("stats", "report dataset statistics");
    cmd->add_option("--dataset-dir", dataset_dir, "directory holding train/dev/test.jsonl")
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--groups", groups_path, "group records, for the applicability histogram")
        ->check(CLI::ExistingFile);
    cmd->add_option("--output", output, "write the statistics as JSON");
    AddCommon(cmd, common);
  }

  json Config() const {
    return {{"dataset_dir", dataset_dir}, {"groups", groups_path}};
  }

  int Run(std::ostream &out, std::ostream &) const {
    if (dataset_dir.empty() && groups_path.empty()) {
      throw InvalidConfig("stats needs --dataset-dir or --groups");
    }
    DatasetStats stats;
    if (!dataset_dir.empty()) {
      for (Split s : kAllSplits) {
        const std::string name(SplitName(s));
        auto &row = stats.counts[name];
        row["Positive"] = 0;
        for (auto kind : kAllKinds) row[std::string(KindName(kind))] = 0;
        const auto path = std::filesystem::path(dataset_dir) / (name + ".jsonl");
        if (!std::filesystem::exists(path)) continue;
        std::set<std::string> groups;
        for (const auto &x : LoadInstances(path.string())) {
          ++row[CategoryName(x.category)];
          groups.insert(x.group_id);
        }
        stats.unique[name] = groups.size();
      }
    }
    if (!groups_path.empty()) {
      stats.applicability =
          ApplicabilityHistogram(ParseEach<Group>(ReadJsonl(groups_path), GroupFromJson));
    }
    out << stats.ToTable();
    if (!output.empty()) {
      WriteFile(output, stats.ToJson().dump(2) + "\n");
      json counts = json::object();
      for (Split s : kAllSplits) counts[std::string(SplitName(s))] = stats.Total(s);
      WriteManifest(output + ".manifest.json", MakeManifest("stats", Config(), common.seed, counts));
    }
    return kExitOk;
  }
};

// --- eval ------------------------------------------------------------------

struct EvalCmd {
  Common common;
  std::string dataset;
  std::string predictions;
  std::string output;
  std::string svg;

  void Register(CLI::App &app) {
    auto *cmd = app.add_subcommand("eval", "score classifier predictions");
    cmd->add_option("--dataset", dataset, "instance file (.jsonl)")->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--predictions", predictions, "predictions {id, label} (.jsonl)")->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--output", output, "write the report as JSON");
    cmd->add_option("--svg", svg, "write the consistency chart as SVG");
    AddCommon(cmd, common);
  }

  json Config() const {
    return {{"dataset", dataset}, {"predictions", predictions}};
  }

  int Run(std::ostream &out, std::ostream &) const {
    const EvalReport report = Evaluate(LoadInstances(dataset), LoadPredictions(predictions));
    out << report.ToTable();
    if (!output.empty()) {
      WriteFile(output, report.ToJson().dump(2) + "\n");
      const json counts = {{"groups", report.consistency.groups}};
      WriteManifest(output + ".manifest.json", MakeManifest("eval", Config(), common.seed, counts));
    }
    if (!svg.empty()) WriteFile(svg, report.consistency.ToSvg());
    return kExitOk;
  }
};

// Appends `--key value` for config keys the command line does not set.
std::vector<std::string> ApplyConfigFile(const std::vector<std::string> &args,
                                         CLI::App &app) {
  std::string path;
  std::string command;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
    if (command.empty() && !args[i].starts_with("-")) command = args[i];
  }
  if (path.empty() || command.empty()) return args;
  CLI::App *sub = nullptr;
  try {
    sub = app.get_subcommand(command);
  } catch (const CLI::OptionNotFound &) {
    return args;
  }
  std::vector<std::string> merged = args;
  for (const auto &[key, value] : ParseFlatConfig(ReadFile(path))) {
    const std::string flag = "--" + key;
    if (key == "config") throw InvalidConfig("config files cannot nest");
    const CLI::Option *opt = sub->get_option_no_throw(flag);
    if (opt == nullptr) throw InvalidConfig("unknown config key `" + key + "` for " + command);
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string &a) {
      return a == flag || a.starts_with(flag + "=");
    });
    if (given) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1") {
        merged.push_back(flag);
      } else if (value != "false" && value != "0") {
        throw InvalidConfig("flag `" + key + "` takes true or false");
      }
    } else {
      merged.push_back(flag);
      merged.push_back(value);
    }
  }
  return merged;
}

int ExitCodeFor(const Error &e) {
  if (dynamic_cast<const InvalidConfig *>(&e) != nullptr) return kExitUsage;
  switch (e.kind()) {
    case ErrorKind::kInput:
    case ErrorKind::kIo:
    case ErrorKind::kService:
      return kExitInput;
    case ErrorKind::kInvariant:
      return kExitInvariant;
  }
  return kExitInvariant;
}

}  // namespace

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Adversarial NLI dataset toolkit for biomedical mechanisms", "mechnli"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  ExtractCmd extract;
  PerturbCmd perturb;
  TrainLmCmd train_lm;
  DecodeCmd decode;
  FilterCmd filter;
  AssembleCmd assemble;
  StatsCmd stats;
  EvalCmd eval;
  extract.Register(app);
  perturb.Register(app);
  train_lm.Register(app);
  decode.Register(app);
  filter.Register(app);
  assemble.Register(app);
  stats.Register(app);
  eval.Register(app);

  try {
    std::vector<std::string> argv = ApplyConfigFile(args, app);
    std::reverse(argv.begin(), argv.end());
    try {
      app.parse(argv);
    } catch (const CLI::ParseError &e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kExitOk : kExitUsage;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "extract") return extract.Run(out, err);
    if (name == "perturb") return perturb.Run(out, err);
    if (name == "train-lm") return train_lm.Run(out, err);
    if (name == "decode") return decode.Run(out, err);
    if (name == "filter") return filter.Run(out, err);
    if (name == "assemble") return assemble.Run(out, err);
    if (name == "stats") return stats.Run(out, err);
    if (name == "eval") return eval.Run(out, err);
    err << "unknown command " << name << "\n";
    return kExitUsage;
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  } catch (const std::filesystem::filesystem_error &e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
}

}  // namespace mechnli
