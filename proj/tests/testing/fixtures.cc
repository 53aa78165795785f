#include "testing/fixtures.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>
#include <thread>
#include <stdexcept>

#include "httplib.h"
#include "json.hpp"
#include "mechnli/genfilter.h"
#include "mechnli/text.h"

namespace mechnli::testing {

namespace fs = std::filesystem;
using nlohmann::json;

std::string DataPath(const std::string &name) {
  return (fs::path(MECHNLI_DATA_DIR) / name).string();
}

std::string ScratchDir(const std::string &name) {
  const fs::path dir = fs::path(MECHNLI_SCRATCH_DIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

EntityMention Mention(const std::string &text, const std::string &surface,
                      std::size_t sentence_index, std::string type, Role role,
                      std::size_t occurrence) {
  std::size_t pos = text.find(surface);
  for (std::size_t k = 0; k < occurrence && pos != std::string::npos; ++k) {
    pos = text.find(surface, pos + 1);
  }
  if (pos == std::string::npos) throw std::logic_error("fixture surface not found: " + surface);
  EntityMention m;
  m.surface = surface;
  m.type_label = std::move(type);
  m.role = role;
  m.sentence_index = sentence_index;
  m.char_span = ToCodepointSpan(text, {pos, pos + surface.size()});
  return m;
}

namespace {

Abstract Build(const std::string &id, const std::vector<std::string> &sentences) {
  Abstract a;
  a.id = id;
  for (std::size_t i = 0; i < sentences.size(); ++i) a.sentences.push_back({i, sentences[i]});
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------

Abstract Table1Abstract() {
  Abstract a = Build(
      "table1",
      {"The outflow of uracil from the yeast Saccharomyces cerevisiae is known to be relatively "
       "fast in certain circumstances, to be retarded by proton conductors and to occur in "
       "strains lacking a uracil proton symport.",
       "In the present work, it was shown that uracil exit from washed yeast cells is an active "
       "process, creating a uracil gradient of the order of -80 mV relative to the surrounding "
       "medium.",
       "Glucose accelerated uracil exit, while retarding its entry.",
       "DNP or sodium azide each lowered the gradient to about -30 mV, simultaneously increasing "
       "the rate of uracil entry.",
       "They also lowered cellular ATP content.",
       "Manipulation of the external ionic conditions governing delta mu H+ at the plasma "
       "membrane had no detectable effect on uracil transport in yeast preparations thoroughly "
       "depleted of ATP.",
       "It was concluded that uracil exit is probably not driven by the s proton gradient but "
       "may utilize ATP directly."});
  const auto &s = a.sentences;
  a.mentions = {
      Mention(s[0].text, "uracil", 0),  Mention(s[0].text, "proton", 0),
      Mention(s[0].text, "uracil", 0, "", Role::kNone, 1),
      Mention(s[0].text, "proton", 0, "", Role::kNone, 1),
      Mention(s[1].text, "uracil", 1),  Mention(s[1].text, "uracil", 1, "", Role::kNone, 1),
      Mention(s[2].text, "Glucose", 2), Mention(s[2].text, "uracil", 2),
      Mention(s[3].text, "DNP", 3),     Mention(s[3].text, "sodium azide", 3),
      Mention(s[3].text, "uracil", 3),  Mention(s[4].text, "ATP", 4),
      Mention(s[5].text, "uracil", 5),  Mention(s[5].text, "ATP", 5),
      Mention(s[6].text, "uracil", 6, "", Role::kRegulator),
      Mention(s[6].text, "proton", 6, "", Role::kRegulated),
  };
  return a;
}

std::string Table1Hypothesis() {
  return "It was concluded that <re> uracil <er> exit is probably not driven by the s "
         "<el> proton <le> gradient but may utilize ATP directly.";
}

LexiconTyper Table1Typer() {
  LexiconTyper typer;
  for (const char *s : {"uracil", "proton", "glucose", "atp", "dnp", "sodium azide"}) {
    typer.Add(s, "Simple_chemical");
  }
  return typer;
}

std::string Table5Conclusion() {
  return "We conclude that, although the <el> ABA <le>-induced the <re> pH <er>(i) increase is "
         "correlated with and even precedes the induction of RAB-16 mRNA expression and is an "
         "essential component of the transduction pathway leading from the hormone to gene "
         "expression, it is not sufficient to cause such expression.";
}

Abstract Table5Abstract() {
  const MarkedConclusion c = ParseMarked(Table5Conclusion());
  Abstract a = Build(
      "table5",
      {"We investigated whether intracellular pH (pH(i)) is a causal mediator in abscisic acid "
       "(ABA)-induced gene expression.",
       "We measured the change in pH(i) by a \"null-point\" method during stimulation of barley "
       "(Hordeum vulgare cv Himalaya) aleurone protoplasts with ABA and found that ABA induces "
       "an increase in pH(i) from 7.11 to 7.30 within 45 min after stimulation.",
       "This increase is inhibited by plasma membrane H(+)-ATPase inhibitors, which induce a "
       "decrease in pH(i), both in the presence and absence of ABA.",
       "This ABA-induced pH(i) increase precedes the expression of RAB-16 mRNA, as measured by "
       "northern analysis.",
       "ABA-induced pH(i) changes can be bypassed or clamped by addition of either the weak "
       "acids 5,5-dimethyl-2,4-oxazolidinedione and propionic acid, which decrease the pH(i), "
       "or the weak bases methylamine and ammonia, which increase the pH(i).",
       "Artificial pH(i) increases or decreases induced by weak bases or weak acids, "
       "respectively, do not induce RAB-16 mRNA expression.",
       "Clamping of the pH(i) at a high value with methylamine or ammonia treatment affected "
       "the ABA-induced increase of RAB-16 mRNA only slightly.",
       "However, inhibition of the ABA-induced pH(i) increase with weak acid or proton pump "
       "inhibitor treatments strongly inhibited the ABA-induced RAB-16 mRNA expression.",
       c.plain_text});
  const auto &s = a.sentences;
  a.mentions = {
      Mention(s[0].text, "ABA", 0, "Simple_chemical"),
      Mention(s[1].text, "ABA", 1, "Simple_chemical"),
      Mention(s[4].text, "propionic acid", 4, "Simple_chemical"),
      Mention(s[4].text, "methylamine", 4, "Simple_chemical"),
      Mention(s[4].text, "ammonia", 4, "Simple_chemical"),
      Mention(s[6].text, "ABA", 6, "Simple_chemical"),
      Mention(s[8].text, "ABA", 8, "Simple_chemical", Role::kRegulated),
      Mention(s[8].text, "pH", 8, "", Role::kRegulator),
  };
  return a;
}

SupportingSet Table5Supporting() {
  const Abstract a = Table5Abstract();
  SupportingSet s;
  s.sentences.assign(a.sentences.begin(), a.sentences.end() - 1);
  for (const auto &m : a.mentions) {
    if (m.sentence_index + 1 < a.sentences.size()) s.mentions.push_back(m);
  }
  return s;
}

LexiconTyper Table5Typer() {
  LexiconTyper typer;
  for (const char *s : {"aba", "methylamine", "ammonia", "propionic acid"}) {
    typer.Add(s, "Simple_chemical");
  }
  return typer;
}

EntityPool Table5Pool() {
  EntityPool pool;
  pool.Add("integrin", "Simple_chemical");
  return pool;
}

std::map<PerturbationKind, std::string> Table5Golden() {
  const std::string tail =
      " is correlated with and even precedes the induction of RAB-16 mRNA expression and is an "
      "essential component of the transduction pathway leading from the hormone to gene "
      "expression, it is not sufficient to cause such expression.";
  return {
      {PerturbationKind::kSEN,
       "We conclude that, although the <el> pH <le>-induced the <re> ABA <er>(i) increase" + tail},
      {PerturbationKind::kSEP,
       "We conclude that, although the <re> pH <er>-induced the <el> ABA <le>(i) increase" + tail},
      {PerturbationKind::kSREO,
       "We conclude that, although the <el> integrin <le>-induced the <re> pH <er>(i) increase" +
           tail},
      {PerturbationKind::kVNeg,
       "We conclude that, although the <el> ABA <le>-induced the <re> pH <er>(i) increase is not "
       "correlated with and even precedes the induction of RAB-16 mRNA expression and is an "
       "essential component of the transduction pathway leading from the hormone to gene "
       "expression, it is not sufficient to cause such expression."},
      {PerturbationKind::kLPR,
       "We conclude that, although the <el> ABA <le>-induced the <re> pH <er>(i) decrease" + tail},
  };
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kFixtureEntities = {
    "ABA",  "ATP",      "integrin", "uracil", "glucose", "insulin",
    "TNF",  "p53",      "NF-kB",    "calcium", "IL-6",   "cAMP",
    "mTOR", "β-catenin", "Ca²⁺",    "AMPK"};

const std::vector<std::string> kSupportTemplates = {
    "We measured the level of {E} in treated cells.",
    "Treatment with {E} changed the response after 30 min.",
    "{E} was detected in all 12 samples.",
    "Knockdown of {E} reduced the signal by about half.",
    "The effect of {E} persisted for 2 days.",
    "Cells lacking {E} grew normally.",
};

std::string Capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string Upper(std::string s) {
  for (auto &c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::string PhraseSentence(const std::string &phrase, const std::string &regulator,
                           const std::string &regulated) {
  return phrase + " " + regulator + " activates " + regulated + " in vivo.";
}

std::vector<Abstract> ExtractionFixture() {
  const std::vector<std::string> phrases = {
      "we conclude that",         "it is concluded that",      "it was concluded that",
      "we concluded that",        "we have concluded that",    "it has been concluded that",
      "it may be concluded that", "it was therefore concluded that",
      "we therefore conclude that", "we conclude",             "we thus conclude that",
      "it is therefore concluded that", "we further conclude that"};
  Rng rng(20240601);
  std::vector<Abstract> out;
  for (std::size_t i = 0; i < 100; ++i) {
    Abstract a;
    a.id = "fx" + std::to_string(1000 + i);
    const std::size_t n_support = 3 + i % 13;
    for (std::size_t k = 0; k < n_support; ++k) {
      const std::string entity = rng.Choose(kFixtureEntities);
      std::string text;
      if (i >= 91 && k == 0) {
        // A phrase outside the final sentence does not count.
        text = "We conclude that earlier reports about " + entity + " were incomplete.";
      } else {
        text = rng.Choose(kSupportTemplates);
        text.replace(text.find("{E}"), 3, entity);
      }
      a.sentences.push_back({k, text});
      a.mentions.push_back(Mention(text, entity, k, "Chemical"));
    }
    std::string reg = rng.Choose(kFixtureEntities);
    std::string regd = rng.Choose(kFixtureEntities);
    while (EqualsIgnoreCase(regd, reg)) regd = rng.Choose(kFixtureEntities);
    std::string final_text;
    if (i < 91) {
      const std::string &p = phrases[i % phrases.size()];
      const std::string variant = i % 3 == 0 ? Capitalize(p) : i % 3 == 1 ? Upper(p) : p;
      final_text = PhraseSentence(variant, reg, regd);
    } else {
      final_text = "Together these data suggest that " + reg + " activates " + regd + " in vivo.";
    }
    a.sentences.push_back({n_support, final_text});
    a.mentions.push_back(Mention(final_text, reg, n_support, "Chemical", Role::kRegulator));
    a.mentions.push_back(Mention(final_text, regd, n_support, "Chemical", Role::kRegulated));
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<std::size_t> CorruptLines() { return {5, 12, 23, 34, 45, 56, 67, 78, 89}; }

std::string CorruptCorpusJsonl() {
  const auto abstracts = ExtractionFixture();
  const auto bad = CorruptLines();
  std::string out;
  std::size_t corrupt_index = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t line = i + 1;
    json j = AbstractToJson(abstracts[i]);
    if (std::find(bad.begin(), bad.end(), line) != bad.end()) {
      switch (corrupt_index++) {
        case 0: out += "{\"id\": \"broken\", \"sentences\": [\n"; continue;
        case 1: j.erase("sentences"); break;
        case 2: j["entities"][0]["end"] = 10000; break;
        case 3: j["entities"][0]["surface"] = "not-the-text"; break;
        case 4: j["sentences"] = json::array({"Only one sentence."}); j["entities"] = json::array(); break;
        case 5: j["entities"][0]["role"] = "regulator"; break;
        case 6: j["sentences"] = "not a list"; break;
        case 7: j["sentences"][0] = "   "; j["entities"] = json::array(); break;
        case 8: j["sentences"][0] = "A <re> tagged <er> sentence."; j["entities"] = json::array(); break;
      }
    }
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string> kWords = {
    "the",  "increase", "of",   "in",      "cells", "is",     "required", "for",
    "and",  "inhibits", "not",  "via",     "was",   "by",     "reduced",  "signal",
    "with", "2",        "3.5",  "-40",     "a",     "strong", "response", "may"};
const std::vector<std::string> kEntities = {
    "ABA", "pH", "ATP", "insulin", "TNF-α", "p53", "NF-kB", "β-catenin", "Ca²⁺", "IL-6",
    "cAMP", "mTOR", "glucose", "uracil", "integrin", "heat shock protein 70"};
const std::vector<std::string> kPunct = {"", "", "", ",", "-induced", "(i)", ".", ";"};

}  // namespace

MarkedConclusion RandomConclusion(Rng &rng) {
  const std::size_t n = 3 + rng.UniformIndex(10);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(rng.Choose(kWords));
  std::size_t a = rng.UniformIndex(n + 1);
  std::size_t b = rng.UniformIndex(n + 1);
  const std::string e1 = rng.Choose(kEntities);
  std::string e2 = rng.Choose(kEntities);
  while (EqualsIgnoreCase(e1, e2)) e2 = rng.Choose(kEntities);
  const bool regulator_first = rng.UniformIndex(2) == 0;
  const std::string first = regulator_first ? "<re> " + e1 + " <er>" : "<el> " + e1 + " <le>";
  const std::string second = regulator_first ? "<el> " + e2 + " <le>" : "<re> " + e2 + " <er>";
  if (a > b) std::swap(a, b);
  std::string text;
  auto append = [&](const std::string &piece, bool glue) {
    if (!text.empty() && !glue) text.push_back(' ');
    text += piece;
  };
  for (std::size_t i = 0; i <= n; ++i) {
    if (i == a) {
      append(first, false);
      append(rng.Choose(kPunct), true);
    }
    if (i == b) {
      append(second, false);
      append(rng.Choose(kPunct), true);
    }
    if (i < n) append(words[i], false);
  }
  return ParseMarked(text);
}

SupportingSet RandomSupporting(Rng &rng, const MarkedConclusion &c) {
  SupportingSet s;
  const std::size_t n = 3 + rng.UniformIndex(5);
  for (std::size_t i = 0; i < n; ++i) {
    std::string entity = rng.Choose(kEntities);
    std::string text = "Levels of " + entity + " changed by " +
                       std::to_string(1 + rng.UniformIndex(90)) + " percent in " +
                       rng.Choose(kWords) + " assays.";
    if (i == 0) text = "We studied " + c.regulator.surface + " and " + c.regulated.surface + ".";
    s.sentences.push_back({i, text});
    if (i == 0) {
      s.mentions.push_back(Mention(text, c.regulator.surface, i, "Chemical"));
      s.mentions.push_back(Mention(text, c.regulated.surface, i, "Chemical"));
    } else {
      s.mentions.push_back(Mention(text, entity, i, "Chemical"));
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

ToyScorer::ToyScorer(std::size_t vocab_size, std::uint64_t seed) : seed_(seed) {
  for (std::size_t i = 0; i < vocab_size; ++i) vocab_.push_back("t" + std::to_string(i));
  IndexVocab();
}

std::vector<double> ToyScorer::LogProbs(std::span<const TokenId> prefix) const {
  std::string key;
  for (TokenId t : prefix) key += std::to_string(t) + ",";
  Rng rng(MixSeed(seed_, key));
  std::vector<double> logits(vocab_.size());
  double max = -1e300;
  for (auto &l : logits) {
    l = static_cast<double>(rng.Next() >> 11) * 0x1.0p-53 * 4.0 - 2.0;
    max = std::max(max, l);
  }
  double z = 0.0;
  for (double l : logits) z += std::exp(l - max);
  const double log_z = max + std::log(z);
  for (auto &l : logits) l -= log_z;
  return logits;
}

namespace {

bool ContainsPhrase(const std::vector<std::string> &tokens, const std::vector<std::string> &p) {
  if (p.empty() || p.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + p.size() <= tokens.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < p.size() && match; ++j) match = tokens[i + j] == p[j];
    if (match) return true;
  }
  return false;
}

bool HasRepeatedNgram(const std::vector<TokenId> &seq, std::size_t n) {
  if (seq.size() < n + 1) return false;
  std::set<std::vector<TokenId>> seen;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    if (!seen.insert(std::vector<TokenId>(seq.begin() + i, seq.begin() + i + n)).second) {
      return true;
    }
  }
  return false;
}

}  // namespace

BruteForceBest BruteForce(const SequenceScorer &scorer, const ConstraintSet &constraints,
                          const DecoderConfig &config) {
  BruteForceBest best;
  std::vector<TokenId> seq;
  const auto vocab = static_cast<TokenId>(scorer.vocab().size());
  std::function<void()> visit = [&] {
    std::vector<std::string> words;
    for (TokenId t : seq) words.push_back(scorer.vocab()[static_cast<std::size_t>(t)]);
    for (const auto &clause : constraints.clauses) {
      for (const auto &lit : clause.literals) {
        if (lit.polarity == Polarity::kMustNotAppear && ContainsPhrase(words, lit.phrase)) return;
      }
    }
    if (HasRepeatedNgram(seq, static_cast<std::size_t>(config.ngram_block))) return;
    if (static_cast<int>(seq.size()) >= config.min_len) {
      bool all = true;
      for (const auto &clause : constraints.clauses) {
        bool any = false;
        for (const auto &lit : clause.literals) {
          any = any || (lit.polarity == Polarity::kMustAppear
                            ? ContainsPhrase(words, lit.phrase)
                            : !ContainsPhrase(words, lit.phrase));
        }
        all = all && any;
      }
      if (all) {
        const double score = ScoreSequence(scorer, seq);
        if (!best.found || score > best.score || (score == best.score && seq < best.tokens)) {
          best = {true, seq, score};
        }
      }
    }
    if (static_cast<int>(seq.size()) == config.max_len) return;
    for (TokenId t = 0; t < vocab; ++t) {
      if (t == scorer.eos_id()) continue;
      seq.push_back(t);
      visit();
      seq.pop_back();
    }
  };
  visit();
  return best;
}

ConstraintSet RandomConstraints(Rng &rng, const SequenceScorer &scorer) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < scorer.vocab().size(); ++i) {
    if (static_cast<TokenId>(i) != scorer.eos_id()) tokens.push_back(scorer.vocab()[i]);
  }
  ConstraintSet set;
  const std::size_t clauses = 1 + rng.UniformIndex(3);
  for (std::size_t c = 0; c < clauses; ++c) {
    Clause clause;
    const std::size_t literals = 1 + rng.UniformIndex(2);
    for (std::size_t l = 0; l < literals; ++l) {
      Literal lit;
      const std::size_t len = 1 + rng.UniformIndex(2);
      for (std::size_t k = 0; k < len; ++k) lit.phrase.push_back(rng.Choose(tokens));
      lit.polarity = rng.UniformIndex(4) == 0 ? Polarity::kMustNotAppear : Polarity::kMustAppear;
      clause.literals.push_back(std::move(lit));
    }
    set.clauses.push_back(std::move(clause));
  }
  return set;
}

// ---------------------------------------------------------------------------

Table4Fixture MakeTable4Fixture() {
  const std::vector<std::pair<PerturbationKind, std::size_t>> correct = {
      {PerturbationKind::kSEN, 97},   {PerturbationKind::kSEP, 98},
      {PerturbationKind::kSRE, 50},   {PerturbationKind::kSREO, 99},
      {PerturbationKind::kVNeg, 86},  {PerturbationKind::kSN, 81},
      {PerturbationKind::kLPR, 59},   {PerturbationKind::kGEN_ND, 56},
      {PerturbationKind::kGEN, 57}};
  constexpr std::size_t kPositives = 936;
  constexpr std::size_t kPositivesCorrect = 722;
  Table4Fixture fx;
  auto group_of = [](std::size_t i) { return "g" + std::to_string(1000 + i % kPositives); };
  for (std::size_t i = 0; i < kPositives; ++i) {
    NLIInstance x;
    x.id = group_of(i) + "-Positive-0";
    x.group_id = group_of(i);
    x.premise = "premise";
    x.hypothesis = "positive";
    x.label = Label::kEntailed;
    x.source_abstract_id = x.group_id;
    fx.dataset.push_back(x);
    fx.predictions.push_back({x.id, i < kPositivesCorrect ? Label::kEntailed : Label::kNotEntailed});
  }
  std::size_t serial = 0;
  for (const auto &[kind, right] : correct) {
    for (std::size_t k = 0; k < 100; ++k, ++serial) {
      NLIInstance x;
      x.group_id = group_of(serial);
      x.id = x.group_id + "-" + std::string(KindName(kind)) + "-" + std::to_string(k);
      x.premise = "premise";
      x.hypothesis = "negative";
      x.label = Label::kNotEntailed;
      x.category = kind;
      x.source_abstract_id = x.group_id;
      fx.dataset.push_back(x);
      fx.predictions.push_back({x.id, k < right ? Label::kNotEntailed : Label::kEntailed});
    }
  }
  return fx;
}

Table4Fixture MakeConsistencyFixture(std::size_t groups, std::size_t reaching) {
  Table4Fixture fx;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::string gid = "c" + std::to_string(100 + g);
    const std::size_t right = g < reaching ? 7 + g % 4 : g % 7;
    for (std::size_t k = 0; k < 10; ++k) {
      NLIInstance x;
      x.group_id = gid;
      x.category = k == 0 ? Category{} : Category{kAllKinds[k - 1]};
      x.id = gid + "-" + CategoryName(x.category) + "-0";
      x.label = k == 0 ? Label::kEntailed : Label::kNotEntailed;
      x.premise = "premise";
      x.hypothesis = "h" + std::to_string(k);
      x.source_abstract_id = gid;
      const Label wrong = x.label == Label::kEntailed ? Label::kNotEntailed : Label::kEntailed;
      fx.predictions.push_back({x.id, k < right ? x.label : wrong});
      fx.dataset.push_back(std::move(x));
    }
  }
  return fx;
}

std::vector<Group> RandomGroups(std::size_t n, std::uint64_t seed, std::optional<Split> split) {
  Rng rng(seed);
  std::vector<Group> out;
  for (std::size_t i = 0; i < n; ++i) {
    Group g;
    g.group_id = "grp" + std::to_string(100000 + i);
    g.source_abstract_id = "abs" + std::to_string(i);
    g.premise = "Premise sentence " + std::to_string(i) + ".";
    g.positive = "<re> A" + std::to_string(i) + " <er> activates <el> B <le>.";
    g.split = split;
    for (PerturbationKind kind : kAllKinds) {
      bool present = kind == PerturbationKind::kSEN || kind == PerturbationKind::kSEP;
      if (!present) {
        present = IsRuleBased(kind) ? rng.UniformIndex(2) == 0 : rng.UniformIndex(10) == 0;
      }
      if (present) g.negatives[kind].push_back(g.positive + " " + std::string(KindName(kind)));
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace mechnli::testing

// ---------------------------------------------------------------------------

namespace mechnli::testing {

struct FakeBridge::Server {
  httplib::Server http;
  std::thread thread;
};

std::vector<std::vector<std::string>> FakeBridge::TrainingText() {
  std::vector<std::vector<std::string>> out;
  for (const char *s : {"it was concluded that <re> atp <er> activates <el> uracil <le> exit .",
                        "we conclude that <re> aba <er> induces <el> ph <le> increase .",
                        "<re> glucose <er> inhibits <el> uracil <le> entry in yeast .",
                        "we conclude that <el> ph <le> is not required for <re> aba <er> ."}) {
    out.push_back(Tokenize(s));
  }
  return out;
}

FakeBridge::FakeBridge()
    : lm_(std::make_unique<NGramLM>(NGramLM::Train(TrainingText(), 3))),
      server_(std::make_unique<Server>()) {
  typer_.Add("atp", "Simple_chemical");
  typer_.Add("uracil", "Simple_chemical");
  typer_.Add("aba", "Simple_chemical");

  auto respond = [this](const std::string &name, auto &&handler) {
    server_->http.Post("/v1/" + name, [this, name, handler](const httplib::Request &req,
                                                            httplib::Response &res) {
      std::pair<Fault, std::string> fault{Fault::kNone, ""};
      {
        std::lock_guard<std::mutex> lock(mu_);
        ++requests_;
        if (auto it = faults_.find(name); it != faults_.end()) fault = it->second;
      }
      if (fault.first == Fault::kGarbage) {
        res.set_content("<html>oops</html>", "text/html");
        return;
      }
      json request;
      try {
        request = json::parse(req.body);
      } catch (const json::exception &) {
        res.status = 400;
        return;
      }
      json reply = {{"id", request.value("id", json())}, {"ok", true}};
      if (fault.first == Fault::kWrongId) reply["id"] = "not-the-id";
      if (fault.first == Fault::kErrorCode) {
        reply["ok"] = false;
        reply["error"] = {{"code", fault.second}, {"message", "injected"}};
      } else {
        try {
          reply["payload"] = handler(request.at("payload"), fault.first);
        } catch (const std::exception &e) {
          reply["ok"] = false;
          reply["error"] = {{"code", "bad_request"}, {"message", e.what()}};
        }
      }
      res.set_content(reply.dump(), "application/json");
    });
  };

  const std::string handle = "ngram-fake-" + std::to_string(lm_->vocab().size());
  respond("meta", [this, handle](const json &, Fault f) {
    return json{{"schema", f == Fault::kWrongSchema ? "other-v0" : kBridgeSchema},
                {"vocab_handle", handle},
                {"vocab", lm_->vocab()},
                {"eos", lm_->eos_id()},
                {"unk", *lm_->unk_id()},
                {"relation_labels", KeywordRelationPredictor::Default().labels()},
                {"models", {{"lm", "ngram"}, {"similarity", "cosine"}}}};
  });
  respond("logprobs", [this, handle](const json &p, Fault f) {
    if (p.at("vocab_handle") != handle) throw std::invalid_argument("vocab handle");
    const auto prefix = p.at("prefix").get<std::vector<TokenId>>();
    auto lp = lm_->LogProbs(prefix);
    if (f == Fault::kShortDistribution) lp.pop_back();
    return json{{"logprobs", lp}, {"vocab_handle", f == Fault::kWrongHandle ? "other" : handle}};
  });
  respond("similarity", [](const json &p, Fault) {
    return json{{"score", CosineSimilarity().Score(p.at("a").get<std::string>(),
                                                   p.at("b").get<std::string>())}};
  });
  respond("relation", [](const json &p, Fault f) {
    if (f == Fault::kUnknownLabel) return json{{"label", "binds"}};
    return json{{"label", KeywordRelationPredictor::Default().Predict(
                              p.at("premise").get<std::string>(),
                              p.at("regulator").get<std::string>(),
                              p.at("regulated").get<std::string>())}};
  });
  respond("entity-type", [this](const json &p, Fault) {
    const auto label = typer_.TypeOf(p.at("surface").get<std::string>(),
                                     p.at("context").get<std::string>());
    return json{{"label", label ? json(*label) : json(nullptr)}};
  });
  server_->http.Get("/v1/health", [this](const httplib::Request &, httplib::Response &res) {
    std::lock_guard<std::mutex> lock(mu_);
    if (faults_.count("health")) {
      res.status = 503;
      return;
    }
    res.set_content("{\"ok\": true}", "application/json");
  });

  port_ = server_->http.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("fake bridge could not bind");
  server_->thread = std::thread([this] { server_->http.listen_after_bind(); });
  server_->http.wait_until_ready();
}

FakeBridge::~FakeBridge() {
  server_->http.stop();
  if (server_->thread.joinable()) server_->thread.join();
}

BridgeEndpoint FakeBridge::endpoint() const { return {"127.0.0.1", port_}; }

std::string FakeBridge::address() const { return "http://127.0.0.1:" + std::to_string(port_); }

void FakeBridge::SetFault(const std::string &endpoint, Fault fault, std::string code) {
  std::lock_guard<std::mutex> lock(mu_);
  faults_[endpoint] = {fault, std::move(code)};
}

void FakeBridge::ClearFaults() {
  std::lock_guard<std::mutex> lock(mu_);
  faults_.clear();
}

std::size_t FakeBridge::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requests_;
}

}  // namespace mechnli::testing
