#include "mechnli/neurologic.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "mechnli/errors.h"
#include "mechnli/text.h"

namespace mechnli {

using nlohmann::json;

Literal Literal::FromText(std::string_view text, Polarity polarity) {
  Literal lit{Tokenize(text), polarity};
  if (lit.phrase.empty()) throw InvalidConfig("empty constraint phrase");
  return lit;
}

json ConstraintSet::ToJson() const {
  json out = json::array();
  for (const auto &clause : clauses) {
    json c = json::array();
    for (const auto &lit : clause.literals) {
      c.push_back({{"phrase", Detokenize(lit.phrase)},
                   {"polarity", lit.polarity == Polarity::kMustAppear ? "must_appear"
                                                                      : "must_not_appear"}});
    }
    out.push_back(std::move(c));
  }
  return out;
}

ConstraintSet ConstraintSet::FromJson(const json &j) {
  if (!j.is_array()) throw SchemaViolation(0, "constraints must be a list of clauses");
  ConstraintSet set;
  for (const auto &c : j) {
    if (!c.is_array() || c.empty()) {
      throw SchemaViolation(0, "clause must be a non-empty list");
    }
    Clause clause;
    for (const auto &l : c) {
      if (!l.is_object() || !l.contains("phrase") || !l["phrase"].is_string()) {
        throw SchemaViolation(0, "literal needs a string `phrase`");
      }
      const std::string pol = l.value("polarity", "must_appear");
      Polarity polarity;
      if (pol == "must_appear") {
        polarity = Polarity::kMustAppear;
      } else if (pol == "must_not_appear") {
        polarity = Polarity::kMustNotAppear;
      } else {
        throw SchemaViolation(0, "unknown polarity `" + pol + "`");
      }
      Literal lit{Tokenize(l["phrase"].get<std::string>()), polarity};
      if (lit.phrase.empty()) throw SchemaViolation(0, "empty phrase");
      clause.literals.push_back(std::move(lit));
    }
    set.clauses.push_back(std::move(clause));
  }
  return set;
}

namespace {

template <typename T>
bool ContainsRun(const std::vector<T> &haystack, const std::vector<T> &needle) {
  return !needle.empty() &&
         std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
             haystack.end();
}

}  // namespace

Satisfaction CheckConstraints(const ConstraintSet &constraints,
                              const std::vector<std::string> &tokens) {
  Satisfaction out;
  for (const auto &clause : constraints.clauses) {
    bool satisfied = false;
    for (const auto &lit : clause.literals) {
      const bool present = ContainsRun(tokens, lit.phrase);
      if (lit.polarity == Polarity::kMustAppear) {
        satisfied = satisfied || present;
      } else {
        satisfied = satisfied || !present;
        out.negative_violated = out.negative_violated || present;
      }
    }
    if (satisfied) ++out.satisfied_clauses;
  }
  out.fully_satisfied = !out.negative_violated &&
                        out.satisfied_clauses == static_cast<int>(constraints.clauses.size());
  return out;
}

DecoderConfig DecoderConfig::Paper() { return DecoderConfig{}; }

DecoderConfig DecoderConfig::Desk() {
  DecoderConfig cfg;
  cfg.beam_size = 8;
  cfg.prune_factor = 8;
  return cfg;
}

void DecoderConfig::Validate() const {
  if (beam_size < 1) throw InvalidConfig("beam_size must be positive");
  if (prune_factor < 1) throw InvalidConfig("prune_factor must be positive");
  if (sat_tolerance < 0) throw InvalidConfig("sat_tolerance must be non-negative");
  if (!(beta >= 0.0)) throw InvalidConfig("beta must be non-negative");
  if (!(length_penalty >= 0.0)) throw InvalidConfig("length_penalty must be non-negative");
  if (ngram_block < 1) throw InvalidConfig("ngram_block must be positive");
  if (min_len < 0 || max_len < 1 || min_len > max_len) {
    throw InvalidConfig("need 0 <= min_len <= max_len and max_len >= 1");
  }
}

json DecoderConfig::ToJson() const {
  return {{"beam_size", beam_size},         {"prune_factor", prune_factor},
          {"sat_tolerance", sat_tolerance}, {"beta", beta},
          {"length_penalty", length_penalty}, {"ngram_block", ngram_block},
          {"min_len", min_len},             {"max_len", max_len}};
}

namespace {

constexpr TokenId kNoToken = -2;

struct CompiledLiteral {
  std::vector<TokenId> ids;  // kNoToken entries never match
  Polarity polarity;
};

struct CompiledClause {
  std::vector<CompiledLiteral> literals;
  bool has_negative = false;
};

struct Hypothesis {
  std::vector<TokenId> tokens;
  double score = 0.0;
  std::vector<char> satisfied;  // per clause
  int satisfied_count = 0;
};

struct Candidate {
  std::size_t parent;
  TokenId token;
  double score;
  double rank;
};

// True when `tokens` followed by `next` ends with `phrase`.
bool EndsWith(const std::vector<TokenId> &tokens, TokenId next,
              const std::vector<TokenId> &phrase) {
  if (phrase.empty() || phrase.back() != next) return false;
  if (phrase.size() - 1 > tokens.size()) return false;
  return std::equal(phrase.begin(), phrase.end() - 1,
                    tokens.end() - static_cast<long>(phrase.size() - 1));
}

bool RepeatsNgram(const std::vector<TokenId> &tokens, TokenId next, std::size_t n) {
  if (tokens.size() + 1 < n + 1) return false;  // need an earlier n-gram to repeat
  std::vector<TokenId> gram(tokens.end() - static_cast<long>(n - 1), tokens.end());
  gram.push_back(next);
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    if (std::equal(gram.begin(), gram.end(), tokens.begin() + static_cast<long>(i))) return true;
  }
  return false;
}

class BeamSearch {
 public:
  BeamSearch(const SequenceScorer &scorer, const ConstraintSet &constraints,
             const DecoderConfig &cfg, std::span<const TokenId> prompt)
      : scorer_(scorer), cfg_(cfg), prompt_(prompt.begin(), prompt.end()) {
    for (const auto &clause : constraints.clauses) {
      CompiledClause cc;
      for (const auto &lit : clause.literals) {
        CompiledLiteral cl{{}, lit.polarity};
        for (const auto &tok : lit.phrase) cl.ids.push_back(scorer.IdOf(tok).value_or(kNoToken));
        cc.has_negative = cc.has_negative || lit.polarity == Polarity::kMustNotAppear;
        cc.literals.push_back(std::move(cl));
      }
      clauses_.push_back(std::move(cc));
    }
    // A tolerance wider than the clause count cannot drop anything.
    tolerance_ = std::min(cfg.sat_tolerance, static_cast<int>(clauses_.size()) + 1);
  }

  std::vector<DecodeResult> Run() {
    std::vector<Hypothesis> live(1);
    live[0].satisfied.assign(clauses_.size(), 0);
    for (std::size_t c = 0; c < clauses_.size(); ++c) {
      // Must-not-appear literals are enforced as hard filters, so a clause
      // holding one is satisfied until proven otherwise.
      if (clauses_[c].has_negative) {
        live[0].satisfied[c] = 1;
        ++live[0].satisfied_count;
      }
    }
    std::vector<DecodeResult> finished;
    while (!live.empty() && !Settled(live, finished)) {
      live = Step(live, finished);
    }
    if (finished.empty()) throw NoHypothesis("no hypothesis reached eos within the length bounds");
    std::stable_sort(finished.begin(), finished.end(),
                     [](const DecodeResult &a, const DecodeResult &b) {
                       if (a.fully_satisfied != b.fully_satisfied) return a.fully_satisfied;
                       if (a.model_score != b.model_score) return a.model_score > b.model_score;
                       return a.tokens < b.tokens;
                     });
    if (finished.size() > static_cast<std::size_t>(cfg_.beam_size)) {
      finished.resize(static_cast<std::size_t>(cfg_.beam_size));
    }
    return finished;
  }

 private:
  std::vector<Hypothesis> Step(const std::vector<Hypothesis> &live,
                               std::vector<DecodeResult> &finished) {
    const TokenId eos = scorer_.eos_id();
    const auto unk = scorer_.unk_id();
    const std::size_t vocab = scorer_.vocab().size();
    std::vector<Candidate> candidates;
    std::vector<TokenId> prefix;
    for (std::size_t p = 0; p < live.size(); ++p) {
      const Hypothesis &hyp = live[p];
      prefix = prompt_;
      prefix.insert(prefix.end(), hyp.tokens.begin(), hyp.tokens.end());
      const std::vector<double> logprobs = scorer_.LogProbs(prefix);
      const int len = static_cast<int>(hyp.tokens.size());
      if (len >= cfg_.min_len) {
        finished.push_back({hyp.tokens, hyp.score + logprobs[static_cast<std::size_t>(eos)],
                            hyp.satisfied_count, FullySatisfied(hyp)});
      }
      if (len >= cfg_.max_len) continue;
      const double norm = std::pow(static_cast<double>(len + 1), cfg_.length_penalty);
      for (std::size_t v = 0; v < vocab; ++v) {
        const auto token = static_cast<TokenId>(v);
        if (token == eos || (unk && token == *unk)) continue;
        if (!std::isfinite(logprobs[v])) continue;
        if (CompletesNegative(hyp.tokens, token)) continue;
        const double score = hyp.score + logprobs[v];
        const int newly = NewlySatisfied(hyp, token);
        candidates.push_back({p, token, score, score / norm + cfg_.beta * newly});
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate &a, const Candidate &b) {
      if (a.rank != b.rank) return a.rank > b.rank;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    });

    // Prune, skipping n-gram repeats.
    std::vector<Hypothesis> pruned;
    const auto n = static_cast<std::size_t>(cfg_.ngram_block);
    for (const Candidate &c : candidates) {
      if (pruned.size() >= static_cast<std::size_t>(cfg_.prune_factor)) break;
      const Hypothesis &parent = live[c.parent];
      if (RepeatsNgram(parent.tokens, c.token, n)) continue;
      pruned.push_back(Extend(parent, c));
    }
    if (pruned.empty()) return {};

    // Tolerance window below the best satisfied count.
    int best = 0;
    for (const auto &h : pruned) best = std::max(best, h.satisfied_count);
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < pruned.size(); ++i) {
      if (pruned[i].satisfied_count >= best - tolerance_) kept.push_back(i);
    }

    // Best of each satisfaction signature first, then by rank.
    const auto beam = static_cast<std::size_t>(cfg_.beam_size);
    std::vector<char> chosen(pruned.size(), 0);
    std::map<std::vector<char>, bool> signatures;
    std::size_t count = 0;
    for (std::size_t i : kept) {
      if (count >= beam) break;
      if (signatures.emplace(pruned[i].satisfied, true).second) {
        chosen[i] = 1;
        ++count;
      }
    }
    for (std::size_t i : kept) {
      if (count >= beam) break;
      if (!chosen[i]) {
        chosen[i] = 1;
        ++count;
      }
    }
    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < pruned.size(); ++i) {
      if (chosen[i]) next.push_back(std::move(pruned[i]));
    }
    return next;
  }

  // Log-probabilities are never positive, so no descendant of a live
  // hypothesis can outscore it. Once beam_size fully satisfied results beat
  // every live score, the final list cannot change.
  bool Settled(const std::vector<Hypothesis> &live,
               const std::vector<DecodeResult> &finished) const {
    const auto beam = static_cast<std::size_t>(cfg_.beam_size);
    std::vector<double> done;
    for (const auto &r : finished) {
      if (r.fully_satisfied) done.push_back(r.model_score);
    }
    if (done.size() < beam) return false;
    std::nth_element(done.begin(), done.begin() + static_cast<long>(beam - 1), done.end(),
                     std::greater<>());
    const double floor = done[beam - 1];
    for (const auto &h : live) {
      if (h.score >= floor) return false;
    }
    return true;
  }

  bool FullySatisfied(const Hypothesis &h) const {
    return h.satisfied_count == static_cast<int>(clauses_.size());
  }

  bool CompletesNegative(const std::vector<TokenId> &tokens, TokenId next) const {
    for (const auto &clause : clauses_) {
      for (const auto &lit : clause.literals) {
        if (lit.polarity == Polarity::kMustNotAppear && EndsWith(tokens, next, lit.ids)) {
          return true;
        }
      }
    }
    return false;
  }

  bool ClauseCompletedBy(const CompiledClause &clause, const std::vector<TokenId> &tokens,
                         TokenId next) const {
    for (const auto &lit : clause.literals) {
      if (lit.polarity == Polarity::kMustAppear && EndsWith(tokens, next, lit.ids)) return true;
    }
    return false;
  }

  int NewlySatisfied(const Hypothesis &hyp, TokenId next) const {
    int newly = 0;
    for (std::size_t c = 0; c < clauses_.size(); ++c) {
      if (!hyp.satisfied[c] && ClauseCompletedBy(clauses_[c], hyp.tokens, next)) ++newly;
    }
    return newly;
  }

  Hypothesis Extend(const Hypothesis &parent, const Candidate &c) const {
    Hypothesis h;
    h.satisfied = parent.satisfied;
    h.satisfied_count = parent.satisfied_count;
    for (std::size_t i = 0; i < clauses_.size(); ++i) {
      if (!h.satisfied[i] && ClauseCompletedBy(clauses_[i], parent.tokens, c.token)) {
        h.satisfied[i] = 1;
        ++h.satisfied_count;
      }
    }
    h.tokens = parent.tokens;
    h.tokens.push_back(c.token);
    h.score = c.score;
    return h;
  }

  const SequenceScorer &scorer_;
  const DecoderConfig &cfg_;
  std::vector<TokenId> prompt_;
  std::vector<CompiledClause> clauses_;
  int tolerance_ = 0;
};

}  // namespace

std::vector<DecodeResult> Decode(const SequenceScorer &scorer, const ConstraintSet &constraints,
                                 const DecoderConfig &config, std::span<const TokenId> prompt) {
  config.Validate();
  return BeamSearch(scorer, constraints, config, prompt).Run();
}

std::string MarkedPhrase(Role role, std::string_view surface) {
  const bool reg = role == Role::kRegulator;
  std::string out(reg ? kRegulatorOpen : kRegulatedOpen);
  out.push_back(' ');
  out += surface;
  out.push_back(' ');
  out += reg ? kRegulatorClose : kRegulatedClose;
  return out;
}

namespace {

Clause Single(Role role, std::string_view surface, Polarity polarity) {
  return Clause{{Literal::FromText(MarkedPhrase(role, surface), polarity)}};
}

}  // namespace

ConstraintSet BuildSenConstraints(const MarkedConclusion &c) {
  return {{Single(Role::kRegulator, c.regulated.surface, Polarity::kMustAppear),
           Single(Role::kRegulated, c.regulator.surface, Polarity::kMustAppear)}};
}

ConstraintSet BuildSreConstraints(const MarkedConclusion &c, std::string_view replacement,
                                  Role which) {
  if (which == Role::kNone) throw DegenerateReplacement("replacement role must be a main entity");
  const std::string r = Trim(replacement);
  if (r.empty() || EqualsIgnoreCase(r, c.regulator.surface) ||
      EqualsIgnoreCase(r, c.regulated.surface)) {
    throw DegenerateReplacement("replacement `" + r + "` matches a main entity");
  }
  const std::string regulator = which == Role::kRegulator ? r : c.regulator.surface;
  const std::string regulated = which == Role::kRegulated ? r : c.regulated.surface;
  return {{Single(Role::kRegulator, regulator, Polarity::kMustAppear),
           Single(Role::kRegulated, regulated, Polarity::kMustAppear)}};
}

ConstraintSet BuildNgConstraints(const MarkedConclusion &c) {
  return {{Single(Role::kRegulator, c.regulator.surface, Polarity::kMustNotAppear),
           Single(Role::kRegulated, c.regulated.surface, Polarity::kMustNotAppear)}};
}

}  // namespace mechnli
