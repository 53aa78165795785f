#ifndef MECHNLI_NEUROLOGIC_H_
#define MECHNLI_NEUROLOGIC_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mechnli/corpus.h"
#include "mechnli/lm.h"

namespace mechnli {

enum class Polarity { kMustAppear, kMustNotAppear };

// A phrase (bundled tokenization) that must or must not occur contiguously.
struct Literal {
  std::vector<std::string> phrase;
  Polarity polarity = Polarity::kMustAppear;

  static Literal FromText(std::string_view text, Polarity polarity);
  bool operator==(const Literal &) const = default;
};

// Disjunction of literals.
struct Clause {
  std::vector<Literal> literals;
  bool operator==(const Clause &) const = default;
};

// Conjunction of clauses (CNF).
struct ConstraintSet {
  std::vector<Clause> clauses;

  bool empty() const { return clauses.empty(); }
  bool operator==(const ConstraintSet &) const = default;

  // [[{"phrase": "...", "polarity": "must_appear"|"must_not_appear"}, ...], ...]
  nlohmann::json ToJson() const;
  // Throws SchemaViolation.
  static ConstraintSet FromJson(const nlohmann::json &j);
};

struct Satisfaction {
  int satisfied_clauses = 0;
  bool negative_violated = false;
  bool fully_satisfied = false;
};

// Checks a token sequence against the constraints. A clause counts as
// satisfied when one of its must-appear phrases occurs or one of its
// must-not-appear phrases is absent; any present must-not-appear phrase
// disqualifies full satisfaction.
Satisfaction CheckConstraints(const ConstraintSet &constraints,
                              const std::vector<std::string> &tokens);

// Beam-search hyperparameters.
struct DecoderConfig {
  int beam_size = 50;
  int prune_factor = 50;   // candidates kept after ranking
  int sat_tolerance = 2;   // window below the best satisfied-clause count
  double beta = 2.0;       // reward per newly satisfied clause
  double length_penalty = 0.1;
  int ngram_block = 10;    // n-grams of this length occur at most once
  int min_len = 15;
  int max_len = 256;

  static DecoderConfig Paper();
  // Same as Paper() with beam_size/prune_factor shrunk to 8/8.
  static DecoderConfig Desk();

  // Throws InvalidConfig.
  void Validate() const;
  nlohmann::json ToJson() const;
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // generated tokens, eos excluded
  double model_score = 0.0;     // log-probability including eos
  int satisfied_clauses = 0;
  bool fully_satisfied = false;
};

// Constrained beam search. Each step:
//  1. extensions completing a must-not-appear phrase are discarded;
//  2. candidates are ranked by score / len^length_penalty plus
//     beta * (clauses newly satisfied by this token) and cut to prune_factor
//     (extensions repeating an n-gram of length ngram_block are skipped);
//  3. candidates more than sat_tolerance clauses below the best are dropped;
//  4. the best candidate of every satisfied-clause signature is kept, then
//     the remaining beam_size slots are filled by rank.
// Hypotheses finish on eos with length in [min_len, max_len]. Results are
// sorted by (fully_satisfied desc, model_score desc) and capped at
// beam_size. Throws NoHypothesis when nothing finishes.
std::vector<DecodeResult> Decode(const SequenceScorer &scorer,
                                 const ConstraintSet &constraints,
                                 const DecoderConfig &config,
                                 std::span<const TokenId> prompt = {});

// `<re> surface <er>` or `<el> surface <le>`.
std::string MarkedPhrase(Role role, std::string_view surface);

// Names swapped: [[<re> regulated <er>], [<el> regulator <le>]].
ConstraintSet BuildSenConstraints(const MarkedConclusion &conclusion);
// Original roles with one surface replaced. Throws DegenerateReplacement when
// the replacement matches either main surface.
ConstraintSet BuildSreConstraints(const MarkedConclusion &conclusion,
                                  std::string_view replacement, Role which);
// Forbids both original role-marked entity phrases.
ConstraintSet BuildNgConstraints(const MarkedConclusion &conclusion);

}  // namespace mechnli

#endif  // MECHNLI_NEUROLOGIC_H_
