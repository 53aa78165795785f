#ifndef MECHNLI_PERTURB_H_
#define MECHNLI_PERTURB_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mechnli/annotate.h"
#include "mechnli/corpus.h"

namespace mechnli {

// The nine negative-example categories. GEN and GEN_ND come from the
// generation pipeline, the rest from the rules below.
enum class PerturbationKind { kSEN, kSEP, kSRE, kSREO, kVNeg, kSN, kLPR, kGEN, kGEN_ND };

inline constexpr PerturbationKind kAllKinds[] = {
    PerturbationKind::kSEN,  PerturbationKind::kSEP, PerturbationKind::kSRE,
    PerturbationKind::kSREO, PerturbationKind::kVNeg, PerturbationKind::kSN,
    PerturbationKind::kLPR,  PerturbationKind::kGEN, PerturbationKind::kGEN_ND};

inline constexpr PerturbationKind kRuleKinds[] = {
    PerturbationKind::kSEN,  PerturbationKind::kSEP, PerturbationKind::kSRE,
    PerturbationKind::kSREO, PerturbationKind::kVNeg, PerturbationKind::kSN,
    PerturbationKind::kLPR};

using KindSet = std::set<PerturbationKind>;

std::string_view KindName(PerturbationKind kind);
std::optional<PerturbationKind> ParseKind(std::string_view name);
bool IsRuleBased(PerturbationKind kind);
// Comma-separated kind names; throws InvalidConfig on an unknown name.
KindSet ParseKindList(std::string_view list);

// Symmetric antonym map between interaction terms.
class AntonymLexicon {
 public:
  AntonymLexicon() = default;
  // Adds term -> antonym and antonym -> term. Throws InvalidResource on
  // conflicts or self-pairs.
  void AddPair(std::string_view term, std::string_view antonym);

  static AntonymLexicon Default();
  // `term<TAB>replacement` per line; the inverse is implied.
  static AntonymLexicon FromFile(const std::string &path);

  std::optional<std::string> Lookup(std::string_view lowered_term) const;
  // Terms sorted longest first (ties alphabetical).
  const std::vector<std::string> &terms() const { return terms_; }
  std::string ToTsv() const;

 private:
  std::map<std::string, std::string> pairs_;
  std::vector<std::string> terms_;
};

struct NegationRule {
  std::string pattern;      // lowercase word sequence
  std::string replacement;  // polarity-flipped form
};

// Auxiliary and do-support polarity rules. Every replacement is itself a
// pattern, so each flip can be undone.
class NegationRules {
 public:
  // Throws InvalidResource on an empty or duplicated pattern. Missing
  // inverses are added.
  explicit NegationRules(std::vector<NegationRule> rules);

  static NegationRules Default();
  // `pattern<TAB>replacement` per line.
  static NegationRules FromFile(const std::string &path);

  // Tried longest pattern first, file order among equals.
  const std::vector<NegationRule> &rules() const { return rules_; }
  std::string ToTsv() const;

 private:
  std::vector<NegationRule> rules_;
};

// Surfaces swap, markers stay put.
MarkedConclusion ApplySen(const MarkedConclusion &conclusion);
// Each entity moves with its marker pair to the other's position.
MarkedConclusion ApplySep(const MarkedConclusion &conclusion);

// Main entity picked uniformly among those with at least one candidate, then
// a candidate uniformly. Throws UntypedEntity when neither entity has a type.
std::optional<MarkedConclusion> ApplySre(const MarkedConclusion &conclusion,
                                         const SupportingSet &supporting,
                                         const EntityTyper &typer, std::uint64_t seed);
std::optional<MarkedConclusion> ApplySreo(const MarkedConclusion &conclusion,
                                          const SupportingSet &supporting,
                                          const EntityPool &pool,
                                          const EntityTyper &typer, std::uint64_t seed);

std::optional<MarkedConclusion> ApplyVneg(const MarkedConclusion &conclusion,
                                          const NegationRules &rules, std::uint64_t seed);

std::optional<MarkedConclusion> ApplySn(const MarkedConclusion &conclusion,
                                        const SupportingSet &supporting,
                                        std::uint64_t seed);

std::optional<MarkedConclusion> ApplyLpr(const MarkedConclusion &conclusion,
                                         const AntonymLexicon &lexicon,
                                         std::uint64_t seed);

// A numeral found in text: integers, decimals, signed values. Signs and
// digits glued to a preceding word (e.g. `RAB-16`, `H2O`) are not numerals.
struct NumberToken {
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
  std::string text;
  double value = 0.0;
};
std::vector<NumberToken> FindNumbers(std::string_view text);

// Shared resources for a perturbation pass. Null members disable the kinds
// that need them.
struct PerturbResources {
  const EntityTyper *typer = nullptr;
  const EntityPool *pool = nullptr;
  const NegationRules *negation = nullptr;
  const AntonymLexicon *antonyms = nullptr;
  // Generation kinds accepted by the generation filters for this instance.
  KindSet generation_accepted;
};

// Runs every requested rule kind; each kind gets its own seed derived from
// `seed`, so the pass is order independent. Missing kinds were inapplicable.
std::map<PerturbationKind, MarkedConclusion> PerturbAll(
    const MarkedConclusion &conclusion, const SupportingSet &supporting,
    const PerturbResources &resources, std::uint64_t seed, const KindSet &kinds);

// SEN and SEP always; other rule kinds iff they produce an output; generation
// kinds iff accepted.
KindSet Applicability(const MarkedConclusion &conclusion,
                      const SupportingSet &supporting,
                      const PerturbResources &resources, std::uint64_t seed);

std::uint64_t KindSeed(std::uint64_t seed, PerturbationKind kind);

}  // namespace mechnli

#endif  // MECHNLI_PERTURB_H_
