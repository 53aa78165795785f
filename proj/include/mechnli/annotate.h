#ifndef MECHNLI_ANNOTATE_H_
#define MECHNLI_ANNOTATE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mechnli/corpus.h"

namespace mechnli {

// Entity typing used to find same-type swap candidates.
class EntityTyper {
 public:
  virtual ~EntityTyper() = default;
  // Deterministic per (surface, context). nullopt means untyped.
  virtual std::optional<std::string> TypeOf(std::string_view surface,
                                            std::string_view context) const = 0;
};

// Lexicon lookup on the lowercased surface, with an optional label for
// surfaces the lexicon does not know.
class LexiconTyper : public EntityTyper {
 public:
  explicit LexiconTyper(std::optional<std::string> default_label = std::nullopt)
      : default_label_(std::move(default_label)) {}

  // `surface<TAB>type_label` per line.
  static LexiconTyper FromFile(const std::string &path,
                               std::optional<std::string> default_label = std::nullopt);

  // Throws InvalidResource if the surface already has a different label.
  void Add(std::string_view surface, std::string_view label);

  std::optional<std::string> TypeOf(std::string_view surface,
                                    std::string_view context) const override;

 private:
  std::map<std::string, std::string> labels_;
  std::optional<std::string> default_label_;
};

// Corpus-level typed surfaces, used as the out-of-context swap source.
class EntityPool {
 public:
  // Throws InvalidResource on an empty surface or a conflicting label.
  void Add(std::string_view surface, std::string_view label);

  // `surface<TAB>type_label` per line.
  static EntityPool FromFile(const std::string &path);
  // Every typed mention of every abstract, in corpus order.
  static EntityPool FromCorpus(const std::vector<Abstract> &corpus,
                               const EntityTyper &typer);

  // Surfaces of a label in insertion order.
  const std::vector<std::string> &SurfacesOf(const std::string &label) const;
  std::size_t size() const { return label_of_.size(); }
  bool empty() const { return label_of_.empty(); }

  std::string ToTsv() const;

 private:
  std::map<std::string, std::vector<std::string>> by_type_;
  std::map<std::string, std::string> label_of_;  // lowercased surface -> label
  std::vector<std::string> order_;
};

// Type of a mention: its own label if present, otherwise the typer's answer.
std::optional<std::string> MentionType(const EntityMention &mention,
                                       std::string_view context,
                                       const EntityTyper &typer);

// Distinct supporting-set surfaces (first-occurrence order) sharing the
// target's type and differing case-insensitively from both main entities.
// Throws UntypedEntity when the target cannot be typed.
std::vector<std::string> InTextCandidates(const MarkedConclusion &conclusion,
                                          const SupportingSet &supporting,
                                          Role target, const EntityTyper &typer);

// Pool surfaces of the target's type that occur nowhere in the supporting set
// or the conclusion. Throws UntypedEntity.
std::vector<std::string> OutOfTextCandidates(const MarkedConclusion &conclusion,
                                             const SupportingSet &supporting,
                                             const EntityPool &pool, Role target,
                                             const EntityTyper &typer);

std::optional<std::string> SameTypeInText(const MarkedConclusion &conclusion,
                                          const SupportingSet &supporting,
                                          Role target, const EntityTyper &typer,
                                          std::uint64_t seed);

std::optional<std::string> SameTypeOutOfText(const MarkedConclusion &conclusion,
                                             const SupportingSet &supporting,
                                             const EntityPool &pool, Role target,
                                             const EntityTyper &typer,
                                             std::uint64_t seed);

}  // namespace mechnli

#endif  // MECHNLI_ANNOTATE_H_
