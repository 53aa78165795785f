#ifndef MECHNLI_GENFILTER_H_
#define MECHNLI_GENFILTER_H_

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mechnli/corpus.h"
#include "mechnli/neurologic.h"

namespace mechnli {

// Text similarity in [0,1]; symmetric.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual double Score(std::string_view a, std::string_view b) const = 0;
};

// Term-frequency cosine over the bundled tokenization, marker tags ignored.
// Two empty texts score 1, one empty text scores 0.
class CosineSimilarity : public SimilarityScorer {
 public:
  double Score(std::string_view a, std::string_view b) const override;
};

// Relation between the two main entities as expressed by a text.
class RelationPredictor {
 public:
  virtual ~RelationPredictor() = default;
  virtual std::string Predict(std::string_view text, std::string_view regulator,
                              std::string_view regulated) const = 0;
  virtual const std::vector<std::string> &labels() const = 0;
};

// First relation keyword in the text decides the label; a preceding "not",
// "no" or "cannot" (within two tokens) flips activates and inhibits. Texts
// without a keyword are "other".
class KeywordRelationPredictor : public RelationPredictor {
 public:
  static constexpr std::string_view kActivates = "activates";
  static constexpr std::string_view kInhibits = "inhibits";
  static constexpr std::string_view kOther = "other";

  // Throws InvalidResource on an empty keyword or a conflicting label.
  void Add(std::string_view keyword, std::string_view label);
  static KeywordRelationPredictor Default();
  // `keyword<TAB>label` per line.
  static KeywordRelationPredictor FromFile(const std::string &path);

  std::string Predict(std::string_view text, std::string_view regulator,
                      std::string_view regulated) const override;
  const std::vector<std::string> &labels() const override { return labels_; }
  std::string ToTsv() const;

 private:
  std::vector<std::pair<std::string, std::string>> keywords_;
  std::vector<std::string> labels_{std::string(kOther)};
};

struct FilterConfig {
  double lambda = 0.45;  // quality ceiling for GEN
  double delta = 0.9;    // similarity ceiling for GEN-ND SRE

  // Throws InvalidConfig unless both lie in [0,1].
  void Validate() const;
};

// Accepts a generated hypothesis as a GEN negative iff
// quality(candidate, gold) < lambda and the relation read from the candidate
// differs from the one read from the gold conclusion. Texts are compared with
// markers stripped. Throws MissingEntities when the candidate lacks either
// main entity surface.
bool FilterGen(std::string_view candidate, const MarkedConclusion &gold,
               const SimilarityScorer &quality, const RelationPredictor &relation,
               const FilterConfig &config);

enum class GndScheme { kSen, kSre, kNg };

std::string_view GndSchemeName(GndScheme scheme);
std::optional<GndScheme> ParseGndScheme(std::string_view name);

// SEN: constraints fully satisfied. SRE: fully satisfied and
// similarity(candidate, gold) < delta. NG: no forbidden phrase present.
// Throws SchemeMismatch when the constraint polarities do not fit the scheme.
bool FilterGnd(std::string_view candidate, const MarkedConclusion &gold, GndScheme scheme,
               const ConstraintSet &constraints, const SimilarityScorer &similarity,
               const FilterConfig &config);

}  // namespace mechnli

#endif  // MECHNLI_GENFILTER_H_
