#ifndef MECHNLI_EXTRACT_H_
#define MECHNLI_EXTRACT_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mechnli/corpus.h"

namespace mechnli {

// Lowercase conclusion phrases, matched in table order.
class PhraseTable {
 public:
  // Throws InvalidResource when empty, non-lowercase or duplicated.
  explicit PhraseTable(std::vector<std::string> phrases);

  // The 13 conclusion phrases used to filter abstracts.
  static PhraseTable Default();
  // One phrase per line; blank lines and `#` comments are skipped.
  static PhraseTable FromFile(const std::string &path);

  const std::vector<std::string> &phrases() const { return phrases_; }

 private:
  std::vector<std::string> phrases_;
};

struct ConclusionMatch {
  std::size_t sentence_index = 0;
  std::string matched_phrase;
};

// Tests only the final sentence: case-insensitive substring match against
// every phrase, reporting the first hit in table order.
std::optional<ConclusionMatch> FindConclusion(const Abstract &abstract,
                                              const PhraseTable &table);

struct PremiseBounds {
  std::size_t min = 3;
  std::size_t max = 15;
};

struct ExtractionResult {
  std::string abstract_id;
  std::size_t conclusion_index = 0;
  SupportingSet supporting;
  MarkedConclusion conclusion;
  std::string matched_phrase;
};

// Supporting set = every sentence before the conclusion. Returns nullopt when
// no phrase matches, the conclusion lacks exactly one regulator and one
// regulated mention, the pair is not a valid MarkedConclusion, or the
// supporting set length falls outside `bounds`.
std::optional<ExtractionResult> SplitAbstract(const Abstract &abstract,
                                              const PhraseTable &table,
                                              PremiseBounds bounds = {});

// Record written by the `extract` stage and read by later stages.
nlohmann::json ExtractionToJson(const ExtractionResult &result);
ExtractionResult ExtractionFromJson(const nlohmann::json &record);

}  // namespace mechnli

#endif  // MECHNLI_EXTRACT_H_
