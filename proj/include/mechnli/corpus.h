#ifndef MECHNLI_CORPUS_H_
#define MECHNLI_CORPUS_H_

#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mechnli/text.h"

namespace mechnli {

enum class Role { kNone, kRegulator, kRegulated };

std::string_view RoleName(Role role);
// Accepts "regulator", "regulated", "none" (case-insensitive); nullopt otherwise.
std::optional<Role> ParseRole(std::string_view name);

struct Sentence {
  std::size_t index = 0;
  std::string text;

  bool operator==(const Sentence &) const = default;
};

struct EntityMention {
  std::string surface;
  std::string type_label;  // empty when untyped
  Role role = Role::kNone;
  std::size_t sentence_index = 0;
  CharSpan char_span;  // Unicode scalar values within the sentence text

  bool operator==(const EntityMention &) const = default;
};

struct Abstract {
  std::string id;
  std::vector<Sentence> sentences;
  std::vector<EntityMention> mentions;
};

// A conclusion sentence carrying exactly one regulator and one regulated span.
struct MarkedConclusion {
  std::string plain_text;
  EntityMention regulator;
  EntityMention regulated;

  const EntityMention &mention(Role role) const {
    return role == Role::kRegulator ? regulator : regulated;
  }
  EntityMention &mention(Role role) {
    return role == Role::kRegulator ? regulator : regulated;
  }

  bool operator==(const MarkedConclusion &) const = default;
};

struct SupportingSet {
  std::vector<Sentence> sentences;
  std::vector<EntityMention> mentions;

  // Sentences joined by single spaces.
  std::string PremiseText() const;
};

// Parses `<re> X <er>` / `<el> Y <le>` marked text. The regulator may also be
// closed by a second `<re>`. Throws MalformedMarkers or InvalidConclusion.
MarkedConclusion ParseMarked(std::string_view text);

// Canonical rendering; ParseMarked(RenderMarked(c)) == c for valid c with
// empty type labels and sentence index 0.
std::string RenderMarked(const MarkedConclusion &conclusion);

// Throws InvalidConclusion when spans are out of range, overlap, disagree with
// their surfaces, or name the same entity twice.
void ValidateConclusion(const MarkedConclusion &conclusion);

// Throws SchemaViolation(0, reason) when a type invariant fails.
void ValidateAbstract(const Abstract &abstract);

// Input record: {id, sentences: [string], entities: [{sentence, start, end,
// type, role}]}. Offsets are Unicode scalar values. Throws SchemaViolation.
Abstract AbstractFromJson(const nlohmann::json &record);
nlohmann::json AbstractToJson(const Abstract &abstract);

nlohmann::json MentionToJson(const EntityMention &mention);
EntityMention MentionFromJson(const nlohmann::json &j);

struct LoadOptions {
  // Skip and report bad records instead of failing on the first one.
  bool lenient = false;
};

struct LoadReport {
  std::size_t line = 0;
  std::string reason;
};

// Streams validated abstracts from a line-delimited file in file order.
class CorpusReader {
 public:
  CorpusReader(const std::string &path, LoadOptions options);

  // Next valid abstract, or nullopt at end of file. In strict mode a bad
  // record throws SchemaViolation.
  std::optional<Abstract> Next();

  const std::vector<LoadReport> &reports() const { return reports_; }

 private:
  std::ifstream in_;
  LoadOptions options_;
  std::size_t line_ = 0;
  std::vector<LoadReport> reports_;
};

std::vector<Abstract> LoadCorpus(const std::string &path, LoadOptions options,
                                 std::vector<LoadReport> *reports = nullptr);

}  // namespace mechnli

#endif  // MECHNLI_CORPUS_H_
