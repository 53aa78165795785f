#include "mechnli/extract.h"

#include <set>

#include "mechnli/errors.h"

namespace mechnli {

using nlohmann::json;

PhraseTable::PhraseTable(std::vector<std::string> phrases) : phrases_(std::move(phrases)) {
  if (phrases_.empty()) throw InvalidResource("phrase table is empty");
  std::set<std::string> seen;
  for (auto &p : phrases_) {
    p = Trim(p);
    if (p.empty()) throw InvalidResource("empty phrase");
    if (AsciiLower(p) != p) throw InvalidResource("phrase not lowercase: " + p);
    if (!seen.insert(p).second) throw InvalidResource("duplicate phrase: " + p);
  }
}

PhraseTable PhraseTable::Default() {
  return PhraseTable({
      "we conclude that",
      "it is concluded that",
      "it was concluded that",
      "we concluded that",
      "we have concluded that",
      "it has been concluded that",
      "it may be concluded that",
      "it was therefore concluded that",
      "we therefore conclude that",
      "we conclude",
      "we thus conclude that",
      "it is therefore concluded that",
      "we further conclude that",
  });
}

PhraseTable PhraseTable::FromFile(const std::string &path) {
  std::vector<std::string> phrases;
  for (const auto &line : SplitLines(ReadFile(path))) {
    std::string p = Trim(line);
    if (p.empty() || p[0] == '#') continue;
    phrases.push_back(std::move(p));
  }
  return PhraseTable(std::move(phrases));
}

std::optional<ConclusionMatch> FindConclusion(const Abstract &abstract,
                                              const PhraseTable &table) {
  if (abstract.sentences.empty()) return std::nullopt;
  const std::size_t last = abstract.sentences.size() - 1;
  const std::string lowered = AsciiLower(abstract.sentences[last].text);
  for (const auto &phrase : table.phrases()) {
    if (lowered.find(phrase) != std::string::npos) return ConclusionMatch{last, phrase};
  }
  return std::nullopt;
}

std::optional<ExtractionResult> SplitAbstract(const Abstract &abstract,
                                              const PhraseTable &table,
                                              PremiseBounds bounds) {
  auto match = FindConclusion(abstract, table);
  if (!match) return std::nullopt;
  const std::size_t idx = match->sentence_index;
  if (idx < bounds.min || idx > bounds.max) return std::nullopt;

  const EntityMention *regulator = nullptr;
  const EntityMention *regulated = nullptr;
  int regulators = 0;
  int regulateds = 0;
  for (const auto &m : abstract.mentions) {
    if (m.sentence_index != idx) continue;
    if (m.role == Role::kRegulator) {
      regulator = &m;
      ++regulators;
    } else if (m.role == Role::kRegulated) {
      regulated = &m;
      ++regulateds;
    }
  }
  if (regulators != 1 || regulateds != 1) return std::nullopt;

  ExtractionResult result;
  result.abstract_id = abstract.id;
  result.conclusion_index = idx;
  result.matched_phrase = match->matched_phrase;
  result.conclusion.plain_text = abstract.sentences[idx].text;
  result.conclusion.regulator = *regulator;
  result.conclusion.regulated = *regulated;
  try {
    ValidateConclusion(result.conclusion);
  } catch (const InvalidConclusion &) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i < idx; ++i) {
    result.supporting.sentences.push_back(abstract.sentences[i]);
  }
  for (const auto &m : abstract.mentions) {
    if (m.sentence_index >= idx) continue;
    EntityMention copy = m;
    copy.role = Role::kNone;
    result.supporting.mentions.push_back(std::move(copy));
  }
  return result;
}

json ExtractionToJson(const ExtractionResult &r) {
  json sentences = json::array();
  for (const auto &s : r.supporting.sentences) sentences.push_back(s.text);
  json mentions = json::array();
  for (const auto &m : r.supporting.mentions) mentions.push_back(MentionToJson(m));
  json conclusion = {{"text", r.conclusion.plain_text},
                     {"regulator", MentionToJson(r.conclusion.regulator)},
                     {"regulated", MentionToJson(r.conclusion.regulated)}};
  return {{"group_id", r.abstract_id},
          {"source_abstract_id", r.abstract_id},
          {"conclusion_index", r.conclusion_index},
          {"matched_phrase", r.matched_phrase},
          {"premise", r.supporting.PremiseText()},
          {"premise_sentences", sentences},
          {"premise_entities", mentions},
          {"hypothesis", RenderMarked(r.conclusion)},
          {"conclusion", conclusion}};
}

ExtractionResult ExtractionFromJson(const json &record) {
  try {
    ExtractionResult r;
    r.abstract_id = record.at("source_abstract_id").get<std::string>();
    r.conclusion_index = record.at("conclusion_index").get<std::size_t>();
    r.matched_phrase = record.at("matched_phrase").get<std::string>();
    for (const auto &s : record.at("premise_sentences")) {
      r.supporting.sentences.push_back({r.supporting.sentences.size(), s.get<std::string>()});
    }
    for (const auto &m : record.at("premise_entities")) {
      r.supporting.mentions.push_back(MentionFromJson(m));
    }
    const json &c = record.at("conclusion");
    r.conclusion.plain_text = c.at("text").get<std::string>();
    r.conclusion.regulator = MentionFromJson(c.at("regulator"));
    r.conclusion.regulated = MentionFromJson(c.at("regulated"));
    try {
      ValidateConclusion(r.conclusion);
    } catch (const InvalidConclusion &e) {
      throw SchemaViolation(0, e.what());
    }
    return r;
  } catch (const json::exception &e) {
    throw SchemaViolation(0, std::string("bad extraction record: ") + e.what());
  }
}

}  // namespace mechnli
