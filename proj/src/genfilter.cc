#include "mechnli/genfilter.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "mechnli/errors.h"
#include "mechnli/text.h"

namespace mechnli {

namespace {

std::map<std::string, double> TermFrequencies(std::string_view text) {
  std::map<std::string, double> tf;
  for (auto &tok : Tokenize(text)) {
    if (!IsMarkerTag(tok)) tf[std::move(tok)] += 1.0;
  }
  return tf;
}

}  // namespace

double CosineSimilarity::Score(std::string_view a, std::string_view b) const {
  const auto ta = TermFrequencies(a);
  const auto tb = TermFrequencies(b);
  if (ta.empty() || tb.empty()) return ta.empty() && tb.empty() ? 1.0 : 0.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto &[w, c] : ta) {
    na += c * c;
    auto it = tb.find(w);
    if (it != tb.end()) dot += c * it->second;
  }
  for (const auto &[w, c] : tb) nb += c * c;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

void KeywordRelationPredictor::Add(std::string_view keyword, std::string_view label) {
  const std::string k = AsciiLower(Trim(keyword));
  const std::string l = Trim(label);
  if (k.empty() || l.empty()) throw InvalidResource("empty relation keyword or label");
  for (const auto &[kw, lab] : keywords_) {
    if (kw == k) {
      if (lab != l) throw InvalidResource("keyword `" + k + "` has two labels");
      return;
    }
  }
  keywords_.emplace_back(k, l);
  if (std::find(labels_.begin(), labels_.end(), l) == labels_.end()) labels_.push_back(l);
}

KeywordRelationPredictor KeywordRelationPredictor::Default() {
  KeywordRelationPredictor p;
  for (const char *k :
       {"activate", "activates", "activated", "activating", "activation", "induce", "induces",
        "induced", "induction", "promote", "promotes", "promoted", "promotion", "enhance",
        "enhances", "enhanced", "enhancement", "increase", "increases", "increased",
        "stimulate", "stimulates", "stimulated", "stimulation", "upregulate", "upregulates",
        "upregulated", "upregulation", "trigger", "triggers", "triggered"}) {
    p.Add(k, kActivates);
  }
  for (const char *k :
       {"inhibit", "inhibits", "inhibited", "inhibiting", "inhibition", "suppress",
        "suppresses", "suppressed", "suppression", "reduce", "reduces", "reduced", "reduction",
        "decrease", "decreases", "decreased", "block", "blocks", "blocked", "downregulate",
        "downregulates", "downregulated", "downregulation", "attenuate", "attenuates",
        "attenuated", "prevent", "prevents", "prevented", "repress", "represses", "repressed",
        "impair", "impairs", "impaired"}) {
    p.Add(k, kInhibits);
  }
  return p;
}

KeywordRelationPredictor KeywordRelationPredictor::FromFile(const std::string &path) {
  KeywordRelationPredictor p;
  for (const auto &line : SplitLines(ReadFile(path))) {
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string::npos) {
      throw InvalidResource("relation lexicon line without a tab: `" + t + "`");
    }
    p.Add(t.substr(0, tab), t.substr(tab + 1));
  }
  return p;
}

std::string KeywordRelationPredictor::ToTsv() const {
  std::string out;
  for (const auto &[k, l] : keywords_) out += k + "\t" + l + "\n";
  return out;
}

std::string KeywordRelationPredictor::Predict(std::string_view text, std::string_view,
                                              std::string_view) const {
  const auto tokens = Tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = std::find_if(keywords_.begin(), keywords_.end(),
                           [&](const auto &kw) { return kw.first == tokens[i]; });
    if (it == keywords_.end()) continue;
    bool negated = false;
    for (std::size_t back = 1; back <= 2 && back <= i; ++back) {
      const auto &prev = tokens[i - back];
      negated = negated || prev == "not" || prev == "no" || prev == "cannot";
    }
    if (negated && it->second == kActivates) return std::string(kInhibits);
    if (negated && it->second == kInhibits) return std::string(kActivates);
    return it->second;
  }
  return std::string(kOther);
}

void FilterConfig::Validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidConfig("lambda must lie in [0,1]");
  if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidConfig("delta must lie in [0,1]");
}

bool FilterGen(std::string_view candidate, const MarkedConclusion &gold,
               const SimilarityScorer &quality, const RelationPredictor &relation,
               const FilterConfig &config) {
  const std::string plain = StripMarkers(candidate);
  if (!ContainsIgnoreCase(plain, gold.regulator.surface) ||
      !ContainsIgnoreCase(plain, gold.regulated.surface)) {
    throw MissingEntities("candidate lacks a main entity");
  }
  if (!(quality.Score(plain, gold.plain_text) < config.lambda)) return false;
  const auto &reg = gold.regulator.surface;
  const auto &regd = gold.regulated.surface;
  return relation.Predict(plain, reg, regd) != relation.Predict(gold.plain_text, reg, regd);
}

std::string_view GndSchemeName(GndScheme scheme) {
  switch (scheme) {
    case GndScheme::kSen: return "SEN";
    case GndScheme::kSre: return "SRE";
    case GndScheme::kNg: return "NG";
  }
  return "";
}

std::optional<GndScheme> ParseGndScheme(std::string_view name) {
  for (GndScheme s : {GndScheme::kSen, GndScheme::kSre, GndScheme::kNg}) {
    if (EqualsIgnoreCase(name, GndSchemeName(s))) return s;
  }
  return std::nullopt;
}

bool FilterGnd(std::string_view candidate, const MarkedConclusion &gold, GndScheme scheme,
               const ConstraintSet &constraints, const SimilarityScorer &similarity,
               const FilterConfig &config) {
  const Polarity expected =
      scheme == GndScheme::kNg ? Polarity::kMustNotAppear : Polarity::kMustAppear;
  if (constraints.empty()) throw SchemeMismatch("empty constraint set");
  for (const auto &clause : constraints.clauses) {
    for (const auto &lit : clause.literals) {
      if (lit.polarity != expected) {
        throw SchemeMismatch(std::string("constraint polarity does not fit scheme ") +
                             std::string(GndSchemeName(scheme)));
      }
    }
  }
  const Satisfaction sat = CheckConstraints(constraints, Tokenize(candidate));
  switch (scheme) {
    case GndScheme::kSen:
    case GndScheme::kNg:
      return sat.fully_satisfied;
    case GndScheme::kSre:
      return sat.fully_satisfied &&
             similarity.Score(StripMarkers(candidate), gold.plain_text) < config.delta;
  }
  return false;
}

}  // namespace mechnli
