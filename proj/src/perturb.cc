#include "mechnli/perturb.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>

#include "mechnli/errors.h"
#include "mechnli/random.h"

namespace mechnli {

std::string_view KindName(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kSEN: return "SEN";
    case PerturbationKind::kSEP: return "SEP";
    case PerturbationKind::kSRE: return "SRE";
    case PerturbationKind::kSREO: return "SREO";
    case PerturbationKind::kVNeg: return "VNeg";
    case PerturbationKind::kSN: return "SN";
    case PerturbationKind::kLPR: return "LPR";
    case PerturbationKind::kGEN: return "GEN";
    case PerturbationKind::kGEN_ND: return "GEN-ND";
  }
  return "?";
}

std::optional<PerturbationKind> ParseKind(std::string_view name) {
  const std::string lower = AsciiLower(Trim(name));
  for (PerturbationKind k : kAllKinds) {
    if (AsciiLower(KindName(k)) == lower) return k;
  }
  if (lower == "gen_nd") return PerturbationKind::kGEN_ND;
  return std::nullopt;
}

bool IsRuleBased(PerturbationKind kind) {
  return kind != PerturbationKind::kGEN && kind != PerturbationKind::kGEN_ND;
}

KindSet ParseKindList(std::string_view list) {
  KindSet out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t comma = list.find(',', start);
    if (comma == std::string_view::npos) comma = list.size();
    const std::string item = Trim(list.substr(start, comma - start));
    if (!item.empty()) {
      auto kind = ParseKind(item);
      if (!kind) throw InvalidConfig("unknown perturbation kind `" + item + "`");
      out.insert(*kind);
    }
    start = comma + 1;
  }
  return out;
}

std::uint64_t KindSeed(std::uint64_t seed, PerturbationKind kind) {
  return MixSeed(seed, KindName(kind));
}

// ---------------------------------------------------------------------------
// Resources

namespace {

template <typename Fn>
void ForEachTabPair(const std::string &path, Fn fn) {
  std::size_t line_no = 0;
  for (const auto &line : SplitLines(ReadFile(path))) {
    ++line_no;
    if (Trim(line).empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InvalidResource(path + ":" + std::to_string(line_no) + ": expected a TAB");
    }
    fn(Trim(line.substr(0, tab)), Trim(line.substr(tab + 1)));
  }
}

bool LongerFirst(const std::string &a, const std::string &b) {
  return a.size() != b.size() ? a.size() > b.size() : a < b;
}

}  // namespace

void AntonymLexicon::AddPair(std::string_view term, std::string_view antonym) {
  const std::string a = AsciiLower(Trim(term));
  const std::string b = AsciiLower(Trim(antonym));
  if (a.empty() || b.empty()) throw InvalidResource("empty antonym entry");
  if (a == b) throw InvalidResource("term is its own antonym: " + a);
  for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
    auto it = pairs_.find(x);
    if (it != pairs_.end() && it->second != y) {
      throw InvalidResource("conflicting antonyms for " + x);
    }
  }
  if (pairs_.emplace(a, b).second) terms_.push_back(a);
  if (pairs_.emplace(b, a).second) terms_.push_back(b);
  std::stable_sort(terms_.begin(), terms_.end(), LongerFirst);
}

AntonymLexicon AntonymLexicon::Default() {
  static constexpr std::array<std::array<const char *, 2>, 29> kPairs = {{
      {"inhibition", "promotion"},   {"inhibit", "promote"},
      {"inhibits", "promotes"},      {"inhibited", "promoted"},
      {"inhibiting", "promoting"},   {"increase", "decrease"},
      {"increases", "decreases"},    {"increased", "decreased"},
      {"increasing", "decreasing"},  {"activate", "suppress"},
      {"activates", "suppresses"},   {"activated", "suppressed"},
      {"activating", "suppressing"}, {"activation", "suppression"},
      {"upregulate", "downregulate"}, {"upregulates", "downregulates"},
      {"upregulated", "downregulated"}, {"upregulating", "downregulating"},
      {"upregulation", "downregulation"}, {"up-regulated", "down-regulated"},
      {"up-regulation", "down-regulation"}, {"enhance", "reduce"},
      {"enhances", "reduces"},       {"enhanced", "reduced"},
      {"enhancing", "reducing"},     {"enhancement", "reduction"},
      {"up-regulate", "down-regulate"}, {"up-regulates", "down-regulates"},
      {"up-regulating", "down-regulating"},
  }};
  AntonymLexicon lex;
  for (const auto &p : kPairs) lex.AddPair(p[0], p[1]);
  return lex;
}

AntonymLexicon AntonymLexicon::FromFile(const std::string &path) {
  AntonymLexicon lex;
  ForEachTabPair(path, [&](const std::string &a, const std::string &b) { lex.AddPair(a, b); });
  return lex;
}

std::optional<std::string> AntonymLexicon::Lookup(std::string_view lowered_term) const {
  auto it = pairs_.find(std::string(lowered_term));
  if (it == pairs_.end()) return std::nullopt;
  return it->second;
}

std::string AntonymLexicon::ToTsv() const {
  std::vector<std::string> keys;
  for (const auto &[a, b] : pairs_) {
    if (a < b) keys.push_back(a);
  }
  std::string out;
  for (const auto &a : keys) out += a + "\t" + pairs_.at(a) + "\n";
  return out;
}

NegationRules::NegationRules(std::vector<NegationRule> rules) {
  std::map<std::string, std::string> seen;
  for (auto &r : rules) {
    r.pattern = AsciiLower(Trim(r.pattern));
    r.replacement = AsciiLower(Trim(r.replacement));
    if (r.pattern.empty() || r.replacement.empty()) {
      throw InvalidResource("empty negation rule");
    }
    if (r.pattern == r.replacement) throw InvalidResource("vacuous rule: " + r.pattern);
    if (!seen.emplace(r.pattern, r.replacement).second) {
      throw InvalidResource("duplicate negation pattern: " + r.pattern);
    }
    rules_.push_back(r);
  }
  for (std::size_t i = 0, n = rules_.size(); i < n; ++i) {
    const NegationRule r = rules_[i];
    if (!seen.count(r.replacement)) {
      seen.emplace(r.replacement, r.pattern);
      rules_.push_back({r.replacement, r.pattern});
    }
  }
  std::stable_sort(rules_.begin(), rules_.end(),
                   [](const NegationRule &a, const NegationRule &b) {
                     return a.pattern.size() > b.pattern.size();
                   });
}

NegationRules NegationRules::Default() {
  std::vector<NegationRule> rules;
  for (const char *aux : {"is", "are", "was", "were", "could", "may", "might", "will",
                          "would", "should", "has", "have", "does", "did", "do"}) {
    rules.push_back({std::string(aux) + " not", aux});
    rules.push_back({aux, std::string(aux) + " not"});
  }
  rules.push_back({"cannot", "can"});
  rules.push_back({"can", "cannot"});
  for (const char *verb :
       {"inhibit", "activate", "induce", "regulate", "enhance", "reduce", "promote",
        "suppress", "stimulate", "mediate", "require", "block", "prevent", "cause",
        "modulate", "affect", "bind", "upregulate", "downregulate", "attenuate",
        "trigger", "contribute"}) {
    std::string third = verb;
    third += (third.back() == 's' || third.back() == 'h') ? "es" : "s";
    rules.push_back({"does not " + std::string(verb), third});
    rules.push_back({third, "does not " + std::string(verb)});
  }
  return NegationRules(std::move(rules));
}

NegationRules NegationRules::FromFile(const std::string &path) {
  std::vector<NegationRule> rules;
  ForEachTabPair(path, [&](const std::string &a, const std::string &b) {
    rules.push_back({a, b});
  });
  return NegationRules(std::move(rules));
}

std::string NegationRules::ToTsv() const {
  std::string out;
  for (const auto &r : rules_) out += r.pattern + "\t" + r.replacement + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Text edits on a conclusion. All internal positions are byte offsets into
// plain_text; mentions are rebuilt with scalar-value spans afterwards.

namespace {

struct Slot {
  CharSpan bytes;
  std::string text;
};

// Rewrites two non-overlapping byte ranges at once and reports where the new
// text landed.
std::string RewriteTwo(const std::string &plain, Slot &a, Slot &b) {
  Slot *first = &a;
  Slot *second = &b;
  if (second->bytes.begin < first->bytes.begin) std::swap(first, second);
  std::string out = plain.substr(0, first->bytes.begin);
  const std::size_t first_begin = out.size();
  out += first->text;
  const std::size_t first_end = out.size();
  out.append(plain, first->bytes.end, second->bytes.begin - first->bytes.end);
  const std::size_t second_begin = out.size();
  out += second->text;
  const std::size_t second_end = out.size();
  out.append(plain, second->bytes.end, std::string::npos);
  first->bytes = {first_begin, first_end};
  second->bytes = {second_begin, second_end};
  return out;
}

EntityMention Relocated(const EntityMention &source, Role role, const std::string &plain,
                        CharSpan bytes) {
  EntityMention m = source;
  m.role = role;
  m.surface = plain.substr(bytes.begin, bytes.size());
  m.char_span = ToCodepointSpan(plain, bytes);
  return m;
}

std::array<CharSpan, 2> EntityBytes(const MarkedConclusion &c) {
  return {ToByteSpan(c.plain_text, c.regulator.char_span),
          ToByteSpan(c.plain_text, c.regulated.char_span)};
}

bool TouchesEntity(const MarkedConclusion &c, CharSpan bytes) {
  for (const CharSpan &e : EntityBytes(c)) {
    if (e.Overlaps(bytes)) return true;
  }
  return false;
}

// Replaces a non-entity byte range, shifting entity spans that follow it.
MarkedConclusion ReplaceOutsideEntities(const MarkedConclusion &c, CharSpan bytes,
                                        std::string_view replacement) {
  auto spans = EntityBytes(c);
  std::string plain = c.plain_text.substr(0, bytes.begin);
  plain += replacement;
  plain.append(c.plain_text, bytes.end, std::string::npos);
  const long delta = static_cast<long>(replacement.size()) - static_cast<long>(bytes.size());
  for (CharSpan &s : spans) {
    if (s.begin >= bytes.end) {
      s.begin = static_cast<std::size_t>(static_cast<long>(s.begin) + delta);
      s.end = static_cast<std::size_t>(static_cast<long>(s.end) + delta);
    }
  }
  MarkedConclusion out;
  out.plain_text = std::move(plain);
  out.regulator = Relocated(c.regulator, Role::kRegulator, out.plain_text, spans[0]);
  out.regulated = Relocated(c.regulated, Role::kRegulated, out.plain_text, spans[1]);
  return out;
}

MarkedConclusion ReplaceEntity(const MarkedConclusion &c, Role role,
                               const std::string &surface, const std::string &type) {
  const auto spans = EntityBytes(c);
  Slot reg{spans[0], c.regulator.surface};
  Slot rgd{spans[1], c.regulated.surface};
  (role == Role::kRegulator ? reg : rgd).text = surface;
  MarkedConclusion out;
  out.plain_text = RewriteTwo(c.plain_text, reg, rgd);
  out.regulator = Relocated(c.regulator, Role::kRegulator, out.plain_text, reg.bytes);
  out.regulated = Relocated(c.regulated, Role::kRegulated, out.plain_text, rgd.bytes);
  out.mention(role).type_label = type;
  return out;
}

bool IsWordStart(std::string_view text, std::size_t pos) {
  return pos < text.size() && IsWordByte(text[pos]) && (pos == 0 || !IsWordByte(text[pos - 1]));
}

bool EndsAtBoundary(std::string_view text, std::size_t end) {
  return end >= text.size() || !IsWordByte(text[end]);
}

std::string MatchCase(std::string_view original, std::string replacement) {
  if (!original.empty() && !replacement.empty() &&
      std::isupper(static_cast<unsigned char>(original[0]))) {
    replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
  }
  return replacement;
}

struct Site {
  CharSpan bytes;
  std::string replacement;
};

std::optional<MarkedConclusion> ApplyAtRandomSite(const MarkedConclusion &c,
                                                  const std::vector<Site> &sites,
                                                  std::uint64_t seed) {
  if (sites.empty()) return std::nullopt;
  Rng rng(seed);
  const Site &site = rng.Choose(sites);
  const std::string original = c.plain_text.substr(site.bytes.begin, site.bytes.size());
  return ReplaceOutsideEntities(c, site.bytes, MatchCase(original, site.replacement));
}

std::optional<MarkedConclusion> SwapWithCandidate(
    const MarkedConclusion &c, const std::array<std::vector<std::string>, 2> &candidates,
    const std::array<std::string, 2> &types, std::uint64_t seed) {
  std::vector<Role> eligible;
  if (!candidates[0].empty()) eligible.push_back(Role::kRegulator);
  if (!candidates[1].empty()) eligible.push_back(Role::kRegulated);
  if (eligible.empty()) return std::nullopt;
  Rng rng(seed);
  const Role role = rng.Choose(eligible);
  const int slot = role == Role::kRegulator ? 0 : 1;
  const std::string &surface = rng.Choose(candidates[slot]);
  return ReplaceEntity(c, role, surface, types[slot]);
}

template <typename CandidatesFn>
std::optional<MarkedConclusion> TypedSwap(const MarkedConclusion &c,
                                          const EntityTyper &typer, std::uint64_t seed,
                                          CandidatesFn candidates_for) {
  std::array<std::vector<std::string>, 2> candidates;
  std::array<std::string, 2> types;
  int typed = 0;
  for (Role r : {Role::kRegulator, Role::kRegulated}) {
    const int slot = r == Role::kRegulator ? 0 : 1;
    auto type = MentionType(c.mention(r), c.plain_text, typer);
    if (!type) continue;
    ++typed;
    types[slot] = *type;
    candidates[slot] = candidates_for(r);
  }
  if (typed == 0) throw UntypedEntity("neither main entity has a type");
  return SwapWithCandidate(c, candidates, types, seed);
}

}  // namespace

MarkedConclusion ApplySen(const MarkedConclusion &c) {
  const auto spans = EntityBytes(c);
  Slot reg{spans[0], c.regulated.surface};
  Slot rgd{spans[1], c.regulator.surface};
  MarkedConclusion out;
  out.plain_text = RewriteTwo(c.plain_text, reg, rgd);
  // The names trade places; each keeps its own type label.
  out.regulator = Relocated(c.regulated, Role::kRegulator, out.plain_text, reg.bytes);
  out.regulated = Relocated(c.regulator, Role::kRegulated, out.plain_text, rgd.bytes);
  return out;
}

MarkedConclusion ApplySep(const MarkedConclusion &c) {
  const auto spans = EntityBytes(c);
  Slot at_reg{spans[0], c.regulated.surface};
  Slot at_rgd{spans[1], c.regulator.surface};
  MarkedConclusion out;
  out.plain_text = RewriteTwo(c.plain_text, at_reg, at_rgd);
  out.regulator = Relocated(c.regulator, Role::kRegulator, out.plain_text, at_rgd.bytes);
  out.regulated = Relocated(c.regulated, Role::kRegulated, out.plain_text, at_reg.bytes);
  return out;
}

std::optional<MarkedConclusion> ApplySre(const MarkedConclusion &c, const SupportingSet &s,
                                         const EntityTyper &typer, std::uint64_t seed) {
  return TypedSwap(c, typer, seed,
                   [&](Role r) { return InTextCandidates(c, s, r, typer); });
}

std::optional<MarkedConclusion> ApplySreo(const MarkedConclusion &c, const SupportingSet &s,
                                          const EntityPool &pool, const EntityTyper &typer,
                                          std::uint64_t seed) {
  return TypedSwap(c, typer, seed,
                   [&](Role r) { return OutOfTextCandidates(c, s, pool, r, typer); });
}

std::optional<MarkedConclusion> ApplyVneg(const MarkedConclusion &c,
                                          const NegationRules &rules, std::uint64_t seed) {
  const std::string lowered = AsciiLower(c.plain_text);
  std::vector<Site> sites;
  for (std::size_t pos = 0; pos < lowered.size(); ++pos) {
    if (!IsWordStart(lowered, pos)) continue;
    for (const auto &rule : rules.rules()) {
      const std::size_t end = pos + rule.pattern.size();
      if (lowered.compare(pos, rule.pattern.size(), rule.pattern) != 0) continue;
      if (!EndsAtBoundary(lowered, end)) continue;
      if (TouchesEntity(c, {pos, end})) continue;
      sites.push_back({{pos, end}, rule.replacement});
      break;
    }
  }
  return ApplyAtRandomSite(c, sites, seed);
}

std::optional<MarkedConclusion> ApplyLpr(const MarkedConclusion &c,
                                         const AntonymLexicon &lexicon, std::uint64_t seed) {
  const std::string lowered = AsciiLower(c.plain_text);
  std::vector<Site> sites;
  std::size_t pos = 0;
  while (pos < lowered.size()) {
    if (!IsWordStart(lowered, pos)) {
      ++pos;
      continue;
    }
    std::size_t next = pos + 1;
    for (const auto &term : lexicon.terms()) {
      const std::size_t end = pos + term.size();
      if (lowered.compare(pos, term.size(), term) != 0) continue;
      if (!EndsAtBoundary(lowered, end)) continue;
      if (TouchesEntity(c, {pos, end})) continue;
      sites.push_back({{pos, end}, *lexicon.Lookup(term)});
      next = end;
      break;
    }
    pos = next;
  }
  return ApplyAtRandomSite(c, sites, seed);
}

std::vector<NumberToken> FindNumbers(std::string_view text) {
  auto digit = [&](std::size_t i) {
    return i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]));
  };
  auto glued = [&](std::size_t i) {
    if (i == 0) return false;
    const char p = text[i - 1];
    return IsWordByte(p) || p == '.' || p == '-' || p == '+' || p == ',';
  };
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    std::size_t j = i;
    if ((text[i] == '-' || text[i] == '+') && digit(i + 1)) {
      j = i + 1;
    } else if (!digit(i)) {
      ++i;
      continue;
    }
    if (glued(start)) {
      // Skip the whole glued run so its tail digits are not picked up.
      while (j < text.size() && (digit(j) || text[j] == '.')) ++j;
      i = std::max(j, i + 1);
      continue;
    }
    while (digit(j)) ++j;
    if (j + 1 < text.size() && text[j] == '.' && digit(j + 1)) {
      ++j;
      while (digit(j)) ++j;
    }
    NumberToken tok;
    tok.byte_begin = start;
    tok.byte_end = j;
    tok.text = std::string(text.substr(start, j - start));
    tok.value = std::strtod(tok.text.c_str(), nullptr);
    out.push_back(std::move(tok));
    i = j;
  }
  return out;
}

std::optional<MarkedConclusion> ApplySn(const MarkedConclusion &c, const SupportingSet &s,
                                        std::uint64_t seed) {
  std::vector<NumberToken> pool;
  for (const auto &sentence : s.sentences) {
    for (auto &n : FindNumbers(sentence.text)) {
      bool dup = false;
      for (const auto &p : pool) dup = dup || p.text == n.text;
      if (!dup) pool.push_back(std::move(n));
    }
  }
  struct Choice {
    NumberToken site;
    std::vector<std::string> replacements;
  };
  std::vector<Choice> choices;
  for (auto &n : FindNumbers(c.plain_text)) {
    if (TouchesEntity(c, {n.byte_begin, n.byte_end})) continue;
    Choice choice{n, {}};
    for (const auto &p : pool) {
      if (p.value != n.value) choice.replacements.push_back(p.text);
    }
    if (!choice.replacements.empty()) choices.push_back(std::move(choice));
  }
  if (choices.empty()) return std::nullopt;
  Rng rng(seed);
  const Choice &choice = rng.Choose(choices);
  const std::string &replacement = rng.Choose(choice.replacements);
  return ReplaceOutsideEntities(c, {choice.site.byte_begin, choice.site.byte_end}, replacement);
}

std::map<PerturbationKind, MarkedConclusion> PerturbAll(const MarkedConclusion &c,
                                                        const SupportingSet &s,
                                                        const PerturbResources &res,
                                                        std::uint64_t seed,
                                                        const KindSet &kinds) {
  std::map<PerturbationKind, MarkedConclusion> out;
  auto want = [&](PerturbationKind k) { return kinds.empty() || kinds.count(k) > 0; };
  auto put = [&](PerturbationKind k, std::optional<MarkedConclusion> result) {
    if (result) out.emplace(k, std::move(*result));
  };
  using K = PerturbationKind;
  if (want(K::kSEN)) put(K::kSEN, ApplySen(c));
  if (want(K::kSEP)) put(K::kSEP, ApplySep(c));
  if (want(K::kSRE) && res.typer) {
    try {
      put(K::kSRE, ApplySre(c, s, *res.typer, KindSeed(seed, K::kSRE)));
    } catch (const UntypedEntity &) {
    }
  }
  if (want(K::kSREO) && res.typer && res.pool) {
    try {
      put(K::kSREO, ApplySreo(c, s, *res.pool, *res.typer, KindSeed(seed, K::kSREO)));
    } catch (const UntypedEntity &) {
    }
  }
  if (want(K::kVNeg) && res.negation) {
    put(K::kVNeg, ApplyVneg(c, *res.negation, KindSeed(seed, K::kVNeg)));
  }
  if (want(K::kSN)) put(K::kSN, ApplySn(c, s, KindSeed(seed, K::kSN)));
  if (want(K::kLPR) && res.antonyms) {
    put(K::kLPR, ApplyLpr(c, *res.antonyms, KindSeed(seed, K::kLPR)));
  }
  return out;
}

KindSet Applicability(const MarkedConclusion &c, const SupportingSet &s,
                      const PerturbResources &res, std::uint64_t seed) {
  KindSet out = {PerturbationKind::kSEN, PerturbationKind::kSEP};
  for (const auto &[kind, _] : PerturbAll(c, s, res, seed, {})) out.insert(kind);
  for (PerturbationKind k : res.generation_accepted) {
    if (!IsRuleBased(k)) out.insert(k);
  }
  return out;
}

}  // namespace mechnli
