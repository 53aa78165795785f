#include "mechnli/annotate.h"

#include <set>

#include "mechnli/errors.h"
#include "mechnli/random.h"

namespace mechnli {

namespace {

// Parses `surface<TAB>label` lines.
template <typename Fn>
void ForEachTsvPair(const std::string &path, Fn fn) {
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

}  // namespace

LexiconTyper LexiconTyper::FromFile(const std::string &path,
                                    std::optional<std::string> default_label) {
  LexiconTyper typer(std::move(default_label));
  ForEachTsvPair(path, [&](const std::string &s, const std::string &l) { typer.Add(s, l); });
  return typer;
}

void LexiconTyper::Add(std::string_view surface, std::string_view label) {
  if (Trim(surface).empty() || Trim(label).empty()) {
    throw InvalidResource("empty lexicon entry");
  }
  auto [it, inserted] = labels_.emplace(AsciiLower(surface), std::string(label));
  if (!inserted && it->second != label) {
    throw InvalidResource("conflicting labels for " + std::string(surface));
  }
}

std::optional<std::string> LexiconTyper::TypeOf(std::string_view surface,
                                                 std::string_view) const {
  auto it = labels_.find(AsciiLower(surface));
  if (it != labels_.end()) return it->second;
  return default_label_;
}

void EntityPool::Add(std::string_view surface, std::string_view label) {
  const std::string s = Trim(surface);
  if (s.empty() || Trim(label).empty()) throw InvalidResource("empty pool entry");
  const std::string key = AsciiLower(s);
  auto it = label_of_.find(key);
  if (it != label_of_.end()) {
    if (it->second != label) {
      throw InvalidResource("pool surface " + s + " listed under two labels");
    }
    return;
  }
  label_of_.emplace(key, std::string(label));
  by_type_[std::string(label)].push_back(s);
  order_.push_back(s);
}

EntityPool EntityPool::FromFile(const std::string &path) {
  EntityPool pool;
  ForEachTsvPair(path, [&](const std::string &s, const std::string &l) { pool.Add(s, l); });
  return pool;
}

EntityPool EntityPool::FromCorpus(const std::vector<Abstract> &corpus,
                                  const EntityTyper &typer) {
  EntityPool pool;
  for (const auto &a : corpus) {
    for (const auto &m : a.mentions) {
      auto label = MentionType(m, a.sentences[m.sentence_index].text, typer);
      if (!label) continue;
      // First label wins; later conflicting mentions are dropped.
      if (pool.label_of_.count(AsciiLower(m.surface))) continue;
      pool.Add(m.surface, *label);
    }
  }
  return pool;
}

const std::vector<std::string> &EntityPool::SurfacesOf(const std::string &label) const {
  static const std::vector<std::string> kEmpty;
  auto it = by_type_.find(label);
  return it == by_type_.end() ? kEmpty : it->second;
}

std::string EntityPool::ToTsv() const {
  std::string out;
  for (const auto &s : order_) {
    out += s;
    out.push_back('\t');
    out += label_of_.at(AsciiLower(s));
    out.push_back('\n');
  }
  return out;
}

std::optional<std::string> MentionType(const EntityMention &mention,
                                       std::string_view context,
                                       const EntityTyper &typer) {
  if (!mention.type_label.empty()) return mention.type_label;
  return typer.TypeOf(mention.surface, context);
}

namespace {

std::string TargetType(const MarkedConclusion &c, Role target, const EntityTyper &typer) {
  if (target == Role::kNone) throw UntypedEntity("target role must be a main entity");
  auto label = MentionType(c.mention(target), c.plain_text, typer);
  if (!label) throw UntypedEntity("no type for `" + c.mention(target).surface + "`");
  return *label;
}

bool IsMainEntity(const MarkedConclusion &c, std::string_view surface) {
  return EqualsIgnoreCase(surface, c.regulator.surface) ||
         EqualsIgnoreCase(surface, c.regulated.surface);
}

std::optional<std::string> Draw(const std::vector<std::string> &candidates,
                                std::uint64_t seed) {
  if (candidates.empty()) return std::nullopt;
  Rng rng(seed);
  return rng.Choose(candidates);
}

}  // namespace

std::vector<std::string> InTextCandidates(const MarkedConclusion &c,
                                          const SupportingSet &s, Role target,
                                          const EntityTyper &typer) {
  const std::string type = TargetType(c, target, typer);
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto &m : s.mentions) {
    if (IsMainEntity(c, m.surface)) continue;
    std::string_view context;
    if (m.sentence_index < s.sentences.size()) context = s.sentences[m.sentence_index].text;
    auto label = MentionType(m, context, typer);
    if (!label || *label != type) continue;
    if (seen.insert(AsciiLower(m.surface)).second) out.push_back(m.surface);
  }
  return out;
}

std::vector<std::string> OutOfTextCandidates(const MarkedConclusion &c,
                                             const SupportingSet &s,
                                             const EntityPool &pool, Role target,
                                             const EntityTyper &typer) {
  const std::string type = TargetType(c, target, typer);
  std::vector<std::string> out;
  for (const auto &surface : pool.SurfacesOf(type)) {
    if (IsMainEntity(c, surface)) continue;
    if (ContainsIgnoreCase(c.plain_text, surface)) continue;
    bool in_text = false;
    for (const auto &sentence : s.sentences) {
      if (ContainsIgnoreCase(sentence.text, surface)) {
        in_text = true;
        break;
      }
    }
    if (!in_text) out.push_back(surface);
  }
  return out;
}

std::optional<std::string> SameTypeInText(const MarkedConclusion &c,
                                          const SupportingSet &s, Role target,
                                          const EntityTyper &typer,
                                          std::uint64_t seed) {
  return Draw(InTextCandidates(c, s, target, typer), seed);
}

std::optional<std::string> SameTypeOutOfText(const MarkedConclusion &c,
                                             const SupportingSet &s,
                                             const EntityPool &pool, Role target,
                                             const EntityTyper &typer,
                                             std::uint64_t seed) {
  return Draw(OutOfTextCandidates(c, s, pool, target, typer), seed);
}

}  // namespace mechnli
