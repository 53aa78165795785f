#include "mechnli/corpus.h"

#include <algorithm>
#include <array>

#include "mechnli/errors.h"

namespace mechnli {

using nlohmann::json;

std::string_view RoleName(Role role) {
  switch (role) {
    case Role::kRegulator:
      return "regulator";
    case Role::kRegulated:
      return "regulated";
    case Role::kNone:
      break;
  }
  return "none";
}

std::optional<Role> ParseRole(std::string_view name) {
  const std::string lower = AsciiLower(name);
  if (lower == "regulator") return Role::kRegulator;
  if (lower == "regulated") return Role::kRegulated;
  if (lower == "none" || lower.empty()) return Role::kNone;
  return std::nullopt;
}

std::string SupportingSet::PremiseText() const {
  std::string out;
  for (const auto &s : sentences) {
    if (!out.empty()) out.push_back(' ');
    out += s.text;
  }
  return out;
}

namespace {

bool ContainsMarkerTag(std::string_view text) {
  for (std::string_view tag :
       {kRegulatorOpen, kRegulatorClose, kRegulatedOpen, kRegulatedClose}) {
    if (text.find(tag) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace

MarkedConclusion ParseMarked(std::string_view text) {
  enum class State { kPending, kOpen, kDone };
  std::array<State, 2> state = {State::kPending, State::kPending};
  std::array<CharSpan, 2> byte_spans;
  auto slot = [](Role r) { return r == Role::kRegulator ? 0 : 1; };

  std::string plain;
  std::string inner;
  Role open = Role::kNone;

  auto open_tag = [&](Role r, std::string_view tag) {
    if (open != Role::kNone) {
      throw MalformedMarkers("tag " + std::string(tag) + " inside another entity span");
    }
    if (state[slot(r)] == State::kDone) {
      throw MalformedMarkers("duplicate " + std::string(RoleName(r)) + " span");
    }
    state[slot(r)] = State::kOpen;
    open = r;
  };
  auto close_tag = [&](Role r, std::string_view tag) {
    if (open != r) {
      throw MalformedMarkers("unbalanced closing tag " + std::string(tag));
    }
    std::string surface = Trim(inner);
    if (surface.empty()) {
      throw MalformedMarkers("empty " + std::string(RoleName(r)) + " span");
    }
    const std::size_t begin = plain.size();
    plain += surface;
    byte_spans[slot(r)] = {begin, plain.size()};
    state[slot(r)] = State::kDone;
    open = Role::kNone;
    inner.clear();
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const std::string_view tag = text.substr(i, 4);
    if (tag == kRegulatorOpen) {
      // `<re> X <re>` is accepted as a closing form.
      if (open == Role::kRegulator) {
        close_tag(Role::kRegulator, tag);
      } else {
        open_tag(Role::kRegulator, tag);
      }
    } else if (tag == kRegulatorClose) {
      close_tag(Role::kRegulator, tag);
    } else if (tag == kRegulatedOpen) {
      open_tag(Role::kRegulated, tag);
    } else if (tag == kRegulatedClose) {
      close_tag(Role::kRegulated, tag);
    } else {
      (open == Role::kNone ? plain : inner).push_back(text[i]);
      ++i;
      continue;
    }
    i += 4;
  }
  if (open != Role::kNone) {
    throw MalformedMarkers("unterminated " + std::string(RoleName(open)) + " span");
  }
  if (state[0] != State::kDone) throw MalformedMarkers("missing regulator span");
  if (state[1] != State::kDone) throw MalformedMarkers("missing regulated span");

  MarkedConclusion c;
  c.plain_text = std::move(plain);
  for (Role r : {Role::kRegulator, Role::kRegulated}) {
    EntityMention &m = c.mention(r);
    const CharSpan bytes = byte_spans[slot(r)];
    m.surface = c.plain_text.substr(bytes.begin, bytes.size());
    m.role = r;
    m.char_span = ToCodepointSpan(c.plain_text, bytes);
  }
  ValidateConclusion(c);
  return c;
}

std::string RenderMarked(const MarkedConclusion &c) {
  struct Piece {
    CharSpan bytes;
    std::string_view open;
    std::string_view close;
  };
  std::array<Piece, 2> pieces = {
      Piece{ToByteSpan(c.plain_text, c.regulator.char_span), kRegulatorOpen,
            kRegulatorClose},
      Piece{ToByteSpan(c.plain_text, c.regulated.char_span), kRegulatedOpen,
            kRegulatedClose}};
  if (pieces[1].bytes.begin < pieces[0].bytes.begin) std::swap(pieces[0], pieces[1]);

  std::string out;
  std::size_t pos = 0;
  for (const Piece &p : pieces) {
    out.append(c.plain_text, pos, p.bytes.begin - pos);
    out += p.open;
    out.push_back(' ');
    out.append(c.plain_text, p.bytes.begin, p.bytes.size());
    out.push_back(' ');
    out += p.close;
    pos = p.bytes.end;
  }
  out.append(c.plain_text, pos, std::string::npos);
  return out;
}

void ValidateConclusion(const MarkedConclusion &c) {
  if (ContainsMarkerTag(c.plain_text)) {
    throw InvalidConclusion("marker tag inside plain text");
  }
  const std::size_t length = CodepointCount(c.plain_text);
  for (Role r : {Role::kRegulator, Role::kRegulated}) {
    const EntityMention &m = c.mention(r);
    const std::string name(RoleName(r));
    if (m.role != r) throw InvalidConclusion(name + " mention has wrong role");
    if (m.char_span.begin >= m.char_span.end || m.char_span.end > length) {
      throw InvalidConclusion(name + " span out of range");
    }
    if (SubstrCodepoints(c.plain_text, m.char_span) != m.surface) {
      throw InvalidConclusion(name + " surface does not match its span");
    }
    if (Trim(m.surface) != m.surface) {
      throw InvalidConclusion(name + " surface has surrounding whitespace");
    }
  }
  if (c.regulator.char_span.Overlaps(c.regulated.char_span)) {
    throw InvalidConclusion("entity spans overlap");
  }
  if (EqualsIgnoreCase(c.regulator.surface, c.regulated.surface)) {
    throw InvalidConclusion("regulator and regulated surfaces are identical");
  }
}

void ValidateAbstract(const Abstract &a) {
  if (a.id.empty()) throw SchemaViolation(0, "empty id");
  if (a.sentences.size() < 2) throw SchemaViolation(0, "fewer than 2 sentences");
  for (std::size_t i = 0; i < a.sentences.size(); ++i) {
    const Sentence &s = a.sentences[i];
    if (s.index != i) throw SchemaViolation(0, "sentence indices not contiguous");
    if (Trim(s.text).empty()) {
      throw SchemaViolation(0, "sentence " + std::to_string(i) + " is empty");
    }
    if (ContainsMarkerTag(s.text)) {
      throw SchemaViolation(0, "sentence " + std::to_string(i) + " contains marker tags");
    }
  }
  const std::size_t last = a.sentences.size() - 1;
  for (const EntityMention &m : a.mentions) {
    if (m.sentence_index > last) {
      throw SchemaViolation(0, "entity sentence index out of range");
    }
    const std::string &text = a.sentences[m.sentence_index].text;
    if (m.char_span.begin >= m.char_span.end ||
        m.char_span.end > CodepointCount(text)) {
      throw SchemaViolation(0, "entity span out of range");
    }
    if (SubstrCodepoints(text, m.char_span) != m.surface) {
      throw SchemaViolation(0, "entity surface does not match its span");
    }
    if (m.role != Role::kNone && m.sentence_index != last) {
      throw SchemaViolation(0, "entity role outside the final sentence");
    }
  }
}

namespace {

const json &Require(const json &obj, const char *key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaViolation(0, std::string("missing `") + key + "`");
  return *it;
}

std::size_t RequireIndex(const json &obj, const char *key) {
  const json &v = Require(obj, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    throw SchemaViolation(0, std::string("`") + key + "` must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

EntityMention MentionFromJson(const json &e) {
  if (!e.is_object()) throw SchemaViolation(0, "entity must be an object");
  EntityMention m;
  m.sentence_index = RequireIndex(e, "sentence");
  m.char_span = {RequireIndex(e, "start"), RequireIndex(e, "end")};
  if (auto it = e.find("type"); it != e.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaViolation(0, "`type` must be a string");
    m.type_label = it->get<std::string>();
  }
  if (auto it = e.find("role"); it != e.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaViolation(0, "`role` must be a string");
    auto role = ParseRole(it->get<std::string>());
    if (!role) throw SchemaViolation(0, "unknown role `" + it->get<std::string>() + "`");
    m.role = *role;
  }
  if (auto it = e.find("surface"); it != e.end()) {
    if (!it->is_string()) throw SchemaViolation(0, "`surface` must be a string");
    m.surface = it->get<std::string>();
  }
  return m;
}

json MentionToJson(const EntityMention &m) {
  json j = {{"sentence", m.sentence_index},
            {"start", m.char_span.begin},
            {"end", m.char_span.end},
            {"surface", m.surface}};
  if (!m.type_label.empty()) j["type"] = m.type_label;
  if (m.role != Role::kNone) j["role"] = std::string(RoleName(m.role));
  return j;
}

Abstract AbstractFromJson(const json &record) {
  if (!record.is_object()) throw SchemaViolation(0, "record must be an object");
  Abstract a;
  const json &id = Require(record, "id");
  if (id.is_string()) {
    a.id = id.get<std::string>();
  } else if (id.is_number_integer()) {
    a.id = std::to_string(id.get<long long>());
  } else {
    throw SchemaViolation(0, "`id` must be a string");
  }
  const json &sentences = Require(record, "sentences");
  if (!sentences.is_array()) throw SchemaViolation(0, "`sentences` must be an array");
  for (const json &s : sentences) {
    if (!s.is_string()) throw SchemaViolation(0, "sentence must be a string");
    a.sentences.push_back({a.sentences.size(), s.get<std::string>()});
  }
  if (auto it = record.find("entities"); it != record.end()) {
    if (!it->is_array()) throw SchemaViolation(0, "`entities` must be an array");
    for (const json &e : *it) {
      EntityMention m = MentionFromJson(e);
      if (m.sentence_index >= a.sentences.size()) {
        throw SchemaViolation(0, "entity sentence index out of range");
      }
      const std::string &text = a.sentences[m.sentence_index].text;
      if (m.char_span.begin >= m.char_span.end ||
          m.char_span.end > CodepointCount(text)) {
        throw SchemaViolation(0, "entity span out of range");
      }
      const std::string at_span = SubstrCodepoints(text, m.char_span);
      if (!m.surface.empty() && m.surface != at_span) {
        throw SchemaViolation(0, "entity surface does not match its span");
      }
      m.surface = at_span;
      a.mentions.push_back(std::move(m));
    }
  }
  ValidateAbstract(a);
  return a;
}

json AbstractToJson(const Abstract &a) {
  json sentences = json::array();
  for (const auto &s : a.sentences) sentences.push_back(s.text);
  json entities = json::array();
  for (const auto &m : a.mentions) entities.push_back(MentionToJson(m));
  return {{"id", a.id}, {"sentences", sentences}, {"entities", entities}};
}

CorpusReader::CorpusReader(const std::string &path, LoadOptions options)
    : in_(path), options_(options) {
  if (!in_) throw IoFailure("cannot open corpus " + path);
}

std::optional<Abstract> CorpusReader::Next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (Trim(line).empty()) continue;
    try {
      json record;
      try {
        record = json::parse(line);
      } catch (const json::parse_error &e) {
        throw SchemaViolation(0, std::string("invalid JSON: ") + e.what());
      }
      return AbstractFromJson(record);
    } catch (const SchemaViolation &e) {
      if (!options_.lenient) throw SchemaViolation(line_, e.reason());
      reports_.push_back({line_, e.reason()});
    }
  }
  if (in_.bad()) throw IoFailure("read error in corpus");
  return std::nullopt;
}

std::vector<Abstract> LoadCorpus(const std::string &path, LoadOptions options,
                                 std::vector<LoadReport> *reports) {
  CorpusReader reader(path, options);
  std::vector<Abstract> out;
  while (auto a = reader.Next()) out.push_back(std::move(*a));
  if (reports) *reports = reader.reports();
  return out;
}

}  // namespace mechnli
