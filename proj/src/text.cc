#include "mechnli/text.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include "mechnli/errors.h"

namespace mechnli {

namespace {

bool IsContinuation(unsigned char c) { return (c & 0xC0) == 0x80; }

std::size_t SequenceLength(std::string_view text, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t len = 1;
  if (lead >= 0xF0 && lead < 0xF8) {
    len = 4;
  } else if (lead >= 0xE0) {
    len = 3;
  } else if (lead >= 0xC0) {
    len = 2;
  }
  if (pos + len > text.size()) return 1;
  for (std::size_t i = 1; i < len; ++i) {
    if (!IsContinuation(static_cast<unsigned char>(text[pos + i]))) return 1;
  }
  return len;
}

}  // namespace

std::size_t CodepointCount(std::string_view text) {
  std::size_t count = 0;
  for (std::size_t pos = 0; pos < text.size(); pos += SequenceLength(text, pos)) {
    ++count;
  }
  return count;
}

std::size_t ByteOffsetOf(std::string_view text, std::size_t cp) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < cp; ++i) {
    if (pos >= text.size()) {
      throw std::out_of_range("codepoint index beyond end of text");
    }
    pos += SequenceLength(text, pos);
  }
  return pos;
}

std::size_t CodepointIndexOf(std::string_view text, std::size_t byte_offset) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos < byte_offset && pos < text.size()) {
    pos += SequenceLength(text, pos);
    ++count;
  }
  return count;
}

CharSpan ToByteSpan(std::string_view text, CharSpan cp_span) {
  return {ByteOffsetOf(text, cp_span.begin), ByteOffsetOf(text, cp_span.end)};
}

CharSpan ToCodepointSpan(std::string_view text, CharSpan byte_span) {
  return {CodepointIndexOf(text, byte_span.begin),
          CodepointIndexOf(text, byte_span.end)};
}

std::string SubstrCodepoints(std::string_view text, CharSpan cp_span) {
  const CharSpan bytes = ToByteSpan(text, cp_span);
  return std::string(text.substr(bytes.begin, bytes.size()));
}

std::string AsciiLower(std::string_view text) {
  std::string out(text);
  for (char &c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  return a.size() == b.size() && AsciiLower(a) == AsciiLower(b);
}

bool ContainsIgnoreCase(std::string_view haystack, std::string_view needle) {
  return AsciiLower(haystack).find(AsciiLower(needle)) != std::string::npos;
}

std::string Trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::vector<std::string> SplitLines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (nl == text.size() && line.empty()) break;
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

bool IsWordByte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u);
}

bool IsMarkerTag(std::string_view token) {
  return token == kRegulatorOpen || token == kRegulatorClose ||
         token == kRegulatedOpen || token == kRegulatedClose;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(AsciiLower(current));
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '<' && i + 4 <= text.size() &&
        IsMarkerTag(AsciiLower(text.substr(i, 4)))) {
      flush();
      tokens.push_back(AsciiLower(text.substr(i, 4)));
      i += 4;
      continue;
    }
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      flush();
    } else if (u < 0x80 && std::ispunct(u)) {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(c);
    }
    ++i;
  }
  flush();
  return tokens;
}

std::string Detokenize(const std::vector<std::string> &tokens) {
  std::string out;
  for (const auto &t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::string StripMarkers(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<' && i + 4 <= text.size()) {
      const std::string_view tag = text.substr(i, 4);
      if (tag == kRegulatorOpen || tag == kRegulatedOpen) {
        i += 4;
        if (i < text.size() && text[i] == ' ') ++i;
        continue;
      }
      if (tag == kRegulatorClose || tag == kRegulatedClose) {
        if (!out.empty() && out.back() == ' ') out.pop_back();
        i += 4;
        continue;
      }
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoFailure("read error on " + path);
  return buf.str();
}

void WriteFile(const std::string &path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoFailure("write error on " + path);
}

}  // namespace mechnli
