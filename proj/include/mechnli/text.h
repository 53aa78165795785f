#ifndef MECHNLI_TEXT_H_
#define MECHNLI_TEXT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mechnli {

// Half-open interval [begin, end). Units depend on context: entity spans are
// in Unicode scalar values, internal edit spans are in bytes.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool Overlaps(const CharSpan &other) const {
    return begin < other.end && other.begin < end;
  }
  bool operator==(const CharSpan &) const = default;
};

// UTF-8 helpers. Invalid sequences are counted byte by byte.
std::size_t CodepointCount(std::string_view text);
// Byte offset of the cp-th scalar value; cp == count maps to text.size().
std::size_t ByteOffsetOf(std::string_view text, std::size_t cp);
// Scalar-value index of a byte offset that lies on a sequence boundary.
std::size_t CodepointIndexOf(std::string_view text, std::size_t byte_offset);
CharSpan ToByteSpan(std::string_view text, CharSpan cp_span);
CharSpan ToCodepointSpan(std::string_view text, CharSpan byte_span);
std::string SubstrCodepoints(std::string_view text, CharSpan cp_span);

// ASCII-only case folding; non-ASCII bytes pass through unchanged.
std::string AsciiLower(std::string_view text);
bool EqualsIgnoreCase(std::string_view a, std::string_view b);
bool ContainsIgnoreCase(std::string_view haystack, std::string_view needle);
std::string Trim(std::string_view text);
std::vector<std::string> SplitLines(std::string_view text);

// Letters, digits and any non-ASCII byte.
bool IsWordByte(char c);

// Marker tags delimiting the two main entities of a mechanism sentence.
inline constexpr std::string_view kRegulatorOpen = "<re>";
inline constexpr std::string_view kRegulatorClose = "<er>";
inline constexpr std::string_view kRegulatedOpen = "<el>";
inline constexpr std::string_view kRegulatedClose = "<le>";
bool IsMarkerTag(std::string_view token);

// Bundled tokenization: lowercase, split on whitespace, every ASCII
// punctuation character is its own token, marker tags stay whole.
std::vector<std::string> Tokenize(std::string_view text);
std::string Detokenize(const std::vector<std::string> &tokens);

// Removes marker tags (and the single space each tag owns).
std::string StripMarkers(std::string_view text);

// Reads a whole file; throws IoFailure.
std::string ReadFile(const std::string &path);
void WriteFile(const std::string &path, std::string_view contents);

}  // namespace mechnli

#endif  // MECHNLI_TEXT_H_
