#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hicurate::text {

// Decodes one UTF-8 sequence starting at `pos`. Invalid bytes decode as
// U+FFFD with length 1 so callers always make progress.
struct Decoded {
  char32_t cp;
  std::size_t len;
};
Decoded decode_at(std::string_view s, std::size_t pos);

std::vector<char32_t> to_codepoints(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string from_codepoints(const std::vector<char32_t>& cps);

bool is_valid_utf8(std::string_view s);

// Unicode White_Space plus ASCII control characters.
bool is_space(char32_t cp);

inline bool is_devanagari(char32_t cp) { return cp >= 0x0900 && cp <= 0x097F; }
inline bool is_ascii(std::string_view s) {
  for (unsigned char c : s) {
    if (c >= 0x80) return false;
  }
  return true;
}

// Splits on runs of whitespace; no empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

// Collapses whitespace runs to a single ASCII space and trims both ends.
std::string normalize_whitespace(std::string_view s);

// ASCII-only lowercase; other codepoints are untouched.
std::string ascii_lower(std::string_view s);

std::string_view trim(std::string_view s);

// Reads a whole file. Throws IoError.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Lines of a word-list file: trimmed, blank lines and `#` comments dropped.
std::vector<std::string> parse_word_list(std::string_view content);

}  // namespace hicurate::text
