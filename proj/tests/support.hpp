#pragma once

// Fixtures shared by the unit tests and the acceptance runner.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "hicurate/random.hpp"
#include "hicurate/text.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("hicurate-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline const std::vector<std::string>& latin_words() {
  static const std::vector<std::string> w = {
      "river", "market", "temple", "city",  "farmer", "school",  "road",    "train",   "rain",   "forest",
      "book",  "song",   "water",  "bridge", "garden", "cotton", "museum",  "machine", "family", "winter",
      "old",   "new",    "big",    "small", "green",  "famous", "ancient", "modern",  "the",    "a",
      "of",    "in",     "near",   "with",  "built",  "saw",    "sold",    "opened",  "grew",   "people"};
  return w;
}

inline const std::vector<std::string>& hindi_words() {
  static const std::vector<std::string> w = {
      "शहर",  "नदी",   "बाज़ार", "मंदिर",  "किला",   "विद्यालय", "किसान", "गाँव", "सड़क", "राजा",  "रानी",
      "सेना", "फसल",   "बारिश", "पहाड़",   "जंगल",   "त्योहार",  "किताब", "पानी", "ज़मीन", "इतिहास", "भाषा",
      "बड़ा",  "छोटा",  "पुराना", "नया",    "सुंदर",  "प्रसिद्ध",  "में",   "का",   "की",   "के",    "है",
      "था",   "और",    "लोग",   "हर",     "साल",    "बहुत",     "पास",   "ने",   "को"};
  return w;
}

inline std::string random_sentence(hicurate::Rng& rng, const std::vector<std::string>& words, std::size_t min_len,
                                   std::size_t max_len, const std::string& end) {
  const std::size_t n = min_len + rng.below(max_len - min_len + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += words[rng.below(words.size())];
  }
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s + end;
}

// Grammatical-looking Hindi sentence from a handful of fixed patterns, so an
// n-gram model trained on it sees strong local structure.
inline std::string hindi_template_sentence(hicurate::Rng& rng) {
  static const std::vector<std::string> places = {"दिल्ली", "मुंबई", "पटना", "जयपुर", "लखनऊ", "भोपाल", "पुणे", "आगरा"};
  static const std::vector<std::string> nouns = {"बाज़ार", "मंदिर", "किला", "विद्यालय", "अस्पताल", "पुल", "बाग़", "महल",
                                                 "पुस्तकालय", "संग्रहालय", "कारख़ाना", "स्टेशन"};
  static const std::vector<std::string> adjs = {"बड़ा", "छोटा", "पुराना", "नया", "सुंदर", "प्रसिद्ध", "ऊँचा", "साफ़"};
  static const std::vector<std::string> verbs = {"बनाया", "देखा", "खोला", "बेचा", "बदला", "बचाया"};
  auto pick = [&](const std::vector<std::string>& v) { return v[rng.below(v.size())]; };
  switch (rng.below(6)) {
    case 0: return pick(places) + " में एक " + pick(adjs) + " " + pick(nouns) + " है।";
    case 1: return pick(places) + " का " + pick(nouns) + " बहुत " + pick(adjs) + " है।";
    case 2: return "सरकार ने " + pick(places) + " में नया " + pick(nouns) + " " + pick(verbs) + "।";
    case 3: return "लोग हर साल " + pick(places) + " के " + pick(nouns) + " को देखने आते हैं।";
    case 4: return "इस " + pick(adjs) + " " + pick(nouns) + " का इतिहास बहुत पुराना है।";
    default: return "राजा ने " + pick(places) + " में " + pick(nouns) + " " + pick(verbs) + "।";
  }
}

inline std::string hindi_template_paragraph(hicurate::Rng& rng, std::size_t sentences) {
  std::string out;
  for (std::size_t i = 0; i < sentences; ++i) out += (i ? " " : "") + hindi_template_sentence(rng);
  return out;
}

// Prose document of `words` tokens drawn from a large synthetic vocabulary, so
// unrelated documents share few character shingles.
inline std::string random_prose(hicurate::Rng& rng, std::size_t words) {
  static const char* syll[] = {"ka", "ri", "mo", "ta", "ne", "lu", "sa", "vi", "do", "pe", "ghu", "ra",
                               "zi", "bo", "fa", "che", "ya", "ko", "mi", "nu", "the", "jo", "la", "we"};
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += (i % 12 == 0) ? ". " : " ";
    const std::size_t n = 1 + rng.below(3);
    for (std::size_t k = 0; k < n; ++k) out += syll[rng.below(sizeof(syll) / sizeof(syll[0]))];
  }
  return out + ".";
}

// Copy of `text` with one word swapped for a fresh one.
inline std::string near_duplicate(hicurate::Rng& rng, const std::string& text) {
  auto words = hicurate::text::split_whitespace(text);
  words[rng.below(words.size())] = "edit" + std::to_string(rng.below(100000));
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

// Random markdown document with headings, bullet and numbered lists, pipe
// tables (with an alignment row) and runs of blank lines.
inline std::string random_markdown(hicurate::Rng& rng, bool hindi = false) {
  const auto& words = hindi ? hindi_words() : latin_words();
  const std::string end = hindi ? "।" : ".";
  auto sentence = [&] { return random_sentence(rng, words, 3, 9, rng.bernoulli(0.15) ? "?" : end); };
  auto sentences = [&](std::size_t lo, std::size_t hi) {
    std::string s;
    const std::size_t n = lo + rng.below(hi - lo + 1);
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + sentence();
    return s;
  };
  std::string out;
  const std::size_t blocks = 2 + rng.below(6);
  for (std::size_t b = 0; b < blocks; ++b) {
    if (b) out += rng.bernoulli(0.2) ? "\n\n\n" : "\n\n";
    switch (rng.below(5)) {
      case 0:
        out += std::string(1 + rng.below(3), '#') + " " + random_sentence(rng, words, 1, 4, "");
        break;
      case 1: {
        const char* marker = rng.bernoulli(0.5) ? "- " : "* ";
        const std::size_t n = 1 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i) out += (i ? "\n" : "") + std::string(marker) + sentences(1, 2);
        break;
      }
      case 2: {
        const std::size_t n = 1 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i) out += (i ? "\n" : "") + std::to_string(i + 1) + ". " + sentences(1, 2);
        break;
      }
      case 3: {
        const std::size_t cols = 2 + rng.below(3);
        const std::size_t rows = 2 + rng.below(3);
        for (std::size_t r = 0; r < rows; ++r) {
          if (r) out += "\n";
          out += "|";
          for (std::size_t c = 0; c < cols; ++c) out += " " + random_sentence(rng, words, 1, 3, "") + " |";
          if (r == 0) {
            out += "\n|";
            for (std::size_t c = 0; c < cols; ++c) out += "---|";
          }
        }
        break;
      }
      default:
        out += sentences(1, 5);
        if (rng.bernoulli(0.3)) out += "\n" + sentences(1, 2);
    }
  }
  if (rng.bernoulli(0.5)) out += "\n";
  return out;
}

}  // namespace testsupport
