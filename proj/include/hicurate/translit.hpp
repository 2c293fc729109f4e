#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicurate/corpus.hpp"

namespace hicurate {

enum class TranslitClass { consonant, vowel, matra, virama, nukta, anusvara, chandrabindu, visarga, digit, sign, drop };

// Rule table for Devanagari -> ASCII romanization. Loaded from a TSV file:
//   U+0915<TAB>consonant<TAB>k[<TAB>labial]
//   U+0915 U+093C<TAB>consonant<TAB>q        (multi-codepoint key)
//   !schwa_deletion<TAB>1
// A scheme must map every codepoint of U+0900..U+097F and emit ASCII only.
class TranslitScheme {
 public:
  struct Entry {
    TranslitClass cls = TranslitClass::drop;
    std::string roman;
    bool labial = false;
  };

  static TranslitScheme parse(std::string_view tsv);
  static TranslitScheme from_file(const std::string& path);
  // The shipped Hinglish scheme.
  static const TranslitScheme& hinglish();

  const Entry& at(char32_t cp) const { return block_[cp - 0x0900]; }
  // Two-codepoint override (consonant + nukta), or nullptr.
  const Entry* sequence(char32_t first, char32_t second) const;

  bool schwa_deletion = true;
  std::string anusvara_labial = "m";

 private:
  std::vector<Entry> block_ = std::vector<Entry>(128);
  std::map<std::pair<char32_t, char32_t>, Entry> sequences_;
};

struct TranslitReport {
  std::map<char32_t, std::uint64_t> unmapped;  // non-ASCII codepoints outside the block, passed through
  std::map<char32_t, std::uint64_t> dropped;   // block codepoints the scheme maps to nothing

  void merge(const TranslitReport& other);
  nlohmann::json to_json() const;
};

// Romanizes Devanagari runs; everything else passes through unchanged.
std::string transliterate(std::string_view text, const TranslitScheme& scheme = TranslitScheme::hinglish(),
                          TranslitReport* report = nullptr);

inline constexpr std::string_view kTranslitIdSuffix = "~rom";

// Romanized copy of one document: provenance synthetic-transliterated, latin
// script, id `<source id>~rom`, identical block structure.
Document transliterate_document(const Document& doc, const TranslitScheme& scheme = TranslitScheme::hinglish(),
                                TranslitReport* report = nullptr);

// Copies for every devanagari-script document; others are skipped.
std::vector<Document> transliterate_corpus(const std::vector<Document>& docs,
                                           const TranslitScheme& scheme = TranslitScheme::hinglish(),
                                           TranslitReport* report = nullptr, std::size_t workers = 1);

}  // namespace hicurate
