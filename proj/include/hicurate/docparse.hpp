#pragma once

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hicurate/corpus.hpp"

namespace hicurate {

// Words that end in a period without ending the sentence ("Dr.", "डॉ.").
// Entries are stored lowercased with their trailing period.
class AbbreviationGuard {
 public:
  AbbreviationGuard() = default;
  explicit AbbreviationGuard(const std::vector<std::string>& entries);

  // The shipped English and Hindi lists.
  static const AbbreviationGuard& defaults();
  static AbbreviationGuard from_files(const std::vector<std::string>& paths);

  // `word` includes the trailing period.
  bool contains(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_set<std::string> entries_;
};

// Parses markdown-flavoured plain text into blocks. Recognized: `#` headings,
// `-`/`*`/`+` bullet lists, `1.`/`1)` numbered lists, pipe tables (alignment
// rows kept as layout), paragraphs. Every input byte lands in a cell or in
// layout, so render() reproduces `raw` exactly. Script is detected from the
// letters; provenance defaults to real-web and the id is left to the caller.
Document parse_document(std::string_view raw, std::string lang, std::string id = {});

// Devanagari when Devanagari letters outnumber ASCII letters.
Script detect_script(std::string_view text);

// Splits every cell into sentences. Terminators are । ॥ . ! ? (plus trailing
// closing quotes/brackets). Latin terminators end a sentence only when followed
// by whitespace or end of cell and the preceding word is not a guarded
// abbreviation; dandas always end a sentence. Deterministic and idempotent.
Document segment_sentences(Document doc, const AbbreviationGuard& guard = AbbreviationGuard::defaults());
CellSentences segment_cell(std::string_view cell, const AbbreviationGuard& guard = AbbreviationGuard::defaults());

struct SentenceLocation {
  std::size_t block = 0;
  std::size_t cell = 0;
  std::size_t sentence = 0;

  auto operator<=>(const SentenceLocation&) const = default;
};

using Replacements = std::map<SentenceLocation, std::string>;

class UnknownLocationError : public Error {
 public:
  explicit UnknownLocationError(const SentenceLocation& loc)
      : Error("unknown_location", "no sentence at block " + std::to_string(loc.block) + " cell " +
                                      std::to_string(loc.cell) + " sentence " + std::to_string(loc.sentence)) {}
};

// Returns a copy of `doc` with the given sentences replaced; cells are rebuilt
// from their sentences and separators, layout is untouched.
Document apply_replacements(const Document& doc, const Replacements& replacements);

// apply_replacements(...).render(). Identity replacements reproduce the input.
std::string reassemble(const Document& doc, const Replacements& replacements);

}  // namespace hicurate
