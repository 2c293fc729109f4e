#include <doctest.h>

#include <sstream>

#include "hicurate/docparse.hpp"
#include "hicurate/embedded_data.hpp"
#include "hicurate/random.hpp"
#include "hicurate/text.hpp"
#include "hicurate/translit.hpp"
#include "support.hpp"

using namespace hicurate;

namespace {

std::string random_devanagari(Rng& rng, std::size_t max_len) {
  std::vector<char32_t> cps;
  const std::size_t n = rng.below(max_len + 1);
  for (std::size_t i = 0; i < n; ++i) {
    cps.push_back(rng.bernoulli(0.1) ? U' ' : static_cast<char32_t>(0x0900 + rng.below(0x80)));
  }
  return text::from_codepoints(cps);
}

}  // namespace

TEST_CASE("non-Devanagari text passes through") {
  CHECK(transliterate("abc 123") == "abc 123");
  CHECK(transliterate("") == "");
  CHECK(transliterate("Mixed, punctuation! ok?") == "Mixed, punctuation! ok?");
}

TEST_CASE("hand-applied scheme examples") {
  CHECK(transliterate("नमस्ते") == "namaste");
  CHECK(transliterate("भारत") == "bhaarat");
}

TEST_CASE("golden file") {
  std::istringstream in(text::read_file(std::string(HICURATE_TEST_DATA) + "/translit_golden.tsv"));
  std::string line;
  int entries = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    const auto src = line.substr(0, tab), want = line.substr(tab + 1);
    INFO("source: " << src);
    CHECK(transliterate(src) == want);
    ++entries;
  }
  CHECK(entries == 50);
}

TEST_CASE("anusvara follows the next consonant's class") {
  CHECK(transliterate("संबंध") == "sambandh");
  CHECK(transliterate("हिंदी") == "hindii");
  CHECK(transliterate("कंपनी") == "kampanii");
}

TEST_CASE("schwa deletion can be disabled") {
  auto scheme = TranslitScheme::hinglish();
  scheme.schwa_deletion = false;
  CHECK(transliterate("भारत", scheme) == "bhaarata");
  CHECK(transliterate("नमस्ते", scheme) == "namaste");
}

TEST_CASE("fuzzed block input gives ASCII and never fails") {
  Rng rng(1234);
  for (int i = 0; i < 10000; ++i) {
    const auto s = random_devanagari(rng, 24);
    std::string out;
    REQUIRE_NOTHROW(out = transliterate(s));
    REQUIRE(text::is_ascii(out));
  }
}

TEST_CASE("every block codepoint is covered by the shipped scheme") {
  for (char32_t cp = 0x0900; cp <= 0x097F; ++cp) {
    std::string s;
    text::append_utf8(s, cp);
    CHECK(text::is_ascii(transliterate(s)));
  }
}

TEST_CASE("latin input is a fixed point") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto s = transliterate(random_devanagari(rng, 30));
    CHECK(transliterate(s) == s);
  }
}

TEST_CASE("non-block codepoints pass through and are reported") {
  TranslitReport report;
  const auto out = transliterate("नमस्ते — ✓", TranslitScheme::hinglish(), &report);
  CHECK(out == "namaste — ✓");
  CHECK(report.unmapped.at(U'—') == 1);
  CHECK(report.unmapped.at(U'✓') == 1);
}

TEST_CASE("corpus transliteration flips provenance and keeps structure") {
  Rng rng(21);
  std::vector<Document> docs;
  for (int i = 0; i < 10; ++i) {
    docs.push_back(segment_sentences(parse_document(testsupport::random_markdown(rng, true), "hi", "h" + std::to_string(i))));
  }
  docs.push_back(segment_sentences(parse_document("English only.", "en", "e")));
  const auto out = transliterate_corpus(docs, TranslitScheme::hinglish(), nullptr, 1);
  REQUIRE(out.size() == 10);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].id == docs[i].id + "~rom");
    CHECK(out[i].provenance == Provenance::synthetic_transliterated);
    CHECK(out[i].script == Script::latin);
    CHECK(out[i].lang == docs[i].lang);
    CHECK(text::is_ascii(out[i].render()));
    validate(out[i]);
    REQUIRE(out[i].blocks.size() == docs[i].blocks.size());
    for (std::size_t b = 0; b < docs[i].blocks.size(); ++b) {
      CHECK(out[i].blocks[b].kind == docs[i].blocks[b].kind);
      CHECK(out[i].blocks[b].columns == docs[i].blocks[b].columns);
      CHECK(out[i].blocks[b].cells.size() == docs[i].blocks[b].cells.size());
    }
    // Reparsing the romanized text finds the same layout.
    const auto reparsed = parse_document(out[i].render(), "hi");
    REQUIRE(reparsed.blocks.size() == docs[i].blocks.size());
    for (std::size_t b = 0; b < docs[i].blocks.size(); ++b) CHECK(reparsed.blocks[b].kind == docs[i].blocks[b].kind);
  }
  CHECK(transliterate_corpus(docs, TranslitScheme::hinglish(), nullptr, 4) == out);
}

TEST_CASE("scheme parsing enforces totality and ASCII output") {
  const std::string shipped(embedded::translit_scheme);
  CHECK_NOTHROW(TranslitScheme::parse(shipped));
  // Drop the line for U+0915.
  std::string missing;
  std::istringstream in(shipped);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.starts_with("U+0915\t")) missing += line + "\n";
  }
  CHECK_THROWS(TranslitScheme::parse(missing));
  CHECK_THROWS(TranslitScheme::parse(shipped + "U+0916\tconsonant\tख\n"));
}
