#include "hicurate/translit.hpp"

#include <cstdio>
#include <sstream>

#include "hicurate/embedded_data.hpp"
#include "hicurate/parallel.hpp"
#include "hicurate/text.hpp"

namespace hicurate {
namespace {

TranslitClass class_from_string(std::string_view s) {
  static const std::pair<std::string_view, TranslitClass> kNames[] = {
      {"consonant", TranslitClass::consonant}, {"vowel", TranslitClass::vowel},
      {"matra", TranslitClass::matra},         {"virama", TranslitClass::virama},
      {"nukta", TranslitClass::nukta},         {"anusvara", TranslitClass::anusvara},
      {"chandrabindu", TranslitClass::chandrabindu}, {"visarga", TranslitClass::visarga},
      {"digit", TranslitClass::digit},         {"sign", TranslitClass::sign},
      {"drop", TranslitClass::drop}};
  for (const auto& [name, cls] : kNames) {
    if (name == s) return cls;
  }
  throw SchemaError("unknown transliteration class '" + std::string(s) + "'");
}

char32_t parse_codepoint(std::string_view s) {
  if (s.size() < 3 || s.substr(0, 2) != "U+") throw SchemaError("bad codepoint '" + std::string(s) + "'");
  std::uint32_t v = 0;
  for (char c : s.substr(2)) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint32_t>(c - '0');
    } else if (c >= 'A' && c <= 'F') {
      v |= static_cast<std::uint32_t>(c - 'A' + 10);
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint32_t>(c - 'a' + 10);
    } else {
      throw SchemaError("bad codepoint '" + std::string(s) + "'");
    }
  }
  return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto t = line.find('\t', pos);
    out.push_back(line.substr(pos, t == std::string_view::npos ? std::string_view::npos : t - pos));
    if (t == std::string_view::npos) break;
    pos = t + 1;
  }
  return out;
}

std::string cp_key(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

}  // namespace

TranslitScheme TranslitScheme::parse(std::string_view tsv) {
  TranslitScheme scheme;
  std::vector<bool> seen(128, false);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < tsv.size()) {
    auto nl = tsv.find('\n', pos);
    if (nl == std::string_view::npos) nl = tsv.size();
    std::string_view line = tsv.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    const std::string where = "scheme line " + std::to_string(line_no);
    if (line.front() == '!') {
      if (fields.size() != 2) throw SchemaError(where + ": flag needs a value");
      if (fields[0] == "!schwa_deletion") {
        scheme.schwa_deletion = fields[1] == "1" || fields[1] == "true";
      } else if (fields[0] == "!anusvara_labial") {
        scheme.anusvara_labial = std::string(fields[1]);
      } else {
        throw SchemaError(where + ": unknown flag " + std::string(fields[0]));
      }
      continue;
    }
    if (fields.size() < 3 || fields.size() > 4) throw SchemaError(where + ": expected 3 or 4 fields");
    Entry e;
    e.cls = class_from_string(fields[1]);
    e.roman = std::string(fields[2]);
    e.labial = fields.size() == 4 && fields[3] == "labial";
    if (!text::is_ascii(e.roman)) throw SchemaError(where + ": romanization must be ASCII");
    std::vector<char32_t> key;
    std::size_t kp = 0;
    const auto key_field = fields[0];
    while (kp < key_field.size()) {
      auto sp = key_field.find(' ', kp);
      if (sp == std::string_view::npos) sp = key_field.size();
      key.push_back(parse_codepoint(key_field.substr(kp, sp - kp)));
      kp = sp + 1;
    }
    for (char32_t cp : key) {
      if (!text::is_devanagari(cp)) throw SchemaError(where + ": key outside U+0900..U+097F");
    }
    if (key.size() == 1) {
      scheme.block_[key[0] - 0x0900] = e;
      seen[key[0] - 0x0900] = true;
    } else if (key.size() == 2) {
      scheme.sequences_[{key[0], key[1]}] = e;
    } else {
      throw SchemaError(where + ": keys are one or two codepoints");
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw SchemaError("scheme does not map " + cp_key(0x0900 + static_cast<char32_t>(i)));
  }
  if (!text::is_ascii(scheme.anusvara_labial)) throw SchemaError("anusvara_labial must be ASCII");
  return scheme;
}

TranslitScheme TranslitScheme::from_file(const std::string& path) { return parse(text::read_file(path)); }

const TranslitScheme& TranslitScheme::hinglish() {
  static const TranslitScheme scheme = parse(embedded::translit_scheme);
  return scheme;
}

const TranslitScheme::Entry* TranslitScheme::sequence(char32_t first, char32_t second) const {
  auto it = sequences_.find({first, second});
  return it == sequences_.end() ? nullptr : &it->second;
}

void TranslitReport::merge(const TranslitReport& other) {
  for (const auto& [cp, n] : other.unmapped) unmapped[cp] += n;
  for (const auto& [cp, n] : other.dropped) dropped[cp] += n;
}

nlohmann::json TranslitReport::to_json() const {
  nlohmann::json j{{"unmapped", nlohmann::json::object()}, {"dropped", nlohmann::json::object()}};
  for (const auto& [cp, n] : unmapped) j["unmapped"][cp_key(cp)] = n;
  for (const auto& [cp, n] : dropped) j["dropped"][cp_key(cp)] = n;
  return j;
}

std::string transliterate(std::string_view input, const TranslitScheme& scheme, TranslitReport* report) {
  const auto cps = text::to_codepoints(input);
  std::string out;
  out.reserve(input.size());

  // State for the current Devanagari word.
  bool pending_schwa = false;  // last consonant still owes its inherent vowel
  bool after_virama = false;   // previous letter was a virama
  bool cluster = false;        // pending consonant closes a conjunct
  std::size_t units = 0;       // vowel-bearing units started in this word

  auto end_word = [&] {
    if (pending_schwa) {
      const bool drop = scheme.schwa_deletion && units > 1 && !cluster;
      if (!drop) out.push_back('a');
    }
    pending_schwa = false;
    after_virama = false;
    cluster = false;
    units = 0;
  };
  auto flush_medial = [&] {
    if (pending_schwa) out.push_back('a');
    pending_schwa = false;
  };

  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (!text::is_devanagari(cp)) {
      end_word();
      text::append_utf8(out, cp);
      if (cp >= 0x80 && report) ++report->unmapped[cp];
      continue;
    }
    const TranslitScheme::Entry* entry = &scheme.at(cp);
    if (i + 1 < cps.size()) {
      if (const auto* seq = scheme.sequence(cp, cps[i + 1])) {
        entry = seq;
        ++i;
      }
    }
    switch (entry->cls) {
      case TranslitClass::consonant:
        flush_medial();
        cluster = after_virama;
        if (!after_virama) ++units;
        out += entry->roman;
        pending_schwa = true;
        after_virama = false;
        break;
      case TranslitClass::matra:
        pending_schwa = false;
        after_virama = false;
        out += entry->roman;
        break;
      case TranslitClass::virama:
        pending_schwa = false;
        after_virama = true;
        break;
      case TranslitClass::vowel:
        flush_medial();
        ++units;
        after_virama = false;
        out += entry->roman;
        break;
      case TranslitClass::anusvara:
      case TranslitClass::chandrabindu: {
        flush_medial();
        after_virama = false;
        bool labial = false;
        if (entry->cls == TranslitClass::anusvara && i + 1 < cps.size() && text::is_devanagari(cps[i + 1])) {
          const auto& next = scheme.at(cps[i + 1]);
          labial = next.cls == TranslitClass::consonant && next.labial;
        }
        out += labial ? scheme.anusvara_labial : entry->roman;
        break;
      }
      case TranslitClass::visarga:
        flush_medial();
        after_virama = false;
        out += entry->roman;
        break;
      case TranslitClass::nukta:
        out += entry->roman;
        break;
      case TranslitClass::digit:
      case TranslitClass::sign:
        end_word();
        out += entry->roman;
        break;
      case TranslitClass::drop:
        if (report) ++report->dropped[cp];
        break;
    }
  }
  end_word();
  return out;
}

Document transliterate_document(const Document& doc, const TranslitScheme& scheme, TranslitReport* report) {
  Document out = doc;
  out.id = doc.id + std::string(kTranslitIdSuffix);
  out.script = Script::latin;
  out.provenance = Provenance::synthetic_transliterated;
  out.meta["source_id"] = doc.id;
  out.quality.reset();
  out.signature.reset();
  // Sentence splits fall on whitespace or after a danda, both of which end a
  // word, so romanizing sentences separately agrees with romanizing the cell.
  for (auto& block : out.blocks) {
    for (auto& piece : block.layout) piece = transliterate(piece, scheme, report);
    for (auto& cell : block.cells) cell = transliterate(cell, scheme, report);
    for (auto& cs : block.sentences) {
      for (auto& t : cs.texts) t = transliterate(t, scheme);
      for (auto& s : cs.seps) s = transliterate(s, scheme);
    }
  }
  return out;
}

std::vector<Document> transliterate_corpus(const std::vector<Document>& docs, const TranslitScheme& scheme,
                                           TranslitReport* report, std::size_t workers) {
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].script == Script::devanagari) picked.push_back(i);
  }
  std::vector<TranslitReport> reports(picked.size());
  auto out = parallel_map<Document>(picked.size(), workers, [&](std::size_t k) {
    return transliterate_document(docs[picked[k]], scheme, &reports[k]);
  });
  if (report) {
    for (const auto& r : reports) report->merge(r);
  }
  return out;
}

}  // namespace hicurate
