#include "hicurate/docparse.hpp"

#include <algorithm>
#include <optional>

#include "hicurate/embedded_data.hpp"
#include "hicurate/text.hpp"

namespace hicurate {

AbbreviationGuard::AbbreviationGuard(const std::vector<std::string>& entries) {
  for (const auto& e : entries) entries_.insert(text::ascii_lower(e));
}

const AbbreviationGuard& AbbreviationGuard::defaults() {
  static const AbbreviationGuard guard = [] {
    auto entries = text::parse_word_list(embedded::abbreviations_en);
    auto hi = text::parse_word_list(embedded::abbreviations_hi);
    entries.insert(entries.end(), hi.begin(), hi.end());
    return AbbreviationGuard(entries);
  }();
  return guard;
}

AbbreviationGuard AbbreviationGuard::from_files(const std::vector<std::string>& paths) {
  std::vector<std::string> entries;
  for (const auto& p : paths) {
    auto list = text::parse_word_list(text::read_file(p));
    entries.insert(entries.end(), list.begin(), list.end());
  }
  return AbbreviationGuard(entries);
}

bool AbbreviationGuard::contains(std::string_view word) const {
  return entries_.count(text::ascii_lower(word)) > 0;
}

// ---------------------------------------------------------------------------
// Block grammar

namespace {

struct Line {
  std::string_view content;
  std::string_view eol;
};

std::vector<Line> split_lines(std::string_view raw) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    auto nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back({raw.substr(pos), {}});
      break;
    }
    std::size_t end = nl;
    if (end > pos && raw[end - 1] == '\r') --end;
    lines.push_back({raw.substr(pos, end - pos), raw.substr(end, nl + 1 - end)});
    pos = nl + 1;
  }
  return lines;
}

bool is_blank(char c) { return c == ' ' || c == '\t'; }

std::size_t indent_of(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && is_blank(s[i])) ++i;
  return i;
}

// Length of the marker (indent, marker, following blanks) or nullopt.
std::optional<std::size_t> heading_marker(std::string_view s) {
  std::size_t i = indent_of(s);
  if (i > 3) return std::nullopt;
  std::size_t hashes = 0;
  while (i < s.size() && s[i] == '#') ++i, ++hashes;
  if (hashes == 0 || hashes > 6) return std::nullopt;
  if (i < s.size() && !is_blank(s[i])) return std::nullopt;
  while (i < s.size() && is_blank(s[i])) ++i;
  return i;
}

std::optional<std::size_t> bullet_marker(std::string_view s) {
  std::size_t i = indent_of(s);
  if (i >= s.size() || (s[i] != '-' && s[i] != '*' && s[i] != '+')) return std::nullopt;
  ++i;
  if (i >= s.size() || !is_blank(s[i])) return std::nullopt;
  while (i < s.size() && is_blank(s[i])) ++i;
  return i;
}

std::optional<std::size_t> numbered_marker(std::string_view s) {
  std::size_t i = indent_of(s);
  std::size_t digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  if (digits == 0 || digits > 9) return std::nullopt;
  if (i >= s.size() || (s[i] != '.' && s[i] != ')')) return std::nullopt;
  ++i;
  if (i >= s.size() || !is_blank(s[i])) return std::nullopt;
  while (i < s.size() && is_blank(s[i])) ++i;
  return i;
}

// A table row split at unescaped pipes. `pieces` alternate with the pipes:
// lead `|` p0 `|` p1 ... `|` tail.
struct TableRow {
  std::string_view lead;  // indentation before the first pipe
  std::vector<std::string_view> pieces;
  std::string_view tail;  // after the last pipe
  bool tail_is_cell = false;

  std::size_t cell_count() const { return pieces.size() + (tail_is_cell ? 1 : 0); }
};

std::optional<TableRow> table_row(std::string_view s) {
  const std::size_t start = indent_of(s);
  if (start >= s.size() || s[start] != '|') return std::nullopt;
  TableRow row;
  row.lead = s.substr(0, start);
  std::size_t piece_start = start + 1;
  for (std::size_t i = start + 1; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      ++i;
      continue;
    }
    if (s[i] == '|') {
      row.pieces.push_back(s.substr(piece_start, i - piece_start));
      piece_start = i + 1;
    }
  }
  row.tail = s.substr(piece_start);
  row.tail_is_cell = !text::trim(row.tail).empty();
  if (row.cell_count() == 0) return std::nullopt;
  return row;
}

bool is_alignment_row(const TableRow& row) {
  auto cell_ok = [](std::string_view p) {
    auto t = text::trim(p);
    if (t.empty()) return false;
    bool dash = false;
    for (char c : t) {
      if (c == '-') {
        dash = true;
      } else if (c != ':') {
        return false;
      }
    }
    return dash;
  };
  for (auto p : row.pieces) {
    if (!cell_ok(p)) return false;
  }
  return !row.tail_is_cell || cell_ok(row.tail);
}

class BlockBuilder {
 public:
  void layout(std::string_view s) {
    if (blocks_.empty()) {
      prefix_ += s;
    } else {
      blocks_.back().layout.back() += s;
    }
  }

  void cell(std::string_view s) {
    auto& b = blocks_.back();
    b.cells.emplace_back(s);
    b.layout.emplace_back();
  }

  Block& open(BlockKind kind) {
    Block b;
    b.kind = kind;
    b.columns = kind == BlockKind::table ? 0 : 1;
    if (blocks_.empty()) b.layout[0] = std::move(prefix_);
    blocks_.push_back(std::move(b));
    return blocks_.back();
  }

  // Splits s into leading blanks, core, trailing whitespace; core becomes a cell.
  void trimmed_cell(std::string_view s) {
    const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    std::size_t b = 0;
    while (b < s.size() && is_ws(s[b])) ++b;
    if (b == s.size()) {
      layout(s);
      cell({});
      return;
    }
    std::size_t e = s.size();
    while (e > b && is_ws(s[e - 1])) --e;
    layout(s.substr(0, b));
    cell(s.substr(b, e - b));
    layout(s.substr(e));
  }

  bool empty() const { return blocks_.empty(); }
  Block& back() { return blocks_.back(); }

  std::vector<Block> finish() {
    if (blocks_.empty()) {
      Block b;
      b.layout[0] = std::move(prefix_);
      blocks_.push_back(std::move(b));
    }
    return std::move(blocks_);
  }

 private:
  std::vector<Block> blocks_;
  std::string prefix_;
};

}  // namespace

Script detect_script(std::string_view raw) {
  std::size_t deva = 0;
  std::size_t latin = 0;
  for (std::size_t i = 0; i < raw.size();) {
    auto d = text::decode_at(raw, i);
    if (d.cp >= 0x0900 && d.cp <= 0x097F) {
      ++deva;
    } else if ((d.cp >= 'a' && d.cp <= 'z') || (d.cp >= 'A' && d.cp <= 'Z')) {
      ++latin;
    }
    i += d.len;
  }
  return deva > latin ? Script::devanagari : Script::latin;
}

Document parse_document(std::string_view raw, std::string lang, std::string id) {
  enum class Open { none, paragraph, bullet, numbered, table };
  BlockBuilder out;
  Open open = Open::none;
  std::string para_raw;

  auto close = [&] {
    if (open == Open::paragraph) {
      out.open(BlockKind::paragraph);
      out.trimmed_cell(para_raw);
      para_raw.clear();
    }
    open = Open::none;
  };

  for (const auto& line : split_lines(raw)) {
    const auto content = line.content;
    if (text::trim(content).empty()) {
      close();
      out.layout(content);
      out.layout(line.eol);
      continue;
    }
    if (auto m = heading_marker(content)) {
      close();
      out.open(BlockKind::heading);
      out.layout(content.substr(0, *m));
      out.trimmed_cell(content.substr(*m));
      out.layout(line.eol);
      continue;
    }
    if (auto row = table_row(content)) {
      const bool align = is_alignment_row(*row);
      if (open != Open::table ||
          (!align && out.back().columns != 0 && out.back().columns != row->cell_count())) {
        close();
        out.open(BlockKind::table);
        open = Open::table;
      }
      if (align) {
        out.layout(content);
      } else {
        auto& block = out.back();
        if (block.columns == 0) block.columns = row->cell_count();
        out.layout(row->lead);
        out.layout("|");
        for (auto p : row->pieces) {
          out.trimmed_cell(p);
          out.layout("|");
        }
        if (row->tail_is_cell) {
          out.trimmed_cell(row->tail);
        } else {
          out.layout(row->tail);
        }
      }
      out.layout(line.eol);
      continue;
    }
    const auto bullet = bullet_marker(content);
    const auto numbered = bullet ? std::nullopt : numbered_marker(content);
    if (bullet || numbered) {
      const Open want = bullet ? Open::bullet : Open::numbered;
      if (open != want) {
        close();
        out.open(bullet ? BlockKind::bullet_list : BlockKind::numbered_list);
        open = want;
      }
      const std::size_t m = bullet ? *bullet : *numbered;
      out.layout(content.substr(0, m));
      out.trimmed_cell(content.substr(m));
      out.layout(line.eol);
      continue;
    }
    if (open != Open::paragraph) {
      close();
      open = Open::paragraph;
    }
    para_raw.append(content);
    para_raw.append(line.eol);
  }
  close();

  Document doc;
  doc.id = std::move(id);
  doc.lang = std::move(lang);
  doc.script = detect_script(raw);
  doc.blocks = out.finish();
  return doc;
}

// ---------------------------------------------------------------------------
// Sentence segmentation

namespace {

bool is_terminator(char32_t cp) { return cp == U'.' || cp == U'!' || cp == U'?' || cp == 0x0964 || cp == 0x0965; }

bool is_closer(char32_t cp) {
  switch (cp) {
    case U'"': case U'\'': case U')': case U']': case U'}':
    case 0x201D: case 0x2019: case 0x00BB:
      return true;
    default:
      return false;
  }
}

bool is_opener(char32_t cp) {
  switch (cp) {
    case U'"': case U'\'': case U'(': case U'[': case U'{':
    case 0x201C: case 0x2018: case 0x00AB:
      return true;
    default:
      return false;
  }
}

}  // namespace

CellSentences segment_cell(std::string_view cell, const AbbreviationGuard& guard) {
  CellSentences out;
  const std::size_t n = cell.size();

  auto skip_space = [&](std::size_t i) {
    while (i < n) {
      auto d = text::decode_at(cell, i);
      if (!text::is_space(d.cp)) break;
      i += d.len;
    }
    return i;
  };

  std::size_t start = skip_space(0);
  out.seps.emplace_back(cell.substr(0, start));
  std::size_t word_start = start;
  std::size_t i = start;
  while (i < n) {
    auto d = text::decode_at(cell, i);
    if (text::is_space(d.cp)) {
      i += d.len;
      word_start = i;
      continue;
    }
    if (!is_terminator(d.cp)) {
      i += d.len;
      continue;
    }
    // Consume the terminator run and any closing punctuation.
    std::size_t k = i;
    bool danda = false;
    bool only_periods = true;
    while (k < n) {
      auto e = text::decode_at(cell, k);
      if (is_terminator(e.cp)) {
        danda = danda || e.cp == 0x0964 || e.cp == 0x0965;
        only_periods = only_periods && e.cp == U'.';
      } else if (!is_closer(e.cp)) {
        break;
      }
      k += e.len;
    }
    const bool at_break = k == n || text::is_space(text::decode_at(cell, k).cp);
    bool boundary = danda || at_break;
    if (boundary && !danda && only_periods && k - i == 1) {
      std::size_t w = word_start;
      while (w < i) {
        auto e = text::decode_at(cell, w);
        if (!is_opener(e.cp)) break;
        w += e.len;
      }
      if (w < i && guard.contains(cell.substr(w, k - w))) boundary = false;
    }
    if (!boundary) {
      i = k;
      continue;
    }
    out.texts.emplace_back(cell.substr(start, k - start));
    const std::size_t next = skip_space(k);
    out.seps.emplace_back(cell.substr(k, next - k));
    start = next;
    word_start = next;
    i = next;
  }
  if (start < n) {
    // Trailing sentence without a terminator.
    std::size_t end = start;
    std::size_t last_non_space = start;
    while (end < n) {
      auto d = text::decode_at(cell, end);
      end += d.len;
      if (!text::is_space(d.cp)) last_non_space = end;
    }
    out.texts.emplace_back(cell.substr(start, last_non_space - start));
    out.seps.emplace_back(cell.substr(last_non_space));
  }
  return out;
}

Document segment_sentences(Document doc, const AbbreviationGuard& guard) {
  for (auto& block : doc.blocks) {
    block.sentences.clear();
    block.sentences.reserve(block.cells.size());
    for (const auto& c : block.cells) block.sentences.push_back(segment_cell(c, guard));
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Reassembly

Document apply_replacements(const Document& doc, const Replacements& replacements) {
  Document out = doc;
  for (const auto& [loc, text] : replacements) {
    if (loc.block >= out.blocks.size()) throw UnknownLocationError(loc);
    auto& block = out.blocks[loc.block];
    if (loc.cell >= block.sentences.size()) throw UnknownLocationError(loc);
    auto& cs = block.sentences[loc.cell];
    if (loc.sentence >= cs.texts.size()) throw UnknownLocationError(loc);
    cs.texts[loc.sentence] = text;
  }
  for (auto& block : out.blocks) {
    for (std::size_t c = 0; c < block.sentences.size(); ++c) block.cells[c] = block.sentences[c].join();
  }
  return out;
}

std::string reassemble(const Document& doc, const Replacements& replacements) {
  return apply_replacements(doc, replacements).render();
}

}  // namespace hicurate
