#include "hicurate/corpus.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "hicurate/hashing.hpp"
#include "hicurate/text.hpp"

namespace hicurate {

using nlohmann::json;

std::string_view to_string(Script s) { return s == Script::devanagari ? "devanagari" : "latin"; }

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::real_web: return "real-web";
    case Provenance::synthetic_translated: return "synthetic-translated";
    case Provenance::synthetic_transliterated: return "synthetic-transliterated";
  }
  return "?";
}

std::string_view to_string(BlockKind k) {
  switch (k) {
    case BlockKind::paragraph: return "paragraph";
    case BlockKind::heading: return "heading";
    case BlockKind::bullet_list: return "bullet_list";
    case BlockKind::numbered_list: return "numbered_list";
    case BlockKind::table: return "table";
  }
  return "?";
}

Script script_from_string(std::string_view s) {
  if (s == "devanagari") return Script::devanagari;
  if (s == "latin") return Script::latin;
  throw SchemaError("unknown script '" + std::string(s) + "'");
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "real-web") return Provenance::real_web;
  if (s == "synthetic-translated") return Provenance::synthetic_translated;
  if (s == "synthetic-transliterated") return Provenance::synthetic_transliterated;
  throw SchemaError("unknown provenance '" + std::string(s) + "'");
}

BlockKind block_kind_from_string(std::string_view s) {
  for (auto k : {BlockKind::paragraph, BlockKind::heading, BlockKind::bullet_list, BlockKind::numbered_list,
                 BlockKind::table}) {
    if (to_string(k) == s) return k;
  }
  throw SchemaError("unknown block kind '" + std::string(s) + "'");
}

std::string CellSentences::join() const {
  std::string out;
  for (std::size_t i = 0; i < seps.size(); ++i) {
    out += seps[i];
    if (i < texts.size()) out += texts[i];
  }
  return out;
}

std::string Block::render() const {
  std::string out;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    out += layout[i];
    if (i < cells.size()) out += cells[i];
  }
  return out;
}

std::string Document::render() const {
  std::string out;
  for (const auto& b : blocks) out += b.render();
  return out;
}

std::vector<std::string_view> Document::text_units() const {
  std::vector<std::string_view> out;
  for (const auto& b : blocks) {
    if (b.segmented()) {
      for (const auto& cs : b.sentences) {
        for (const auto& t : cs.texts) out.emplace_back(t);
      }
    } else {
      for (const auto& c : b.cells) out.emplace_back(c);
    }
  }
  return out;
}

std::vector<Sentence> collect_sentences(const Document& doc) {
  std::vector<Sentence> out;
  for (std::size_t b = 0; b < doc.blocks.size(); ++b) {
    const auto& block = doc.blocks[b];
    for (std::size_t c = 0; c < block.sentences.size(); ++c) {
      const auto& texts = block.sentences[c].texts;
      for (std::size_t s = 0; s < texts.size(); ++s) out.push_back({texts[s], b, c, s});
    }
  }
  return out;
}

std::string content_address_id(std::string_view source, std::uint64_t offset) {
  std::string key(source);
  key.push_back('\x1f');
  key += std::to_string(offset);
  return "d" + sha256_hex(key).substr(0, 16);
}

void validate(const Document& doc) {
  if (doc.id.empty()) throw SchemaError("document id is empty");
  if (doc.lang.empty()) throw SchemaError("document '" + doc.id + "' has no lang");
  if (doc.blocks.empty()) throw SchemaError("document '" + doc.id + "' has no blocks");
  if (doc.provenance == Provenance::synthetic_transliterated && doc.script != Script::latin) {
    throw SchemaError("document '" + doc.id + "': transliterated documents must be latin script");
  }
  for (std::size_t i = 0; i < doc.blocks.size(); ++i) {
    const auto& b = doc.blocks[i];
    const std::string where = "document '" + doc.id + "' block " + std::to_string(i);
    if (b.layout.size() != b.cells.size() + 1) throw SchemaError(where + ": layout/cell count mismatch");
    if (b.kind == BlockKind::table) {
      if (b.columns == 0 && !b.cells.empty()) throw SchemaError(where + ": table with zero columns");
      if (b.columns != 0 && b.cells.size() % b.columns != 0) throw SchemaError(where + ": ragged table");
    } else if (b.columns != 1) {
      throw SchemaError(where + ": only tables may have columns != 1");
    }
    if (!b.sentences.empty()) {
      if (b.sentences.size() != b.cells.size()) throw SchemaError(where + ": sentence/cell count mismatch");
      for (std::size_t c = 0; c < b.cells.size(); ++c) {
        const auto& cs = b.sentences[c];
        if (cs.seps.size() != cs.texts.size() + 1 || cs.join() != b.cells[c]) {
          throw SchemaError(where + " cell " + std::to_string(c) + ": sentences do not rejoin to cell text");
        }
      }
    }
  }
  if (doc.quality && !(doc.quality->log_perplexity >= 0.0)) {
    throw SchemaError("document '" + doc.id + "': log_perplexity must be >= 0");
  }
  if (doc.quality && doc.quality->roundtrip_similarity) {
    const double s = *doc.quality->roundtrip_similarity;
    if (!(s >= 0.0 && s <= 1.0)) throw SchemaError("document '" + doc.id + "': roundtrip_similarity outside [0,1]");
  }
}

json to_json(const Document& doc) {
  json blocks = json::array();
  for (const auto& b : doc.blocks) {
    json jb{{"kind", to_string(b.kind)}, {"cells", b.cells}, {"layout", b.layout}};
    if (b.kind == BlockKind::table) jb["columns"] = b.columns;
    if (!b.sentences.empty()) {
      json sents = json::array();
      for (const auto& cs : b.sentences) sents.push_back({{"texts", cs.texts}, {"seps", cs.seps}});
      jb["sentences"] = std::move(sents);
    }
    blocks.push_back(std::move(jb));
  }
  json j{{"id", doc.id},
         {"lang", doc.lang},
         {"script", to_string(doc.script)},
         {"provenance", to_string(doc.provenance)},
         {"blocks", std::move(blocks)},
         {"meta", doc.meta}};
  if (doc.quality) {
    json q{{"log_perplexity", doc.quality->log_perplexity}};
    if (doc.quality->roundtrip_similarity) q["roundtrip_similarity"] = *doc.quality->roundtrip_similarity;
    j["quality"] = std::move(q);
  }
  if (doc.signature) j["signature"] = {{"seed", doc.signature->seed}, {"values", doc.signature->values}};
  return j;
}

namespace {

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, std::string_view what) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || k == key;
    if (!ok) throw SchemaError("unknown " + std::string(what) + " field '" + key + "'");
  }
}

}  // namespace

Document document_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("document must be a JSON object");
  reject_unknown(j, {"id", "lang", "script", "provenance", "blocks", "meta", "quality", "signature"}, "document");
  Document doc;
  doc.id = required<std::string>(j, "id");
  doc.lang = required<std::string>(j, "lang");
  if (doc.id.empty()) throw SchemaError("field 'id' is empty");
  if (doc.lang.empty()) throw SchemaError("field 'lang' is empty");
  doc.script = script_from_string(j.value("script", "latin"));
  doc.provenance = provenance_from_string(j.value("provenance", "real-web"));
  if (j.contains("meta")) doc.meta = required<std::map<std::string, std::string>>(j, "meta");
  for (const auto& jb : required<json>(j, "blocks")) {
    reject_unknown(jb, {"kind", "cells", "layout", "columns", "sentences"}, "block");
    Block b;
    b.kind = block_kind_from_string(required<std::string>(jb, "kind"));
    b.cells = required<std::vector<std::string>>(jb, "cells");
    b.layout = required<std::vector<std::string>>(jb, "layout");
    b.columns = jb.value("columns", std::size_t{1});
    if (jb.contains("sentences")) {
      for (const auto& js : jb.at("sentences")) {
        b.sentences.push_back({required<std::vector<std::string>>(js, "texts"),
                               required<std::vector<std::string>>(js, "seps")});
      }
    }
    doc.blocks.push_back(std::move(b));
  }
  if (j.contains("quality")) {
    const auto& q = j.at("quality");
    QualityScores qs;
    qs.log_perplexity = required<double>(q, "log_perplexity");
    if (q.contains("roundtrip_similarity")) qs.roundtrip_similarity = required<double>(q, "roundtrip_similarity");
    doc.quality = qs;
  }
  if (j.contains("signature")) {
    const auto& s = j.at("signature");
    doc.signature = MinHashSignature{required<std::uint64_t>(s, "seed"),
                                     required<std::vector<std::uint64_t>>(s, "values")};
  }
  validate(doc);
  return doc;
}

std::string canonical_line(const Document& doc) { return to_json(doc).dump(); }

std::size_t count_tokens(const Document& doc, const Tokenizer& tokenizer) {
  std::size_t n = 0;
  for (const auto& b : doc.blocks) {
    for (const auto& c : b.cells) n += tokenizer.count(c);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Manifests

json to_json(const ShardManifest& m) {
  json j{{"shard", m.shard},
         {"stage", m.stage},
         {"documents", m.documents},
         {"token_counts", m.token_counts},
         {"provenance", m.provenance},
         {"languages", m.languages},
         {"content_sha256", m.content_sha256},
         {"stage_checksums", m.stage_checksums}};
  if (m.seed) j["seed"] = *m.seed;
  return j;
}

ShardManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("manifest must be a JSON object");
  ShardManifest m;
  m.shard = required<std::string>(j, "shard");
  m.stage = j.value("stage", "");
  m.documents = required<std::uint64_t>(j, "documents");
  m.token_counts = j.value("token_counts", std::map<std::string, std::uint64_t>{});
  m.provenance = j.value("provenance", std::map<std::string, std::uint64_t>{});
  m.languages = j.value("languages", std::map<std::string, std::uint64_t>{});
  m.content_sha256 = j.value("content_sha256", "");
  m.stage_checksums = j.value("stage_checksums", std::map<std::string, std::string>{});
  if (j.contains("seed")) m.seed = required<std::uint64_t>(j, "seed");
  validate(m);
  return m;
}

void validate(const ShardManifest& m) {
  std::uint64_t prov = 0;
  for (const auto& [_, n] : m.provenance) prov += n;
  std::uint64_t langs = 0;
  for (const auto& [_, n] : m.languages) langs += n;
  if (prov != m.documents) throw SchemaError("manifest provenance breakdown does not sum to document count");
  if (!m.languages.empty() && langs != m.documents) {
    throw SchemaError("manifest language breakdown does not sum to document count");
  }
}

std::string manifest_path_for(const std::string& shard_path) { return shard_path + ".manifest.json"; }

void write_manifest(const ShardManifest& m, const std::string& path) {
  text::write_file(path, to_json(m).dump(2) + "\n");
}

ShardManifest read_manifest(const std::string& path) {
  try {
    return manifest_from_json(json::parse(text::read_file(path)));
  } catch (const json::parse_error& e) {
    throw SchemaError("malformed manifest " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shard I/O

namespace {

bool is_gzip_path(const std::string& path) { return path.size() >= 3 && path.ends_with(".gz"); }

class LineSource {
 public:
  explicit LineSource(const std::string& path) : gz_(is_gzip_path(path)) {
    if (gz_) {
      gzf_ = gzopen(path.c_str(), "rb");
      if (!gzf_) throw IoError("cannot open " + path);
    } else {
      in_.open(path, std::ios::binary);
      if (!in_) throw IoError("cannot open " + path);
    }
    path_ = path;
  }
  ~LineSource() {
    if (gzf_) gzclose(gzf_);
  }
  LineSource(const LineSource&) = delete;
  LineSource& operator=(const LineSource&) = delete;

  bool getline(std::string& line) {
    if (!gz_) {
      if (!std::getline(in_, line)) {
        if (in_.bad()) throw IoError("read failed: " + path_);
        return false;
      }
      return true;
    }
    line.clear();
    char buf[8192];
    while (true) {
      if (gzgets(gzf_, buf, sizeof buf) == nullptr) {
        int err = 0;
        gzerror(gzf_, &err);
        if (err != Z_OK && err != Z_STREAM_END) throw IoError("gzip read failed: " + path_);
        return !line.empty();
      }
      line += buf;
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        return true;
      }
    }
  }

 private:
  bool gz_;
  gzFile gzf_ = nullptr;
  std::ifstream in_;
  std::string path_;
};

class LineSink {
 public:
  explicit LineSink(const std::string& path) : gz_(is_gzip_path(path)), path_(path) {
    if (gz_) {
      gzf_ = gzopen(path.c_str(), "wb");
      if (!gzf_) throw IoError("cannot open " + path + " for writing");
    } else {
      out_.open(path, std::ios::binary | std::ios::trunc);
      if (!out_) throw IoError("cannot open " + path + " for writing");
    }
  }
  ~LineSink() {
    if (gzf_) gzclose(gzf_);
  }
  LineSink(const LineSink&) = delete;
  LineSink& operator=(const LineSink&) = delete;

  void write(std::string_view data) {
    if (gz_) {
      if (!data.empty() && gzwrite(gzf_, data.data(), static_cast<unsigned>(data.size())) == 0) {
        throw IoError("gzip write failed: " + path_);
      }
    } else {
      out_.write(data.data(), static_cast<std::streamsize>(data.size()));
      if (!out_) throw IoError("write failed: " + path_);
    }
  }

  void close() {
    if (gz_) {
      if (gzf_ && gzclose(gzf_) != Z_OK) throw IoError("gzip close failed: " + path_);
      gzf_ = nullptr;
    } else {
      out_.close();
      if (!out_) throw IoError("close failed: " + path_);
    }
  }

 private:
  bool gz_;
  gzFile gzf_ = nullptr;
  std::ofstream out_;
  std::string path_;
};

struct Sha256Stream {
  Sha256Stream() : ctx(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr); }
  ~Sha256Stream() { EVP_MD_CTX_free(ctx); }
  Sha256Stream(const Sha256Stream&) = delete;
  Sha256Stream& operator=(const Sha256Stream&) = delete;
  void update(std::string_view s) { EVP_DigestUpdate(ctx, s.data(), s.size()); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out.push_back(kHex[md[i] >> 4]);
      out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
  }
  EVP_MD_CTX* ctx;
};

}  // namespace

struct ShardReader::Impl {
  explicit Impl(const std::string& path) : source(path) {}
  LineSource source;
  std::size_t line_no = 0;
  std::string line;
};

ShardReader::ShardReader(const std::string& path) : impl_(std::make_unique<Impl>(path)) {}
ShardReader::~ShardReader() = default;
ShardReader::ShardReader(ShardReader&&) noexcept = default;
ShardReader& ShardReader::operator=(ShardReader&&) noexcept = default;

std::optional<ShardEntry> ShardReader::next() {
  auto& s = *impl_;
  while (s.source.getline(s.line)) {
    ++s.line_no;
    if (!s.line.empty() && s.line.back() == '\r') s.line.pop_back();
    if (text::trim(s.line).empty()) continue;
    try {
      return ShardEntry{document_from_json(json::parse(s.line))};
    } catch (const json::parse_error& e) {
      return ShardEntry{LineError{s.line_no, std::string("invalid JSON: ") + e.what()}};
    } catch (const SchemaError& e) {
      return ShardEntry{LineError{s.line_no, e.what()}};
    }
  }
  return std::nullopt;
}

ShardContents read_shard(const std::string& path) {
  ShardContents out;
  ShardReader reader(path);
  while (auto entry = reader.next()) {
    if (auto* doc = std::get_if<Document>(&*entry)) {
      out.documents.push_back(std::move(*doc));
    } else {
      out.errors.push_back(std::get<LineError>(*entry));
    }
  }
  return out;
}

struct ShardWriter::Impl {
  Impl(const std::string& p, WriteOptions o) : path(p), options(std::move(o)), sink(p) {}
  std::string path;
  WriteOptions options;
  LineSink sink;
  Sha256Stream sha;
  std::unordered_set<std::string> ids;
  ShardManifest manifest;
  bool finished = false;
};

ShardWriter::ShardWriter(const std::string& path, WriteOptions options)
    : impl_(std::make_unique<Impl>(path, std::move(options))) {
  auto& m = impl_->manifest;
  m.shard = std::filesystem::path(path).filename().string();
  m.stage = impl_->options.stage;
  m.stage_checksums = impl_->options.stage_checksums;
  m.seed = impl_->options.seed;
  for (const auto& t : impl_->options.tokenizers) m.token_counts[t.id()] = 0;
}

ShardWriter::~ShardWriter() = default;
ShardWriter::ShardWriter(ShardWriter&&) noexcept = default;
ShardWriter& ShardWriter::operator=(ShardWriter&&) noexcept = default;

void ShardWriter::write(const Document& doc) {
  auto& s = *impl_;
  if (s.finished) throw InvalidArgument("write after finish");
  validate(doc);
  if (!s.ids.insert(doc.id).second) throw DuplicateIdError(doc.id);
  std::string line = canonical_line(doc);
  line.push_back('\n');
  s.sink.write(line);
  s.sha.update(line);
  auto& m = s.manifest;
  ++m.documents;
  ++m.provenance[std::string(to_string(doc.provenance))];
  ++m.languages[doc.lang];
  for (const auto& t : s.options.tokenizers) m.token_counts[t.id()] += count_tokens(doc, t);
}

ShardManifest ShardWriter::finish() {
  auto& s = *impl_;
  if (s.finished) return s.manifest;
  s.finished = true;
  s.sink.close();
  s.manifest.content_sha256 = s.sha.hex();
  if (s.options.write_manifest) write_manifest(s.manifest, manifest_path_for(s.path));
  return s.manifest;
}

ShardManifest write_shard(const std::vector<Document>& docs, const std::string& path, WriteOptions options) {
  ShardWriter writer(path, std::move(options));
  for (const auto& d : docs) writer.write(d);
  return writer.finish();
}

}  // namespace hicurate
