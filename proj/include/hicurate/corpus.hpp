#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicurate/error.hpp"
#include "hicurate/tokenizer.hpp"

namespace hicurate {

enum class Script { devanagari, latin };
enum class Provenance { real_web, synthetic_translated, synthetic_transliterated };
enum class BlockKind { paragraph, heading, bullet_list, numbered_list, table };

std::string_view to_string(Script s);
std::string_view to_string(Provenance p);
std::string_view to_string(BlockKind k);
Script script_from_string(std::string_view s);
Provenance provenance_from_string(std::string_view s);
BlockKind block_kind_from_string(std::string_view s);

// Sentence split of one cell. `seps` has texts.size() + 1 entries: the leading
// whitespace, the separators between sentences, and the trailing whitespace.
// seps[0] + texts[0] + seps[1] + ... + texts[n-1] + seps[n] == cell text.
struct CellSentences {
  std::vector<std::string> texts;
  std::vector<std::string> seps;

  std::string join() const;
  friend bool operator==(const CellSentences&, const CellSentences&) = default;
};

// A structural unit of a document. Translatable text lives in `cells`; every
// other byte (list markers, table pipes, newlines, indentation) lives in
// `layout`, which interleaves the cells:
//   layout[0] + cells[0] + layout[1] + ... + cells[n-1] + layout[n]
// Tables store cells row-major with `columns` cells per row.
struct Block {
  BlockKind kind = BlockKind::paragraph;
  std::vector<std::string> cells;
  std::vector<std::string> layout{""};
  std::size_t columns = 1;
  // Empty until segmented, then exactly one entry per cell.
  std::vector<CellSentences> sentences;

  std::string render() const;
  std::size_t rows() const { return columns == 0 ? 0 : cells.size() / columns; }
  bool segmented() const { return !cells.empty() && sentences.size() == cells.size(); }

  friend bool operator==(const Block&, const Block&) = default;
};

struct QualityScores {
  double log_perplexity = 0.0;
  std::optional<double> roundtrip_similarity;

  friend bool operator==(const QualityScores&, const QualityScores&) = default;
};

struct MinHashSignature {
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> values;

  friend bool operator==(const MinHashSignature&, const MinHashSignature&) = default;
};

struct Document {
  std::string id;
  std::string lang;
  Script script = Script::latin;
  Provenance provenance = Provenance::real_web;
  std::vector<Block> blocks;
  std::optional<QualityScores> quality;
  std::optional<MinHashSignature> signature;
  std::map<std::string, std::string> meta;

  // The document's raw text, reproduced from its blocks.
  std::string render() const;

  // Text units for statistics: sentence texts when segmented, cell texts otherwise.
  std::vector<std::string_view> text_units() const;

  friend bool operator==(const Document&, const Document&) = default;
};

// Locates one sentence inside a document.
struct Sentence {
  std::string text;
  std::size_t block_index = 0;
  std::size_t cell_index = 0;
  std::size_t sent_index = 0;
};

std::vector<Sentence> collect_sentences(const Document& doc);

// Stable id derived from where a document came from.
std::string content_address_id(std::string_view source, std::uint64_t offset);

// Throws SchemaError when the document violates its invariants.
void validate(const Document& doc);

nlohmann::json to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

// One line of JSONL with keys in canonical (sorted) order, no trailing newline.
std::string canonical_line(const Document& doc);

std::size_t count_tokens(const Document& doc, const Tokenizer& tokenizer);

// ---------------------------------------------------------------------------
// Shards

struct ShardManifest {
  std::string shard;  // file name, relative to the manifest's directory
  std::string stage;
  std::uint64_t documents = 0;
  std::map<std::string, std::uint64_t> token_counts;  // tokenizer id -> tokens
  std::map<std::string, std::uint64_t> provenance;
  std::map<std::string, std::uint64_t> languages;
  std::string content_sha256;
  std::map<std::string, std::string> stage_checksums;  // upstream stage -> checksum
  std::optional<std::uint64_t> seed;

  friend bool operator==(const ShardManifest&, const ShardManifest&) = default;
};

nlohmann::json to_json(const ShardManifest& m);
ShardManifest manifest_from_json(const nlohmann::json& j);

std::string manifest_path_for(const std::string& shard_path);
void write_manifest(const ShardManifest& m, const std::string& path);
ShardManifest read_manifest(const std::string& path);

// Self-consistency checks: provenance and language breakdowns sum to the
// document count. Throws SchemaError.
void validate(const ShardManifest& m);

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

using ShardEntry = std::variant<Document, LineError>;

// Streams a JSONL shard (plain or `.gz`). Malformed lines produce a LineError
// and reading continues with the next line.
class ShardReader {
 public:
  explicit ShardReader(const std::string& path);
  ~ShardReader();
  ShardReader(ShardReader&&) noexcept;
  ShardReader& operator=(ShardReader&&) noexcept;

  std::optional<ShardEntry> next();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ShardContents {
  std::vector<Document> documents;
  std::vector<LineError> errors;
};

ShardContents read_shard(const std::string& path);

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id) : Error("duplicate_id", "duplicate document id '" + id + "'") {}
};

struct WriteOptions {
  std::string stage;
  std::vector<Tokenizer> tokenizers{Tokenizer::whitespace()};
  std::map<std::string, std::string> stage_checksums;
  std::optional<std::uint64_t> seed;
  bool write_manifest = true;
};

// Writes a JSONL shard (gzip when the path ends in `.gz`) and accumulates its
// manifest. Rejects duplicate ids. The manifest is finalized by finish().
class ShardWriter {
 public:
  ShardWriter(const std::string& path, WriteOptions options = {});
  ~ShardWriter();
  ShardWriter(ShardWriter&&) noexcept;
  ShardWriter& operator=(ShardWriter&&) noexcept;

  void write(const Document& doc);
  ShardManifest finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ShardManifest write_shard(const std::vector<Document>& docs, const std::string& path, WriteOptions options = {});

}  // namespace hicurate
