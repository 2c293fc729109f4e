#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

namespace hicurate {

enum class TokenizerMode { whitespace, character, vocab_greedy };

std::string_view to_string(TokenizerMode mode);
TokenizerMode tokenizer_mode_from_string(std::string_view s);

// Deterministic tokenizer identified by a stable id. All modes treat whitespace
// (including control characters) as a boundary, so tokens never contain it.
//
// vocab_greedy splits on whitespace, then segments each word by longest match
// against the vocabulary. A codepoint no vocabulary entry starts with is emitted
// as one `<0xNN>` token per UTF-8 byte.
class Tokenizer {
 public:
  static Tokenizer whitespace(std::string id = "ws");
  static Tokenizer characters(std::string id = "char");
  static Tokenizer vocab_greedy(std::string id, const std::vector<std::string>& vocab);
  static Tokenizer from_vocab_file(std::string id, const std::string& path);

  // {"id": ..., "mode": ..., "vocab_file": ...}; relative vocab paths resolve
  // against base_dir.
  static Tokenizer from_json(const nlohmann::json& spec, const std::string& base_dir = ".");

  const std::string& id() const { return id_; }
  TokenizerMode mode() const { return mode_; }
  std::size_t vocab_size() const { return vocab_ ? vocab_->size() : 0; }

  std::vector<std::string> tokenize(std::string_view text) const;
  std::size_t count(std::string_view text) const;

 private:
  Tokenizer(std::string id, TokenizerMode mode) : id_(std::move(id)), mode_(mode) {}

  template <typename Sink>
  void run(std::string_view text, Sink&& sink) const;

  struct Vocab {
    std::unordered_set<std::string> entries;
    std::size_t max_bytes = 0;
    std::size_t size() const { return entries.size(); }
  };

  std::string id_;
  TokenizerMode mode_;
  std::shared_ptr<const Vocab> vocab_;
};

// Byte-pair-merge vocabulary learner. Starts from every codepoint seen in
// `word_counts` and greedily adds the most frequent adjacent merge until the
// vocabulary reaches `target_size` or no pair occurs twice. Ties break on the
// lexicographically smallest pair so the output is deterministic.
std::vector<std::string> learn_merge_vocab(const std::map<std::string, std::uint64_t>& word_counts,
                                           std::size_t target_size);

}  // namespace hicurate
