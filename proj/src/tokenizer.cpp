#include "hicurate/tokenizer.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "hicurate/error.hpp"
#include "hicurate/text.hpp"

namespace hicurate {

std::string_view to_string(TokenizerMode mode) {
  switch (mode) {
    case TokenizerMode::whitespace: return "whitespace";
    case TokenizerMode::character: return "char";
    case TokenizerMode::vocab_greedy: return "vocab-greedy";
  }
  return "?";
}

TokenizerMode tokenizer_mode_from_string(std::string_view s) {
  if (s == "whitespace") return TokenizerMode::whitespace;
  if (s == "char") return TokenizerMode::character;
  if (s == "vocab-greedy") return TokenizerMode::vocab_greedy;
  throw InvalidArgument("unknown tokenizer mode '" + std::string(s) + "'");
}

Tokenizer Tokenizer::whitespace(std::string id) { return Tokenizer(std::move(id), TokenizerMode::whitespace); }

Tokenizer Tokenizer::characters(std::string id) { return Tokenizer(std::move(id), TokenizerMode::character); }

Tokenizer Tokenizer::vocab_greedy(std::string id, const std::vector<std::string>& vocab) {
  Tokenizer t(std::move(id), TokenizerMode::vocab_greedy);
  auto v = std::make_shared<Vocab>();
  for (const auto& entry : vocab) {
    if (entry.empty()) continue;
    v->max_bytes = std::max(v->max_bytes, entry.size());
    v->entries.insert(entry);
  }
  t.vocab_ = std::move(v);
  return t;
}

Tokenizer Tokenizer::from_vocab_file(std::string id, const std::string& path) {
  // One token per line; only the trailing newline is stripped so that tokens
  // may legitimately start with `#`.
  auto content = text::read_file(path);
  std::vector<std::string> vocab;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    auto line = content.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) vocab.push_back(std::move(line));
    pos = nl + 1;
  }
  return vocab_greedy(std::move(id), vocab);
}

Tokenizer Tokenizer::from_json(const nlohmann::json& spec, const std::string& base_dir) {
  if (!spec.is_object()) throw SchemaError("tokenizer spec must be an object");
  for (const auto& [key, _] : spec.items()) {
    if (key != "id" && key != "mode" && key != "vocab_file") {
      throw SchemaError("unknown tokenizer key '" + key + "'");
    }
  }
  const auto mode = tokenizer_mode_from_string(spec.value("mode", "whitespace"));
  std::string id = spec.value("id", std::string(to_string(mode)));
  switch (mode) {
    case TokenizerMode::whitespace: return whitespace(std::move(id));
    case TokenizerMode::character: return characters(std::move(id));
    case TokenizerMode::vocab_greedy: {
      if (!spec.contains("vocab_file")) throw SchemaError("vocab-greedy tokenizer needs vocab_file");
      std::filesystem::path p = spec.at("vocab_file").get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      return from_vocab_file(std::move(id), p.string());
    }
  }
  throw SchemaError("unreachable tokenizer mode");
}

template <typename Sink>
void Tokenizer::run(std::string_view input, Sink&& sink) const {
  std::size_t i = 0;
  const std::size_t n = input.size();
  while (i < n) {
    auto d = text::decode_at(input, i);
    if (text::is_space(d.cp)) {
      i += d.len;
      continue;
    }
    std::size_t end = i;
    while (end < n) {
      auto e = text::decode_at(input, end);
      if (text::is_space(e.cp)) break;
      end += e.len;
    }
    const std::string_view word = input.substr(i, end - i);
    switch (mode_) {
      case TokenizerMode::whitespace:
        sink(word);
        break;
      case TokenizerMode::character:
        for (std::size_t j = 0; j < word.size();) {
          auto c = text::decode_at(word, j);
          sink(word.substr(j, c.len));
          j += c.len;
        }
        break;
      case TokenizerMode::vocab_greedy: {
        std::size_t j = 0;
        while (j < word.size()) {
          std::size_t best = 0;
          // Walk codepoint boundaries forward; remember the longest hit.
          std::size_t k = j;
          while (k < word.size() && k - j < vocab_->max_bytes) {
            k += text::decode_at(word, k).len;
            if (k - j > vocab_->max_bytes) break;
            if (vocab_->entries.count(std::string(word.substr(j, k - j)))) best = k - j;
          }
          if (best == 0) {
            const auto len = text::decode_at(word, j).len;
            static constexpr char kHex[] = "0123456789ABCDEF";
            for (std::size_t b = 0; b < len; ++b) {
              const auto byte = static_cast<unsigned char>(word[j + b]);
              const char tok[] = {'<', '0', 'x', kHex[byte >> 4], kHex[byte & 0xF], '>'};
              sink(std::string_view(tok, sizeof tok));
            }
            j += len;
          } else {
            sink(word.substr(j, best));
            j += best;
          }
        }
        break;
      }
    }
    i = end;
  }
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  run(text, [&](std::string_view tok) { out.emplace_back(tok); });
  return out;
}

std::size_t Tokenizer::count(std::string_view text) const {
  std::size_t n = 0;
  run(text, [&](std::string_view) { ++n; });
  return n;
}

std::vector<std::string> learn_merge_vocab(const std::map<std::string, std::uint64_t>& word_counts,
                                           std::size_t target_size) {
  struct Word {
    std::vector<std::string> pieces;
    std::uint64_t count;
  };
  std::vector<Word> words;
  std::set<std::string> vocab;
  for (const auto& [word, count] : word_counts) {
    Word w{{}, count};
    for (std::size_t i = 0; i < word.size();) {
      auto d = text::decode_at(word, i);
      w.pieces.emplace_back(word.substr(i, d.len));
      vocab.insert(w.pieces.back());
      i += d.len;
    }
    if (!w.pieces.empty()) words.push_back(std::move(w));
  }

  while (vocab.size() < target_size) {
    std::map<std::pair<std::string, std::string>, std::uint64_t> pairs;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.pieces.size(); ++i) pairs[{w.pieces[i], w.pieces[i + 1]}] += w.count;
    }
    const std::pair<std::string, std::string>* best = nullptr;
    std::uint64_t best_count = 1;
    for (const auto& [pair, c] : pairs) {
      if (c > best_count) {
        best = &pair;
        best_count = c;
      }
    }
    if (best == nullptr) break;
    const std::string merged = best->first + best->second;
    const auto [left, right] = *best;
    for (auto& w : words) {
      std::vector<std::string> next;
      next.reserve(w.pieces.size());
      for (std::size_t i = 0; i < w.pieces.size(); ++i) {
        if (i + 1 < w.pieces.size() && w.pieces[i] == left && w.pieces[i + 1] == right) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(std::move(w.pieces[i]));
        }
      }
      w.pieces = std::move(next);
    }
    vocab.insert(merged);
  }
  return {vocab.begin(), vocab.end()};
}

}  // namespace hicurate
