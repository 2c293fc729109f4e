#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicurate/corpus.hpp"
#include "hicurate/tokenizer.hpp"

namespace hicurate {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

enum class Smoothing { kneser_ney, add_k, mle, uniform };

std::string_view to_string(Smoothing s);
Smoothing smoothing_from_string(std::string_view s);

class LmError : public Error {
 public:
  using Error::Error;
};

// Highest-order n-gram counts over padded sentences. Lower orders are derived
// when the model is built, so two NGramCounts merge by adding their maps and
// merging is exact and order-independent.
class NGramCounts {
 public:
  explicit NGramCounts(int order, bool end_of_sentence = true);

  void add_sentence(std::span<const std::string> tokens);
  void merge(const NGramCounts& other);

  int order() const { return order_; }
  bool end_of_sentence() const { return end_of_sentence_; }
  std::uint64_t total() const { return total_; }
  bool empty() const { return total_ == 0; }

  // Keys are the n-gram's tokens joined with U+001F.
  const std::unordered_map<std::string, std::uint64_t>& counts() const { return counts_; }
  void add(const std::string& key, std::uint64_t count);

  friend bool operator==(const NGramCounts& a, const NGramCounts& b) {
    return a.order_ == b.order_ && a.end_of_sentence_ == b.end_of_sentence_ && a.counts_ == b.counts_;
  }

 private:
  int order_;
  bool end_of_sentence_;
  std::uint64_t total_ = 0;
  std::unordered_map<std::string, std::uint64_t> counts_;
};

struct LmOptions {
  int order = 3;
  Smoothing smoothing = Smoothing::kneser_ney;
  double add_k = 0.1;
  // Predict an end-of-sentence token after each sentence.
  bool end_of_sentence = true;
  std::size_t workers = 1;
};

// Count-based n-gram language model. Kneser-Ney is interpolated with one
// discount per order, D = n1 / (n1 + 2 n2) from that order's count-of-counts;
// when any order has n1 == 0 or n2 == 0 the model falls back to add-k. All
// smoothed variants spread mass over vocab ∪ {<unk>}, so every token has p > 0.
class NGramModel {
 public:
  static NGramModel build(const NGramCounts& counts, std::string tokenizer_id,
                          Smoothing smoothing = Smoothing::kneser_ney, double add_k = 0.1);
  // Every outcome (including <unk>) gets 1 / outcomes.
  static NGramModel uniform(std::string tokenizer_id, std::size_t outcomes);

  // p(word | context). Only the last order()-1 context tokens matter; unknown
  // tokens map to <unk>.
  double prob(std::span<const std::string> context, std::string_view word) const;

  int order() const { return order_; }
  const std::string& tokenizer_id() const { return tokenizer_id_; }
  Smoothing smoothing() const { return smoothing_; }
  bool end_of_sentence() const { return end_of_sentence_; }
  const std::vector<double>& discounts() const { return discounts_; }
  double add_k() const { return add_k_; }
  // Predictable outcomes, <unk> included.
  std::size_t outcomes() const { return outcomes_; }
  // Sorted known tokens (</s> included when predicted).
  const std::vector<std::string>& vocab() const { return vocab_; }
  bool known(std::string_view token) const { return vocab_index_.count(std::string(token)) > 0; }
  const NGramCounts& counts() const { return counts_; }

  nlohmann::json to_json() const;
  static NGramModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static NGramModel load(const std::string& path);

 private:
  struct ContextStats {
    std::uint64_t total = 0;
    std::uint64_t distinct = 0;
  };

  NGramModel() : counts_(1) {}

  int order_ = 1;
  std::string tokenizer_id_;
  Smoothing smoothing_ = Smoothing::kneser_ney;
  bool end_of_sentence_ = true;
  double add_k_ = 0.1;
  std::size_t outcomes_ = 1;
  std::vector<double> discounts_;  // index m-1 for order m
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> vocab_index_;
  // Index m-1: counts used at order m (raw at the top order, continuation
  // counts below) and per-context totals over them.
  std::vector<std::unordered_map<std::string, std::uint64_t>> level_counts_;
  std::vector<std::unordered_map<std::string, ContextStats>> level_contexts_;
  NGramCounts counts_;
};

// Sentence-padded counts for a corpus; documents contribute their text units.
NGramCounts count_ngrams(std::span<const Document> docs, const Tokenizer& tokenizer, int order,
                         bool end_of_sentence = true, std::size_t workers = 1);

// Throws LmError on an empty corpus or an order outside [1, 5].
NGramModel train_lm(std::span<const Document> docs, const Tokenizer& tokenizer, const LmOptions& options = {});

class TokenizerMismatchError : public Error {
 public:
  TokenizerMismatchError(const std::string& model, const std::string& tokenizer)
      : Error("tokenizer_mismatch",
              "model was trained with tokenizer '" + model + "' but scoring uses '" + tokenizer + "'") {}
};

struct PerplexityResult {
  double log_perplexity = 0.0;  // mean negative log-probability, nats/token
  std::size_t tokens = 0;       // scored tokens, </s> included
  double perplexity() const;
};

PerplexityResult score_document(const NGramModel& model, const Document& doc, const Tokenizer& tokenizer);
double perplexity(const NGramModel& model, const Document& doc, const Tokenizer& tokenizer);

struct FilterCalibration {
  double threshold = std::numeric_limits<double>::infinity();  // log-perplexity cutoff
  double target_discard_rate = 0.0;
  double achieved_rate = 0.0;
  std::size_t calibration_size = 0;

  static FilterCalibration keep_all() { return {}; }
  bool discards(double log_perplexity) const { return log_perplexity > threshold; }

  nlohmann::json to_json() const;
  static FilterCalibration from_json(const nlohmann::json& j);
};

// Threshold = nearest-rank (1 - rate) quantile of the scores; scores strictly
// above it are discarded.
FilterCalibration calibrate_threshold(std::span<const double> scores, double target_discard_rate);

struct FilterResult {
  std::vector<Document> kept;
  std::vector<Document> discarded;
};

// Scores every document (setting quality.log_perplexity) and partitions by the
// calibration threshold, preserving input order within each side.
FilterResult filter_corpus(std::vector<Document> docs, const NGramModel& model, const Tokenizer& tokenizer,
                           const FilterCalibration& calibration, std::size_t workers = 1);

// Scores without partitioning.
std::vector<Document> score_corpus(std::vector<Document> docs, const NGramModel& model, const Tokenizer& tokenizer,
                                   std::size_t workers = 1);

}  // namespace hicurate
