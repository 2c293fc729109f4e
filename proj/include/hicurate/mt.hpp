#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicurate/corpus.hpp"

namespace hicurate {

struct LanguagePair {
  std::string src;
  std::string tgt;
};

struct BatchLimits {
  std::size_t max_sentences = 32;
  std::size_t max_chars = 8000;
};

// Transport-level failure; translate calls retry these.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& message) : Error("backend_unavailable", message) {}
};

// The backend broke its one-translation-per-sentence contract. Never retried.
class CountMismatchError : public Error {
 public:
  CountMismatchError(std::size_t sent, std::size_t received)
      : Error("count_mismatch", "backend returned " + std::to_string(received) + " translations for " +
                                    std::to_string(sent) + " sentences") {}
};

// Sentence-level translation service. Implementations must return exactly one
// translation per input, in order, and be safe to call from several threads.
class TranslationBackend {
 public:
  virtual ~TranslationBackend() = default;
  virtual std::vector<std::string> translate(const std::vector<std::string>& sentences, const LanguagePair& pair) = 0;
  virtual std::string describe() const = 0;
};

class EchoBackend final : public TranslationBackend {
 public:
  std::vector<std::string> translate(const std::vector<std::string>& sentences, const LanguagePair&) override {
    return sentences;
  }
  std::string describe() const override { return "mock:echo"; }
};

// Applies a per-sentence function; for mocks and tests.
class FunctionBackend final : public TranslationBackend {
 public:
  using Fn = std::function<std::string(const std::string&)>;
  FunctionBackend(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::vector<std::string> translate(const std::vector<std::string>& sentences, const LanguagePair&) override;
  std::string describe() const override { return name_; }

 private:
  std::string name_;
  Fn fn_;
};

// Word-by-word lookup from a two-column TSV (source<TAB>target). Lookup is on
// the lowercased word with edge punctuation peeled off; misses pass through.
class DictionaryBackend final : public TranslationBackend {
 public:
  explicit DictionaryBackend(const std::string& path);
  DictionaryBackend(std::string name, std::map<std::string, std::string> entries)
      : name_(std::move(name)), entries_(std::move(entries)) {}
  std::vector<std::string> translate(const std::vector<std::string>& sentences, const LanguagePair&) override;
  std::string describe() const override { return name_; }

 private:
  std::string name_;
  std::map<std::string, std::string> entries_;
};

// POST <base>/translate with {"src_lang","tgt_lang","sentences":[...]}; the
// reply is {"translations":[...]}. When HICURATE_MT_API_KEY is set it is sent
// as a bearer token.
class HttpBackend final : public TranslationBackend {
 public:
  explicit HttpBackend(std::string endpoint, std::chrono::seconds timeout = std::chrono::seconds(60));
  std::vector<std::string> translate(const std::vector<std::string>& sentences, const LanguagePair& pair) override;
  std::string describe() const override { return endpoint_; }

 private:
  std::string endpoint_;
  std::string base_;
  std::string path_;
  std::chrono::seconds timeout_;
};

// Wire format helpers shared by the client and test servers.
nlohmann::json translate_request_json(const std::vector<std::string>& sentences, const LanguagePair& pair);
std::vector<std::string> parse_translate_reply(std::string_view body);

// "mock:echo", "mock:reverse", "dict:<tsv path>", or an http(s):// URL.
std::unique_ptr<TranslationBackend> make_backend(const std::string& descriptor);

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_delay{250};
  double multiplier = 2.0;
};

struct TranslateOptions {
  BatchLimits limits;
  RetryPolicy retry;
  std::size_t concurrency = 8;
};

// Splits sentences into batches under the limits; a sentence longer than
// max_chars travels alone.
std::vector<std::vector<std::string>> make_batches(const std::vector<std::string>& sentences, const BatchLimits& limits);

// Translates all sentences batch by batch, retrying transport failures with
// exponential backoff. Output order matches input order.
std::vector<std::string> translate_sentences(TranslationBackend& backend, const std::vector<std::string>& sentences,
                                             const LanguagePair& pair, const TranslateOptions& options = {});

// Translates every sentence of a segmented document and rebuilds it with the
// original layout. The result has provenance synthetic-translated, lang = tgt
// and id `<id>~<tgt>`.
Document translate_document(const Document& doc, TranslationBackend& backend, const LanguagePair& pair,
                            const TranslateOptions& options = {});

// Up to options.concurrency documents in flight; output order = input order.
std::vector<Document> translate_corpus(const std::vector<Document>& docs, TranslationBackend& backend,
                                       const LanguagePair& pair, const TranslateOptions& options = {});

// ---------------------------------------------------------------------------
// Round-trip similarity

struct ChrfOptions {
  int max_order = 6;
  double beta = 2.0;
  bool case_fold = false;
  bool ignore_whitespace = true;
};

// Character n-gram F-score over codepoints. Precision and recall are averaged
// over the orders that occur in either string; orders absent from both are
// skipped. Two empty strings score 1.
double chrf_similarity(std::string_view hypothesis, std::string_view reference, const ChrfOptions& options = {});

struct SentencePair {
  std::string id;
  std::string example_id;  // groups sentences of one SFT/DPO example; may be empty
  std::string source;
  std::string target;
  std::optional<std::string> backtranslated;
  std::optional<double> similarity;
};

nlohmann::json to_json(const SentencePair& p);
SentencePair sentence_pair_from_json(const nlohmann::json& j);

struct RoundTripResult {
  std::vector<SentencePair> kept;
  std::vector<SentencePair> rejected;
};

// Raised when the backend fails for good; holds everything finished so far.
class RoundTripAborted : public Error {
 public:
  RoundTripAborted(RoundTripResult partial, std::size_t completed, const std::string& cause)
      : Error("backend_unavailable", "round-trip filter aborted after " + std::to_string(completed) +
                                         " pairs: " + cause),
        partial(std::move(partial)),
        completed(completed) {}
  RoundTripResult partial;
  std::size_t completed;
};

// Back-translates each target (pair.tgt -> pair.src), scores chrF of the
// back-translation against the source, and rejects pairs below threshold.
// `pair` names the forward direction.
RoundTripResult roundtrip_filter(const std::vector<SentencePair>& pairs, TranslationBackend& backend,
                                 const LanguagePair& pair, double threshold = 0.5,
                                 const TranslateOptions& options = {});

// Example-level roll-up: mean sentence similarity per example id.
std::map<std::string, double> example_similarity(const std::vector<SentencePair>& pairs);

}  // namespace hicurate
