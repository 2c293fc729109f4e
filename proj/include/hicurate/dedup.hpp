#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicurate/corpus.hpp"

namespace hicurate {

// Sorted, duplicate-free character w-grams.
using ShingleSet = std::vector<std::string>;

// Character w-grams (over codepoints) after whitespace normalization and ASCII
// case folding. Text shorter than w yields a single shingle: the whole text.
ShingleSet shingle(std::string_view text, std::size_t w);

// fnv1a64 of each shingle, sorted and unique. Same hashes minhash() uses.
std::vector<std::uint64_t> shingle_hashes(std::string_view text, std::size_t w);

double exact_jaccard(const ShingleSet& a, const ShingleSet& b);

class DedupError : public Error {
 public:
  using Error::Error;
};

// k minima under k seeded hash functions h_i(x) = mix64(fnv1a64(x) ^ salt_i).
MinHashSignature minhash(const ShingleSet& shingles, std::size_t k, std::uint64_t seed);
MinHashSignature minhash_from_hashes(std::span<const std::uint64_t> hashes, std::size_t k, std::uint64_t seed);

// Fraction of agreeing positions. Signatures must share k and seed.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

// Probability that two sets with Jaccard j share at least one band.
double lsh_candidate_probability(double j, std::size_t bands, std::size_t rows);

struct CandidatePair {
  std::size_t a = 0;  // a < b, indices into the signature list
  std::size_t b = 0;
  auto operator<=>(const CandidatePair&) const = default;
};

// Banded LSH index. Each band keys its buckets on the band's exact values, so
// a pair is a candidate iff it agrees on every row of some band. Bands are
// independent; with workers > 1 each band is owned by one thread.
class LshIndex {
 public:
  LshIndex(std::size_t bands, std::size_t rows);

  std::size_t bands() const { return bands_; }
  std::size_t rows() const { return rows_; }

  // Throws DedupError when the signature length is not bands * rows.
  void build(std::span<const MinHashSignature> signatures, std::size_t workers = 1);
  // Sorted and unique.
  std::vector<CandidatePair> candidates() const;

 private:
  std::size_t bands_;
  std::size_t rows_;
  std::vector<std::vector<std::vector<std::size_t>>> buckets_;  // band -> buckets (size >= 2)
};

std::vector<CandidatePair> lsh_candidates(std::span<const MinHashSignature> signatures, std::size_t bands,
                                          std::size_t rows, std::size_t workers = 1);

struct DedupEntry {
  std::string id;
  Provenance provenance = Provenance::real_web;
  MinHashSignature signature;
};

struct DupCluster {
  std::size_t cluster_id = 0;
  std::vector<std::string> members;  // survivor first, then in survivor order
  std::string survivor;
  // Verified pairs (member ids) with their similarity.
  std::vector<std::tuple<std::string, std::string, double>> edges;
};

nlohmann::json to_json(const DupCluster& c);

// Similarity used to verify a candidate pair, by entry index.
using PairVerifier = std::function<double(std::size_t, std::size_t)>;

// Unions candidate pairs whose similarity is >= verify_threshold (estimated
// Jaccard by default, or `verifier`) and returns clusters of two or more. The
// survivor of each cluster is real-web before synthetic, then smallest id.
std::vector<DupCluster> resolve_clusters(std::span<const DedupEntry> entries,
                                         const std::vector<CandidatePair>& candidates, double verify_threshold,
                                         const PairVerifier& verifier = {});

struct DedupOptions {
  std::size_t shingle_width = 5;
  std::size_t num_hashes = 128;
  std::size_t bands = 16;
  std::size_t rows = 8;
  double verify_threshold = 0.8;
  bool exact_verify = false;
  std::uint64_t seed = 0x5eed;
  std::size_t workers = 1;
  bool keep_signatures = false;
};

struct DedupResult {
  std::vector<Document> kept;
  std::vector<Document> removed;
  std::vector<DupCluster> clusters;
  std::size_t candidate_pairs = 0;
};

// Whole-document near-duplicate removal: each cluster keeps its survivor.
// Order within kept and removed follows the input.
DedupResult dedup_corpus(std::vector<Document> docs, const DedupOptions& options = {});

}  // namespace hicurate
