#include "hicurate/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "hicurate/hashing.hpp"
#include "hicurate/parallel.hpp"
#include "hicurate/text.hpp"

namespace hicurate {
namespace {

template <typename Visit>
void for_each_window(std::string_view raw, std::size_t w, Visit&& visit) {
  const std::string norm = text::ascii_lower(text::normalize_whitespace(raw));
  // Byte offsets of each codepoint start, plus the end.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < norm.size(); i += text::decode_at(norm, i).len) starts.push_back(i);
  const std::size_t n = starts.size();
  starts.push_back(norm.size());
  if (n < w) {
    visit(std::string_view(norm));
    return;
  }
  for (std::size_t i = 0; i + w <= n; ++i) {
    visit(std::string_view(norm).substr(starts[i], starts[i + w] - starts[i]));
  }
}

std::vector<std::uint64_t> salts_for(std::size_t k, std::uint64_t seed) {
  std::vector<std::uint64_t> salts(k);
  for (std::size_t i = 0; i < k; ++i) salts[i] = mix64(mix64(seed) + i);
  return salts;
}

}  // namespace

ShingleSet shingle(std::string_view text, std::size_t w) {
  if (w == 0) throw DedupError("invalid_argument", "shingle width must be >= 1");
  ShingleSet out;
  for_each_window(text, w, [&](std::string_view s) { out.emplace_back(s); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint64_t> shingle_hashes(std::string_view text, std::size_t w) {
  if (w == 0) throw DedupError("invalid_argument", "shingle width must be >= 1");
  std::vector<std::uint64_t> out;
  for_each_window(text, w, [&](std::string_view s) { out.push_back(fnv1a64(s)); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double exact_jaccard(const ShingleSet& a, const ShingleSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++inter, ++i, ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

MinHashSignature minhash_from_hashes(std::span<const std::uint64_t> hashes, std::size_t k, std::uint64_t seed) {
  if (hashes.empty()) throw DedupError("empty_shingles", "cannot sign an empty shingle set");
  if (k == 0) throw DedupError("invalid_argument", "signature length must be >= 1");
  const auto salts = salts_for(k, seed);
  MinHashSignature sig{seed, std::vector<std::uint64_t>(k, std::numeric_limits<std::uint64_t>::max())};
  for (auto h : hashes) {
    for (std::size_t i = 0; i < k; ++i) sig.values[i] = std::min(sig.values[i], mix64(h ^ salts[i]));
  }
  return sig;
}

MinHashSignature minhash(const ShingleSet& shingles, std::size_t k, std::uint64_t seed) {
  std::vector<std::uint64_t> hashes;
  hashes.reserve(shingles.size());
  for (const auto& s : shingles) hashes.push_back(fnv1a64(s));
  return minhash_from_hashes(hashes, k, seed);
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.values.size() != b.values.size() || a.seed != b.seed) {
    throw DedupError("incompatible_signatures", "signatures differ in length or seed");
  }
  if (a.values.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) same += a.values[i] == b.values[i];
  return static_cast<double>(same) / static_cast<double>(a.values.size());
}

double lsh_candidate_probability(double j, std::size_t bands, std::size_t rows) {
  return 1.0 - std::pow(1.0 - std::pow(j, static_cast<double>(rows)), static_cast<double>(bands));
}

// ---------------------------------------------------------------------------
// LSH

LshIndex::LshIndex(std::size_t bands, std::size_t rows) : bands_(bands), rows_(rows) {
  if (bands == 0 || rows == 0) throw DedupError("invalid_argument", "bands and rows must be >= 1");
}

void LshIndex::build(std::span<const MinHashSignature> signatures, std::size_t workers) {
  for (const auto& s : signatures) {
    if (s.values.size() != bands_ * rows_) {
      throw DedupError("invalid_banding", "bands * rows = " + std::to_string(bands_ * rows_) +
                                              " but signature length is " + std::to_string(s.values.size()));
    }
  }
  buckets_.assign(bands_, {});
  parallel_for(bands_, workers, [&](std::size_t band) {
    struct KeyHash {
      std::size_t operator()(const std::vector<std::uint64_t>& v) const {
        std::uint64_t h = kFnvOffset;
        for (auto x : v) h = mix64(h ^ x);
        return static_cast<std::size_t>(h);
      }
    };
    std::unordered_map<std::vector<std::uint64_t>, std::vector<std::size_t>, KeyHash> table;
    for (std::size_t i = 0; i < signatures.size(); ++i) {
      const auto* begin = signatures[i].values.data() + band * rows_;
      table[std::vector<std::uint64_t>(begin, begin + rows_)].push_back(i);
    }
    auto& out = buckets_[band];
    for (auto& [_, members] : table) {
      if (members.size() >= 2) out.push_back(std::move(members));
    }
  });
}

std::vector<CandidatePair> LshIndex::candidates() const {
  std::vector<CandidatePair> out;
  for (const auto& band : buckets_) {
    for (const auto& members : band) {
      for (std::size_t x = 0; x < members.size(); ++x) {
        for (std::size_t y = x + 1; y < members.size(); ++y) {
          out.push_back({std::min(members[x], members[y]), std::max(members[x], members[y])});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<CandidatePair> lsh_candidates(std::span<const MinHashSignature> signatures, std::size_t bands,
                                          std::size_t rows, std::size_t workers) {
  LshIndex index(bands, rows);
  index.build(signatures, workers);
  return index.candidates();
}

// ---------------------------------------------------------------------------
// Clusters

nlohmann::json to_json(const DupCluster& c) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b, sim] : c.edges) edges.push_back({{"a", a}, {"b", b}, {"jaccard", sim}});
  return {{"cluster_id", c.cluster_id}, {"members", c.members}, {"survivor", c.survivor}, {"edges", edges}};
}

namespace {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a), b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

int provenance_rank(Provenance p) { return p == Provenance::real_web ? 0 : 1; }

}  // namespace

std::vector<DupCluster> resolve_clusters(std::span<const DedupEntry> entries,
                                         const std::vector<CandidatePair>& candidates, double verify_threshold,
                                         const PairVerifier& verifier) {
  std::vector<CandidatePair> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  UnionFind uf(entries.size());
  std::vector<std::tuple<std::size_t, std::size_t, double>> verified;
  for (const auto& c : sorted) {
    const double sim = verifier ? verifier(c.a, c.b) : estimate_jaccard(entries[c.a].signature, entries[c.b].signature);
    if (sim >= verify_threshold) {
      uf.unite(c.a, c.b);
      verified.emplace_back(c.a, c.b, sim);
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (const auto& [a, b, _] : verified) {
    groups[uf.find(a)];
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto it = groups.find(uf.find(i));
    if (it != groups.end()) it->second.push_back(i);
  }

  auto survivor_less = [&](std::size_t x, std::size_t y) {
    const int rx = provenance_rank(entries[x].provenance);
    const int ry = provenance_rank(entries[y].provenance);
    return rx != ry ? rx < ry : entries[x].id < entries[y].id;
  };

  std::vector<DupCluster> clusters;
  std::map<std::size_t, std::size_t> cluster_of_root;
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end(), survivor_less);
    DupCluster c;
    for (auto m : members) c.members.push_back(entries[m].id);
    c.survivor = c.members.front();
    cluster_of_root[root] = clusters.size();
    clusters.push_back(std::move(c));
  }
  // Deterministic numbering by survivor id.
  std::vector<std::size_t> order(clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return clusters[x].survivor < clusters[y].survivor; });
  std::vector<std::size_t> rank(clusters.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
  for (const auto& [a, b, sim] : verified) {
    clusters[cluster_of_root[uf.find(a)]].edges.emplace_back(entries[a].id, entries[b].id, sim);
  }
  std::vector<DupCluster> out(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    clusters[i].cluster_id = rank[i];
    out[rank[i]] = std::move(clusters[i]);
  }
  return out;
}

DedupResult dedup_corpus(std::vector<Document> docs, const DedupOptions& options) {
  if (options.bands * options.rows != options.num_hashes) {
    throw DedupError("invalid_banding", "bands * rows must equal the signature length");
  }
  std::vector<ShingleSet> shingles;
  if (options.exact_verify) {
    shingles = parallel_map<ShingleSet>(docs.size(), options.workers, [&](std::size_t i) {
      return shingle(docs[i].render(), options.shingle_width);
    });
  }
  std::vector<DedupEntry> entries(docs.size());
  parallel_for(docs.size(), options.workers, [&](std::size_t i) {
    const auto hashes = shingle_hashes(docs[i].render(), options.shingle_width);
    entries[i] = {docs[i].id, docs[i].provenance, minhash_from_hashes(hashes, options.num_hashes, options.seed)};
  });

  std::vector<MinHashSignature> sigs;
  sigs.reserve(entries.size());
  for (const auto& e : entries) sigs.push_back(e.signature);
  const auto candidates = lsh_candidates(sigs, options.bands, options.rows, options.workers);

  PairVerifier verifier;
  if (options.exact_verify) {
    verifier = [&](std::size_t a, std::size_t b) { return exact_jaccard(shingles[a], shingles[b]); };
  }
  DedupResult result;
  result.candidate_pairs = candidates.size();
  result.clusters = resolve_clusters(entries, candidates, options.verify_threshold, verifier);

  std::unordered_map<std::string, bool> removed;
  for (const auto& c : result.clusters) {
    for (std::size_t m = 1; m < c.members.size(); ++m) removed[c.members[m]] = true;
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (options.keep_signatures) docs[i].signature = entries[i].signature;
    (removed.count(docs[i].id) ? result.removed : result.kept).push_back(std::move(docs[i]));
  }
  return result;
}

}  // namespace hicurate
