#include "hicurate/quality_filter.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hicurate/parallel.hpp"
#include "hicurate/text.hpp"

namespace hicurate {

namespace {

constexpr char kSep = '\x1f';

std::string join_tokens(std::span<const std::string> tokens) {
  std::string key;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) key.push_back(kSep);
    key += tokens[i];
  }
  return key;
}

std::string_view drop_first(std::string_view key) {
  const auto p = key.find(kSep);
  return p == std::string_view::npos ? std::string_view{} : key.substr(p + 1);
}

std::string_view context_of(std::string_view key) {
  const auto p = key.rfind(kSep);
  return p == std::string_view::npos ? std::string_view{} : key.substr(0, p);
}

}  // namespace

std::string_view to_string(Smoothing s) {
  switch (s) {
    case Smoothing::kneser_ney: return "kneser-ney";
    case Smoothing::add_k: return "add-k";
    case Smoothing::mle: return "mle";
    case Smoothing::uniform: return "uniform";
  }
  return "?";
}

Smoothing smoothing_from_string(std::string_view s) {
  for (auto v : {Smoothing::kneser_ney, Smoothing::add_k, Smoothing::mle, Smoothing::uniform}) {
    if (to_string(v) == s) return v;
  }
  throw InvalidArgument("unknown smoothing '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Counts

NGramCounts::NGramCounts(int order, bool end_of_sentence) : order_(order), end_of_sentence_(end_of_sentence) {
  if (order < 1) throw LmError("invalid_order", "n-gram order must be >= 1");
}

void NGramCounts::add_sentence(std::span<const std::string> tokens) {
  if (tokens.empty()) return;
  std::vector<std::string> padded(static_cast<std::size_t>(order_ - 1), std::string(kBos));
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  if (end_of_sentence_) padded.emplace_back(kEos);
  const auto n = static_cast<std::size_t>(order_);
  for (std::size_t end = n; end <= padded.size(); ++end) {
    ++counts_[join_tokens(std::span(padded).subspan(end - n, n))];
    ++total_;
  }
}

void NGramCounts::add(const std::string& key, std::uint64_t count) {
  counts_[key] += count;
  total_ += count;
}

void NGramCounts::merge(const NGramCounts& other) {
  if (other.order_ != order_ || other.end_of_sentence_ != end_of_sentence_) {
    throw LmError("incompatible_counts", "cannot merge counts of different order or padding");
  }
  for (const auto& [key, c] : other.counts_) counts_[key] += c;
  total_ += other.total_;
}

// ---------------------------------------------------------------------------
// Model

NGramModel NGramModel::build(const NGramCounts& counts, std::string tokenizer_id, Smoothing smoothing, double add_k) {
  if (counts.empty()) throw LmError("empty_corpus", "cannot build a language model from an empty corpus");
  NGramModel m;
  m.order_ = counts.order();
  m.tokenizer_id_ = std::move(tokenizer_id);
  m.end_of_sentence_ = counts.end_of_sentence();
  m.add_k_ = add_k;
  m.counts_ = counts;
  const auto n = static_cast<std::size_t>(m.order_);

  m.level_counts_.assign(n, {});
  m.level_contexts_.assign(n, {});
  m.level_counts_[n - 1] = counts.counts();
  const bool kn = smoothing == Smoothing::kneser_ney;
  for (std::size_t lvl = n - 1; lvl > 0; --lvl) {
    auto& lower = m.level_counts_[lvl - 1];
    for (const auto& [key, c] : m.level_counts_[lvl]) lower[std::string(drop_first(key))] += kn ? 1 : c;
  }
  for (std::size_t lvl = 0; lvl < n; ++lvl) {
    for (const auto& [key, c] : m.level_counts_[lvl]) {
      auto& s = m.level_contexts_[lvl][std::string(context_of(key))];
      s.total += c;
      ++s.distinct;
    }
  }

  std::vector<std::string> vocab;
  for (const auto& [key, _] : m.level_counts_[0]) vocab.emplace_back(key);
  std::sort(vocab.begin(), vocab.end());
  m.vocab_ = std::move(vocab);
  for (std::size_t i = 0; i < m.vocab_.size(); ++i) m.vocab_index_[m.vocab_[i]] = i;
  m.outcomes_ = m.vocab_.size() + 1;

  if (kn) {
    for (std::size_t lvl = 0; lvl < n; ++lvl) {
      std::uint64_t n1 = 0;
      std::uint64_t n2 = 0;
      for (const auto& [_, c] : m.level_counts_[lvl]) {
        n1 += c == 1;
        n2 += c == 2;
      }
      if (n1 == 0 || n2 == 0) {
        smoothing = Smoothing::add_k;
        m.discounts_.clear();
        break;
      }
      m.discounts_.push_back(static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2));
    }
  }
  if (smoothing == Smoothing::add_k && kn) {
    // Rebuild the lower levels as raw marginals for consistency with add-k.
    return build(counts, m.tokenizer_id_, Smoothing::add_k, add_k);
  }
  m.smoothing_ = smoothing;
  return m;
}

NGramModel NGramModel::uniform(std::string tokenizer_id, std::size_t outcomes) {
  if (outcomes == 0) throw LmError("invalid_vocab", "uniform model needs at least one outcome");
  NGramModel m;
  m.tokenizer_id_ = std::move(tokenizer_id);
  m.smoothing_ = Smoothing::uniform;
  m.outcomes_ = outcomes;
  m.end_of_sentence_ = true;
  return m;
}

double NGramModel::prob(std::span<const std::string> context, std::string_view word) const {
  if (smoothing_ == Smoothing::uniform) return 1.0 / static_cast<double>(outcomes_);
  const std::string w = known(word) ? std::string(word) : std::string(kUnk);

  const auto n = static_cast<std::size_t>(order_);
  std::vector<std::string> ctx;
  ctx.reserve(n - 1);
  const std::size_t have = std::min(context.size(), n - 1);
  for (std::size_t i = have; i < n - 1; ++i) ctx.emplace_back(kBos);
  for (std::size_t i = context.size() - have; i < context.size(); ++i) {
    const auto& t = context[i];
    ctx.push_back(t == kBos || known(t) ? t : std::string(kUnk));
  }

  auto count_of = [&](std::size_t lvl, const std::string& ctx_key) -> std::uint64_t {
    const auto& counts = level_counts_[lvl];
    auto it = counts.find(ctx_key.empty() ? w : ctx_key + kSep + w);
    return it == counts.end() ? 0 : it->second;
  };

  if (smoothing_ == Smoothing::add_k || smoothing_ == Smoothing::mle) {
    const std::string key = join_tokens(ctx);
    auto it = level_contexts_[n - 1].find(key);
    const double total = it == level_contexts_[n - 1].end() ? 0.0 : static_cast<double>(it->second.total);
    const double c = static_cast<double>(count_of(n - 1, key));
    if (smoothing_ == Smoothing::mle) return total > 0 ? c / total : 0.0;
    return (c + add_k_) / (total + add_k_ * static_cast<double>(outcomes_));
  }

  double p = 1.0 / static_cast<double>(outcomes_);
  for (std::size_t lvl = 0; lvl < n; ++lvl) {
    const std::string key = join_tokens(std::span(ctx).subspan(n - 1 - lvl, lvl));
    auto it = level_contexts_[lvl].find(key);
    if (it == level_contexts_[lvl].end()) break;
    const double total = static_cast<double>(it->second.total);
    const double d = discounts_[lvl];
    const double c = static_cast<double>(count_of(lvl, key));
    p = std::max(c - d, 0.0) / total + d * static_cast<double>(it->second.distinct) / total * p;
  }
  return p;
}

nlohmann::json NGramModel::to_json() const {
  nlohmann::json j{{"format", "hicurate-ngram/1"},
                   {"order", order_},
                   {"tokenizer_id", tokenizer_id_},
                   {"smoothing", to_string(smoothing_)},
                   {"end_of_sentence", end_of_sentence_},
                   {"add_k", add_k_},
                   {"discounts", discounts_},
                   {"outcomes", outcomes_}};
  std::map<std::string, std::uint64_t> sorted(counts_.counts().begin(), counts_.counts().end());
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, c] : sorted) {
    nlohmann::json row = nlohmann::json::array();
    std::size_t pos = 0;
    while (true) {
      auto p = key.find(kSep, pos);
      row.push_back(key.substr(pos, p == std::string::npos ? std::string::npos : p - pos));
      if (p == std::string::npos) break;
      pos = p + 1;
    }
    row.push_back(c);
    rows.push_back(std::move(row));
  }
  j["counts"] = std::move(rows);
  return j;
}

NGramModel NGramModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "hicurate-ngram/1") throw LmError("bad_model", "unsupported model format");
    const auto smoothing = smoothing_from_string(j.at("smoothing").get<std::string>());
    const auto tokenizer_id = j.at("tokenizer_id").get<std::string>();
    if (smoothing == Smoothing::uniform) return uniform(tokenizer_id, j.at("outcomes").get<std::size_t>());
    NGramCounts counts(j.at("order").get<int>(), j.at("end_of_sentence").get<bool>());
    for (const auto& row : j.at("counts")) {
      std::vector<std::string> tokens;
      for (std::size_t i = 0; i + 1 < row.size(); ++i) tokens.push_back(row[i].get<std::string>());
      if (tokens.size() != static_cast<std::size_t>(counts.order())) throw LmError("bad_model", "n-gram of wrong order");
      counts.add(join_tokens(tokens), row.back().get<std::uint64_t>());
    }
    // A stored add-k model may have been a Kneser-Ney request that fell back;
    // rebuilding with the stored smoothing reproduces it either way.
    auto m = build(counts, tokenizer_id, smoothing, j.at("add_k").get<double>());
    if (m.smoothing_ != smoothing) throw LmError("bad_model", "stored smoothing does not match the counts");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LmError("bad_model", std::string("malformed model file: ") + e.what());
  }
}

void NGramModel::save(const std::string& path) const { text::write_file(path, to_json().dump() + "\n"); }

NGramModel NGramModel::load(const std::string& path) {
  try {
    return from_json(nlohmann::json::parse(text::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw LmError("bad_model", "malformed model file " + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training and scoring

NGramCounts count_ngrams(std::span<const Document> docs, const Tokenizer& tokenizer, int order, bool end_of_sentence,
                         std::size_t workers) {
  workers = std::max<std::size_t>(1, std::min(workers, docs.size()));
  std::vector<NGramCounts> parts(workers, NGramCounts(order, end_of_sentence));
  const std::size_t chunk = (docs.size() + workers - 1) / std::max<std::size_t>(workers, 1);
  parallel_for(workers, workers, [&](std::size_t w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(docs.size(), begin + chunk);
    for (std::size_t i = begin; i < end; ++i) {
      for (auto unit : docs[i].text_units()) parts[w].add_sentence(tokenizer.tokenize(unit));
    }
  });
  NGramCounts merged(order, end_of_sentence);
  for (const auto& p : parts) merged.merge(p);
  return merged;
}

NGramModel train_lm(std::span<const Document> docs, const Tokenizer& tokenizer, const LmOptions& options) {
  if (options.order < 1 || options.order > 5) throw LmError("invalid_order", "n-gram order must be in [1, 5]");
  if (docs.empty()) throw LmError("empty_corpus", "no training documents");
  auto counts = count_ngrams(docs, tokenizer, options.order, options.end_of_sentence, options.workers);
  return NGramModel::build(counts, tokenizer.id(), options.smoothing, options.add_k);
}

double PerplexityResult::perplexity() const { return std::exp(log_perplexity); }

PerplexityResult score_document(const NGramModel& model, const Document& doc, const Tokenizer& tokenizer) {
  if (model.tokenizer_id() != tokenizer.id()) throw TokenizerMismatchError(model.tokenizer_id(), tokenizer.id());
  double nll = 0.0;
  std::size_t n = 0;
  const auto ctx_len = static_cast<std::size_t>(model.order() - 1);
  for (auto unit : doc.text_units()) {
    auto tokens = tokenizer.tokenize(unit);
    if (tokens.empty()) continue;
    if (model.end_of_sentence()) tokens.emplace_back(kEos);
    std::vector<std::string> context(ctx_len, std::string(kBos));
    for (auto& tok : tokens) {
      nll -= std::log(model.prob(context, tok));
      ++n;
      if (ctx_len > 0) {
        context.erase(context.begin());
        context.push_back(std::move(tok));
      }
    }
  }
  return {n == 0 ? 0.0 : nll / static_cast<double>(n), n};
}

double perplexity(const NGramModel& model, const Document& doc, const Tokenizer& tokenizer) {
  return score_document(model, doc, tokenizer).perplexity();
}

// ---------------------------------------------------------------------------
// Calibration and filtering

nlohmann::json FilterCalibration::to_json() const {
  nlohmann::json j{{"target_discard_rate", target_discard_rate},
                   {"achieved_rate", achieved_rate},
                   {"calibration_size", calibration_size}};
  j["threshold"] = std::isinf(threshold) ? nlohmann::json(nullptr) : nlohmann::json(threshold);
  return j;
}

FilterCalibration FilterCalibration::from_json(const nlohmann::json& j) {
  FilterCalibration c;
  c.threshold = j.at("threshold").is_null() ? std::numeric_limits<double>::infinity() : j.at("threshold").get<double>();
  c.target_discard_rate = j.at("target_discard_rate").get<double>();
  c.achieved_rate = j.at("achieved_rate").get<double>();
  c.calibration_size = j.at("calibration_size").get<std::size_t>();
  return c;
}

FilterCalibration calibrate_threshold(std::span<const double> scores, double target_discard_rate) {
  if (!(target_discard_rate > 0.0 && target_discard_rate < 1.0)) {
    throw InvalidArgument("discard rate must be in (0, 1)");
  }
  if (scores.empty()) throw InvalidArgument("cannot calibrate on an empty score set");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // Nearest rank; the epsilon keeps (1 - 0.02) * 1000 from rounding up to 981.
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - target_discard_rate) * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  FilterCalibration c;
  c.threshold = sorted[rank - 1];
  c.target_discard_rate = target_discard_rate;
  c.calibration_size = sorted.size();
  const auto above = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), c.threshold));
  c.achieved_rate = static_cast<double>(above) / n;
  return c;
}

std::vector<Document> score_corpus(std::vector<Document> docs, const NGramModel& model, const Tokenizer& tokenizer,
                                   std::size_t workers) {
  if (model.tokenizer_id() != tokenizer.id()) throw TokenizerMismatchError(model.tokenizer_id(), tokenizer.id());
  parallel_for(docs.size(), workers, [&](std::size_t i) {
    const auto r = score_document(model, docs[i], tokenizer);
    auto q = docs[i].quality.value_or(QualityScores{});
    q.log_perplexity = r.log_perplexity;
    docs[i].quality = q;
  });
  return docs;
}

FilterResult filter_corpus(std::vector<Document> docs, const NGramModel& model, const Tokenizer& tokenizer,
                           const FilterCalibration& calibration, std::size_t workers) {
  docs = score_corpus(std::move(docs), model, tokenizer, workers);
  FilterResult out;
  for (auto& d : docs) {
    (calibration.discards(d.quality->log_perplexity) ? out.discarded : out.kept).push_back(std::move(d));
  }
  return out;
}

}  // namespace hicurate
