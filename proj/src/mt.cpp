#include "hicurate/mt.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <unordered_map>

#include "hicurate/docparse.hpp"
#include "hicurate/parallel.hpp"
#include "hicurate/text.hpp"

namespace hicurate {

using nlohmann::json;

std::vector<std::string> FunctionBackend::translate(const std::vector<std::string>& sentences, const LanguagePair&) {
  std::vector<std::string> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(fn_(s));
  return out;
}

// ---------------------------------------------------------------------------
// Dictionary mock

DictionaryBackend::DictionaryBackend(const std::string& path) : name_("dict:" + path) {
  for (const auto& line : text::parse_word_list(text::read_file(path))) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw SchemaError("dictionary line without a tab: " + line);
    entries_[text::ascii_lower(line.substr(0, tab))] = std::string(text::trim(line.substr(tab + 1)));
  }
}

std::vector<std::string> DictionaryBackend::translate(const std::vector<std::string>& sentences,
                                                      const LanguagePair& pair) {
  const bool to_hindi = pair.tgt == "hi";
  auto is_punct = [](char c) { return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':' ||
                                      c == '"' || c == '\'' || c == '(' || c == ')'; };
  std::vector<std::string> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::string result;
    std::size_t i = 0;
    while (i < s.size()) {
      if (s[i] == ' ' || s[i] == '\t' || s[i] == '\n') {
        result.push_back(s[i++]);
        continue;
      }
      std::size_t end = s.find_first_of(" \t\n", i);
      if (end == std::string::npos) end = s.size();
      std::string_view word(s.data() + i, end - i);
      std::size_t b = 0;
      std::size_t e = word.size();
      while (b < e && is_punct(word[b])) ++b;
      while (e > b && is_punct(word[e - 1])) --e;
      result.append(word.substr(0, b));
      auto it = entries_.find(text::ascii_lower(word.substr(b, e - b)));
      result.append(it == entries_.end() ? std::string(word.substr(b, e - b)) : it->second);
      for (char c : word.substr(e)) {
        if (to_hindi && c == '.') {
          result.append("\xE0\xA5\xA4");  // danda
        } else {
          result.push_back(c);
        }
      }
      i = end;
    }
    out.push_back(std::move(result));
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP backend

json translate_request_json(const std::vector<std::string>& sentences, const LanguagePair& pair) {
  return {{"src_lang", pair.src}, {"tgt_lang", pair.tgt}, {"sentences", sentences}};
}

std::vector<std::string> parse_translate_reply(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("malformed translate reply: ") + e.what());
  }
  if (!j.is_object() || !j.contains("translations") || !j.at("translations").is_array()) {
    throw BackendError("translate reply lacks a 'translations' array");
  }
  std::vector<std::string> out;
  for (const auto& t : j.at("translations")) {
    if (!t.is_string()) throw BackendError("non-string translation in reply");
    out.push_back(t.get<std::string>());
  }
  return out;
}

HttpBackend::HttpBackend(std::string endpoint, std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("endpoint must be an http(s) URL: " + endpoint_);
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  base_ = endpoint_.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : endpoint_.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix.ends_with("/translate") ? prefix : prefix + "/translate";
}

std::vector<std::string> HttpBackend::translate(const std::vector<std::string>& sentences, const LanguagePair& pair) {
  httplib::Client client(base_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (const char* key = std::getenv("HICURATE_MT_API_KEY"); key != nullptr && *key != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(path_, headers, translate_request_json(sentences, pair).dump(), "application/json");
  if (!res) throw BackendError(endpoint_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendError(endpoint_ + ": HTTP " + std::to_string(res->status));
  return parse_translate_reply(res->body);
}

std::unique_ptr<TranslationBackend> make_backend(const std::string& descriptor) {
  if (descriptor == "mock:echo") return std::make_unique<EchoBackend>();
  if (descriptor == "mock:reverse") {
    return std::make_unique<FunctionBackend>("mock:reverse", [](const std::string& s) {
      auto cps = text::to_codepoints(s);
      std::reverse(cps.begin(), cps.end());
      return text::from_codepoints(cps);
    });
  }
  if (descriptor.starts_with("dict:")) return std::make_unique<DictionaryBackend>(descriptor.substr(5));
  if (descriptor.starts_with("http://") || descriptor.starts_with("https://")) {
    return std::make_unique<HttpBackend>(descriptor);
  }
  throw InvalidArgument("unknown translation backend '" + descriptor + "'");
}

// ---------------------------------------------------------------------------
// Batching and retries

std::vector<std::vector<std::string>> make_batches(const std::vector<std::string>& sentences, const BatchLimits& limits) {
  std::vector<std::vector<std::string>> batches;
  std::vector<std::string> current;
  std::size_t chars = 0;
  for (const auto& s : sentences) {
    const std::size_t len = text::to_codepoints(s).size();
    if (!current.empty() && (current.size() >= limits.max_sentences || chars + len > limits.max_chars)) {
      batches.push_back(std::move(current));
      current.clear();
      chars = 0;
    }
    current.push_back(s);
    chars += len;
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

namespace {

std::vector<std::string> translate_batch_with_retry(TranslationBackend& backend, const std::vector<std::string>& batch,
                                                    const LanguagePair& pair, const RetryPolicy& retry) {
  auto delay = retry.initial_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      auto out = backend.translate(batch, pair);
      if (out.size() != batch.size()) throw CountMismatchError(batch.size(), out.size());
      return out;
    } catch (const BackendError& e) {
      if (attempt >= std::max(1, retry.max_attempts)) {
        throw BackendError(backend.describe() + " failed after " + std::to_string(attempt) + " attempts: " + e.what());
      }
    }
    std::this_thread::sleep_for(delay);
    delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * retry.multiplier));
  }
}

}  // namespace

std::vector<std::string> translate_sentences(TranslationBackend& backend, const std::vector<std::string>& sentences,
                                             const LanguagePair& pair, const TranslateOptions& options) {
  std::vector<std::string> out;
  out.reserve(sentences.size());
  for (const auto& batch : make_batches(sentences, options.limits)) {
    auto translated = translate_batch_with_retry(backend, batch, pair, options.retry);
    std::move(translated.begin(), translated.end(), std::back_inserter(out));
  }
  return out;
}

Document translate_document(const Document& doc, TranslationBackend& backend, const LanguagePair& pair,
                            const TranslateOptions& options) {
  for (const auto& b : doc.blocks) {
    if (!b.cells.empty() && !b.segmented()) {
      throw InvalidArgument("document '" + doc.id + "' must be segmented before translation");
    }
  }
  const auto sentences = collect_sentences(doc);
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  auto translated = translate_sentences(backend, texts, pair, options);

  Replacements replacements;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    replacements[{sentences[i].block_index, sentences[i].cell_index, sentences[i].sent_index}] =
        std::move(translated[i]);
  }
  Document out = apply_replacements(doc, replacements);
  out.id = doc.id + "~" + pair.tgt;
  out.lang = pair.tgt;
  out.script = detect_script(out.render());
  out.provenance = Provenance::synthetic_translated;
  out.quality.reset();
  out.signature.reset();
  out.meta["source_id"] = doc.id;
  out.meta["source_lang"] = doc.lang;
  return out;
}

std::vector<Document> translate_corpus(const std::vector<Document>& docs, TranslationBackend& backend,
                                       const LanguagePair& pair, const TranslateOptions& options) {
  return parallel_map<Document>(docs.size(), options.concurrency,
                                [&](std::size_t i) { return translate_document(docs[i], backend, pair, options); });
}

// ---------------------------------------------------------------------------
// chrF

namespace {

std::u32string chrf_prepare(std::string_view s, const ChrfOptions& options) {
  std::u32string out;
  for (char32_t cp : text::to_codepoints(s)) {
    if (options.ignore_whitespace && text::is_space(cp)) continue;
    if (options.case_fold && cp >= U'A' && cp <= U'Z') cp = cp - U'A' + U'a';
    out.push_back(cp);
  }
  return out;
}

std::unordered_map<std::u32string, std::size_t> char_ngrams(const std::u32string& s, std::size_t n) {
  std::unordered_map<std::u32string, std::size_t> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[s.substr(i, n)];
  return out;
}

}  // namespace

double chrf_similarity(std::string_view hypothesis, std::string_view reference, const ChrfOptions& options) {
  const auto hyp = chrf_prepare(hypothesis, options);
  const auto ref = chrf_prepare(reference, options);
  double sum_p = 0.0;
  double sum_r = 0.0;
  int orders = 0;
  for (int n = 1; n <= options.max_order; ++n) {
    const auto un = static_cast<std::size_t>(n);
    const std::size_t total_h = hyp.size() >= un ? hyp.size() - un + 1 : 0;
    const std::size_t total_r = ref.size() >= un ? ref.size() - un + 1 : 0;
    if (total_h == 0 && total_r == 0) continue;
    std::size_t matches = 0;
    if (total_h > 0 && total_r > 0) {
      const auto h = char_ngrams(hyp, un);
      const auto r = char_ngrams(ref, un);
      for (const auto& [g, c] : h) {
        auto it = r.find(g);
        if (it != r.end()) matches += std::min(c, it->second);
      }
    }
    sum_p += total_h ? static_cast<double>(matches) / static_cast<double>(total_h) : 0.0;
    sum_r += total_r ? static_cast<double>(matches) / static_cast<double>(total_r) : 0.0;
    ++orders;
  }
  if (orders == 0) return 1.0;
  const double p = sum_p / orders;
  const double r = sum_r / orders;
  if (p + r == 0.0) return 0.0;
  const double b2 = options.beta * options.beta;
  return (1.0 + b2) * p * r / (b2 * p + r);
}

// ---------------------------------------------------------------------------
// Round-trip filtering

json to_json(const SentencePair& p) {
  json j{{"id", p.id}, {"source", p.source}, {"target", p.target}};
  if (!p.example_id.empty()) j["example_id"] = p.example_id;
  if (p.backtranslated) j["backtranslated"] = *p.backtranslated;
  if (p.similarity) j["similarity"] = *p.similarity;
  return j;
}

SentencePair sentence_pair_from_json(const json& j) {
  if (!j.is_object() || !j.contains("source") || !j.contains("target")) {
    throw SchemaError("sentence pair needs 'source' and 'target'");
  }
  SentencePair p;
  p.id = j.value("id", "");
  p.example_id = j.value("example_id", "");
  p.source = j.at("source").get<std::string>();
  p.target = j.at("target").get<std::string>();
  if (j.contains("backtranslated")) p.backtranslated = j.at("backtranslated").get<std::string>();
  if (j.contains("similarity")) p.similarity = j.at("similarity").get<double>();
  if (p.backtranslated.has_value() != p.similarity.has_value()) {
    throw SchemaError("similarity must be present exactly when backtranslated is");
  }
  return p;
}

RoundTripResult roundtrip_filter(const std::vector<SentencePair>& pairs, TranslationBackend& backend,
                                 const LanguagePair& pair, double threshold, const TranslateOptions& options) {
  const LanguagePair back{pair.tgt, pair.src};
  std::vector<std::string> targets;
  targets.reserve(pairs.size());
  for (const auto& p : pairs) targets.push_back(p.target);

  RoundTripResult result;
  std::size_t done = 0;
  for (const auto& batch : make_batches(targets, options.limits)) {
    std::vector<std::string> translated;
    try {
      translated = translate_batch_with_retry(backend, batch, back, options.retry);
    } catch (const Error& e) {
      throw RoundTripAborted(std::move(result), done, e.what());
    }
    for (auto& bt : translated) {
      SentencePair p = pairs[done++];
      p.similarity = chrf_similarity(bt, p.source);
      p.backtranslated = std::move(bt);
      (*p.similarity < threshold ? result.rejected : result.kept).push_back(std::move(p));
    }
  }
  return result;
}

std::map<std::string, double> example_similarity(const std::vector<SentencePair>& pairs) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& p : pairs) {
    if (!p.similarity) continue;
    auto& [sum, n] = acc[p.example_id.empty() ? p.id : p.example_id];
    sum += *p.similarity;
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [id, sn] : acc) out[id] = sn.first / static_cast<double>(sn.second);
  return out;
}

}  // namespace hicurate
