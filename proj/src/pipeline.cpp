#include "hicurate/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hicurate/blend.hpp"
#include "hicurate/docparse.hpp"
#include "hicurate/hashing.hpp"
#include "hicurate/mt.hpp"
#include "hicurate/quality_filter.hpp"
#include "hicurate/text.hpp"
#include "hicurate/translit.hpp"

namespace hicurate {
namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read_opt(j, key, v, where);
  out = v;
}

json opt_json(const std::optional<std::uint64_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string PipelineConfig::resolve(const std::string& path) const {
  if (path.empty()) return path;
  fs::path p(path);
  return p.is_absolute() ? path : (fs::path(config_dir) / p).lexically_normal().string();
}

std::string PipelineConfig::stage_dir(std::string_view stage) const {
  return (fs::path(resolve(work_dir)) / std::string(stage)).string();
}

PipelineConfig config_from_json(const json& j, const std::string& config_dir) {
  check_keys(j, {"work_dir", "seed", "workers", "inputs", "tokenizers", "parse", "translate", "lm", "filter", "translit",
                 "dedup", "blend"},
             "config");
  PipelineConfig c;
  c.config_dir = config_dir;
  read_opt(j, "work_dir", c.work_dir, "config");
  read_opt(j, "seed", c.seed, "config");
  read_opt(j, "workers", c.workers, "config");
  read_opt(j, "inputs", c.inputs, "config");
  if (j.contains("tokenizers")) {
    if (!j["tokenizers"].is_array() || j["tokenizers"].empty()) throw ConfigError("tokenizers must be a nonempty array");
    c.tokenizers.assign(j["tokenizers"].begin(), j["tokenizers"].end());
  }
  if (j.contains("parse")) {
    check_keys(j["parse"], {"abbreviations"}, "parse");
    read_opt(j["parse"], "abbreviations", c.parse.abbreviations, "parse");
  }
  if (j.contains("translate")) {
    const auto& t = j["translate"];
    check_keys(t, {"backend", "src_lang", "tgt_lang", "max_sentences", "max_chars", "concurrency", "max_attempts",
                   "initial_delay_ms"},
               "translate");
    read_opt(t, "backend", c.translate.backend, "translate");
    read_opt(t, "src_lang", c.translate.src_lang, "translate");
    read_opt(t, "tgt_lang", c.translate.tgt_lang, "translate");
    read_opt(t, "max_sentences", c.translate.max_sentences, "translate");
    read_opt(t, "max_chars", c.translate.max_chars, "translate");
    read_opt(t, "concurrency", c.translate.concurrency, "translate");
    read_opt(t, "max_attempts", c.translate.max_attempts, "translate");
    read_opt(t, "initial_delay_ms", c.translate.initial_delay_ms, "translate");
  }
  if (j.contains("lm")) {
    const auto& l = j["lm"];
    check_keys(l, {"lang", "order", "smoothing", "add_k", "tokenizer"}, "lm");
    read_opt(l, "lang", c.lm.lang, "lm");
    read_opt(l, "order", c.lm.order, "lm");
    read_opt(l, "smoothing", c.lm.smoothing, "lm");
    read_opt(l, "add_k", c.lm.add_k, "lm");
    read_opt(l, "tokenizer", c.lm.tokenizer, "lm");
  }
  if (j.contains("filter")) {
    check_keys(j["filter"], {"target_discard_rate", "provenance"}, "filter");
    read_opt(j["filter"], "target_discard_rate", c.filter.target_discard_rate, "filter");
    read_opt(j["filter"], "provenance", c.filter.provenance, "filter");
  }
  if (j.contains("translit")) {
    check_keys(j["translit"], {"scheme", "source_lang"}, "translit");
    read_opt(j["translit"], "scheme", c.translit.scheme, "translit");
    read_opt(j["translit"], "source_lang", c.translit.source_lang, "translit");
  }
  if (j.contains("dedup")) {
    const auto& d = j["dedup"];
    check_keys(d, {"shingle_width", "num_hashes", "bands", "rows", "verify_threshold", "exact_verify"}, "dedup");
    read_opt(d, "shingle_width", c.dedup.shingle_width, "dedup");
    read_opt(d, "num_hashes", c.dedup.num_hashes, "dedup");
    read_opt(d, "bands", c.dedup.bands, "dedup");
    read_opt(d, "rows", c.dedup.rows, "dedup");
    read_opt(d, "verify_threshold", c.dedup.verify_threshold, "dedup");
    read_opt(d, "exact_verify", c.dedup.exact_verify, "dedup");
  }
  if (j.contains("blend")) {
    const auto& b = j["blend"];
    check_keys(b, {"tokenizer", "real_weight", "synthetic_weight", "language_split", "target_total_tokens",
                   "nominal_total_tokens", "batch_size", "steps"},
               "blend");
    read_opt(b, "tokenizer", c.blend.tokenizer, "blend");
    read_opt(b, "real_weight", c.blend.real_weight, "blend");
    read_opt(b, "synthetic_weight", c.blend.synthetic_weight, "blend");
    read_opt(b, "language_split", c.blend.language_split, "blend");
    read_opt(b, "target_total_tokens", c.blend.target_total_tokens, "blend");
    read_opt(b, "nominal_total_tokens", c.blend.nominal_total_tokens, "blend");
    read_opt(b, "batch_size", c.blend.batch_size, "blend");
    read_opt(b, "steps", c.blend.steps, "blend");
  }

  // Cheap sanity checks here; module code validates the rest when it runs.
  if (c.workers == 0) throw ConfigError("workers must be >= 1");
  if (c.lm.order < 1 || c.lm.order > 5) throw ConfigError("lm.order must be in [1, 5]");
  if (!(c.filter.target_discard_rate > 0.0 && c.filter.target_discard_rate < 1.0)) {
    throw ConfigError("filter.target_discard_rate must be in (0, 1)");
  }
  if (c.dedup.bands * c.dedup.rows != c.dedup.num_hashes) {
    throw ConfigError("dedup.bands * dedup.rows must equal dedup.num_hashes");
  }
  if (c.translate.concurrency == 0 || c.translate.max_sentences == 0) {
    throw ConfigError("translate.concurrency and translate.max_sentences must be >= 1");
  }
  if (c.blend.batch_size == 0) throw ConfigError("blend.batch_size must be >= 1");
  std::set<std::string> ids;
  for (const auto& t : c.tokenizers) {
    if (!t.is_object() || !t.contains("id")) throw ConfigError("each tokenizer needs an id");
    if (!ids.insert(t["id"].get<std::string>()).second) throw ConfigError("duplicate tokenizer id");
  }
  if (!ids.count(c.lm.tokenizer)) throw ConfigError("lm.tokenizer '" + c.lm.tokenizer + "' is not declared");
  if (!ids.count(c.blend.tokenizer)) throw ConfigError("blend.tokenizer '" + c.blend.tokenizer + "' is not declared");
  try {
    smoothing_from_string(c.lm.smoothing);
    for (const auto& p : c.filter.provenance) provenance_from_string(p);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

PipelineConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const auto dir = fs::path(path).parent_path();
  return config_from_json(j, dir.empty() ? "." : dir.string());
}

json to_json(const PipelineConfig& c) {
  return {
      {"work_dir", c.work_dir},
      {"seed", c.seed},
      {"workers", c.workers},
      {"inputs", c.inputs},
      {"tokenizers", c.tokenizers},
      {"parse", {{"abbreviations", c.parse.abbreviations}}},
      {"translate",
       {{"backend", c.translate.backend},
        {"src_lang", c.translate.src_lang},
        {"tgt_lang", c.translate.tgt_lang},
        {"max_sentences", c.translate.max_sentences},
        {"max_chars", c.translate.max_chars},
        {"concurrency", c.translate.concurrency},
        {"max_attempts", c.translate.max_attempts},
        {"initial_delay_ms", c.translate.initial_delay_ms}}},
      {"lm",
       {{"lang", c.lm.lang},
        {"order", c.lm.order},
        {"smoothing", c.lm.smoothing},
        {"add_k", c.lm.add_k},
        {"tokenizer", c.lm.tokenizer}}},
      {"filter", {{"target_discard_rate", c.filter.target_discard_rate}, {"provenance", c.filter.provenance}}},
      {"translit", {{"scheme", c.translit.scheme}, {"source_lang", c.translit.source_lang}}},
      {"dedup",
       {{"shingle_width", c.dedup.shingle_width},
        {"num_hashes", c.dedup.num_hashes},
        {"bands", c.dedup.bands},
        {"rows", c.dedup.rows},
        {"verify_threshold", c.dedup.verify_threshold},
        {"exact_verify", c.dedup.exact_verify}}},
      {"blend",
       {{"tokenizer", c.blend.tokenizer},
        {"real_weight", c.blend.real_weight},
        {"synthetic_weight", c.blend.synthetic_weight},
        {"language_split", c.blend.language_split},
        {"target_total_tokens", opt_json(c.blend.target_total_tokens)},
        {"nominal_total_tokens", opt_json(c.blend.nominal_total_tokens)},
        {"batch_size", c.blend.batch_size},
        {"steps", c.blend.steps}}},
  };
}

const std::vector<std::string>& run_all_stages() {
  static const std::vector<std::string> stages{"parse", "translate", "lm-train", "filter", "translit", "dedup", "blend"};
  return stages;
}

std::string shard_path(const PipelineConfig& c, std::string_view stage, std::string_view name) {
  return (fs::path(c.stage_dir(stage)) / std::string(name)).string();
}

// ---------------------------------------------------------------------------
// Raw input

std::vector<Document> parse_raw_jsonl(const std::string& path, const std::string& default_source) {
  std::vector<Document> out;
  std::istringstream in(text::read_file(path));
  std::string line;
  std::uint64_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
      check_keys(j, {"text", "lang", "id", "source", "translate"}, "raw record");
    } catch (const std::exception& e) {
      throw SchemaError(path + ":" + std::to_string(n) + ": " + e.what());
    }
    if (!j.contains("text") || !j["text"].is_string() || !j.contains("lang") || !j["lang"].is_string()) {
      throw SchemaError(path + ":" + std::to_string(n) + ": raw record needs string 'text' and 'lang'");
    }
    const std::string source = j.value("source", default_source);
    std::string id = j.value("id", "");
    if (id.empty()) id = content_address_id(source, n);
    Document doc = parse_document(j["text"].get<std::string>(), j["lang"].get<std::string>(), id);
    doc.meta["source"] = source;
    if (j.value("translate", false)) doc.meta["translate"] = "true";
    out.push_back(std::move(doc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

void write_json_file(const std::string& path, const json& j) { text::write_file(path, j.dump(2) + "\n"); }
json read_json_file(const std::string& path) { return json::parse(text::read_file(path)); }

std::vector<Document> load_documents(const std::string& path) {
  auto contents = read_shard(path);
  if (!contents.errors.empty()) {
    const auto& e = contents.errors.front();
    throw SchemaError(path + ":" + std::to_string(e.line) + ": " + e.message + " (" +
                      std::to_string(contents.errors.size()) + " malformed lines)");
  }
  return std::move(contents.documents);
}

std::map<std::string, std::uint64_t> count_by(const std::vector<Document>& docs, bool by_lang) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& d : docs) out[by_lang ? d.lang : std::string(to_string(d.provenance))]++;
  return out;
}

std::vector<std::string> ids_of(const std::vector<Document>& docs) {
  std::vector<std::string> out;
  for (const auto& d : docs) out.push_back(d.id);
  return out;
}

struct StageContext {
  const PipelineConfig& cfg;
  std::string stage;
  std::string dir;
  std::uint64_t seed;
  std::map<std::string, std::string> upstream_checksums;  // for manifests
  bool resume;

  std::vector<Tokenizer> tokenizers() const {
    std::vector<Tokenizer> out;
    for (const auto& t : cfg.tokenizers) out.push_back(Tokenizer::from_json(t, cfg.config_dir));
    return out;
  }
  Tokenizer tokenizer(const std::string& id) const {
    for (const auto& t : cfg.tokenizers) {
      if (t.value("id", "") == id) return Tokenizer::from_json(t, cfg.config_dir);
    }
    throw ConfigError("tokenizer '" + id + "' is not declared");
  }
  WriteOptions write_options() const {
    WriteOptions o;
    o.stage = stage;
    o.tokenizers = tokenizers();
    o.stage_checksums = upstream_checksums;
    o.seed = seed;
    return o;
  }
  std::string path(const std::string& name) const { return (fs::path(dir) / name).string(); }
};

struct StageRun {
  json report;
  std::vector<std::string> outputs;  // file names relative to the stage dir
};

// Adds a shard and its manifest to the output list.
void add_shard(StageRun& run, const std::string& name) {
  run.outputs.push_back(name);
  run.outputs.push_back(name + ".manifest.json");
}

StageRun run_parse(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.inputs.empty()) throw ConfigError("no inputs configured");
  const AbbreviationGuard guard =
      cfg.parse.abbreviations.empty() ? AbbreviationGuard::defaults() : [&] {
        std::vector<std::string> paths;
        for (const auto& p : cfg.parse.abbreviations) paths.push_back(cfg.resolve(p));
        return AbbreviationGuard::from_files(paths);
      }();
  std::vector<Document> docs;
  for (const auto& input : cfg.inputs) {
    for (auto& d : parse_raw_jsonl(cfg.resolve(input), fs::path(input).filename().string())) {
      docs.push_back(segment_sentences(std::move(d), guard));
    }
  }
  const auto manifest = write_shard(docs, ctx.path("docs.jsonl"), ctx.write_options());
  std::uint64_t flagged = 0;
  for (const auto& d : docs) flagged += d.meta.count("translate");
  StageRun run;
  run.report = {{"documents", docs.size()},
                {"by_language", count_by(docs, true)},
                {"marked_for_translation", flagged},
                {"token_counts", manifest.token_counts}};
  add_shard(run, "docs.jsonl");
  return run;
}

StageRun run_translate(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& t = cfg.translate;
  auto docs = load_documents(shard_path(cfg, "parse"));

  std::string descriptor = t.backend;
  if (descriptor.starts_with("dict:")) descriptor = "dict:" + cfg.resolve(descriptor.substr(5));
  auto backend = make_backend(descriptor);
  TranslateOptions opts;
  opts.limits = {t.max_sentences, t.max_chars};
  opts.retry.max_attempts = t.max_attempts;
  opts.retry.initial_delay = std::chrono::milliseconds(t.initial_delay_ms);
  opts.concurrency = t.concurrency;
  const LanguagePair pair{t.src_lang, t.tgt_lang};

  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].meta.count("translate") && docs[i].lang == t.src_lang) selected.push_back(i);
  }

  // Translated documents are appended to partial.jsonl in input order, and the
  // checkpoint records how many are done, so an interrupted run can resume.
  const std::string checkpoint_path = ctx.path("checkpoint.json");
  const std::string partial_path = ctx.path("partial.jsonl");
  std::vector<Document> translated;
  if (ctx.resume && fs::exists(checkpoint_path) && fs::exists(partial_path)) {
    const auto cp = read_json_file(checkpoint_path);
    const auto done = cp.at("completed").get<std::size_t>();
    auto partial = load_documents(partial_path);
    if (partial.size() < done || done > selected.size()) {
      throw PipelineError("checksum_mismatch", "translate checkpoint does not match partial output");
    }
    partial.resize(done);
    translated = std::move(partial);
  } else {
    std::error_code ec;
    fs::remove(partial_path, ec);
    fs::remove(checkpoint_path, ec);
  }
  const std::size_t resumed_from = translated.size();
  {
    std::ofstream partial(partial_path, std::ios::binary | std::ios::trunc);
    for (const auto& d : translated) partial << canonical_line(d) << '\n';
    for (std::size_t start = translated.size(); start < selected.size(); start += t.concurrency) {
      const std::size_t end = std::min(selected.size(), start + t.concurrency);
      std::vector<Document> chunk;
      for (std::size_t k = start; k < end; ++k) chunk.push_back(docs[selected[k]]);
      for (auto& d : translate_corpus(chunk, *backend, pair, opts)) {
        partial << canonical_line(d) << '\n';
        translated.push_back(std::move(d));
      }
      partial.flush();
      if (!partial) throw IoError("failed writing " + partial_path);
      write_json_file(checkpoint_path, {{"completed", translated.size()}, {"last_completed_id", translated.back().meta.at("source_id")}});
    }
  }

  for (std::size_t k = 0; k < selected.size(); ++k) docs[selected[k]] = std::move(translated[k]);
  const auto manifest = write_shard(docs, ctx.path("docs.jsonl"), ctx.write_options());
  fs::remove(partial_path);

  StageRun run;
  run.report = {{"documents", docs.size()},
                {"translated", selected.size()},
                {"resumed_from", resumed_from},
                {"backend", backend->describe()},
                {"pair", {{"src", t.src_lang}, {"tgt", t.tgt_lang}}},
                {"by_provenance", manifest.provenance}};
  add_shard(run, "docs.jsonl");
  return run;
}

StageRun run_lm_train(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto docs = load_documents(shard_path(cfg, "translate"));
  std::vector<Document> train;
  for (const auto& d : docs) {
    if (d.provenance == Provenance::real_web && d.lang == cfg.lm.lang) train.push_back(d);
  }
  if (train.empty()) {
    throw LmError("empty_corpus", "no real-web '" + cfg.lm.lang + "' documents to train the filter LM on");
  }
  const auto tok = ctx.tokenizer(cfg.lm.tokenizer);
  LmOptions opts;
  opts.order = cfg.lm.order;
  opts.smoothing = smoothing_from_string(cfg.lm.smoothing);
  opts.add_k = cfg.lm.add_k;
  opts.workers = cfg.workers;
  const auto model = train_lm(train, tok, opts);
  model.save(ctx.path("model.json"));
  StageRun run;
  run.report = {{"training_documents", train.size()},
                {"order", model.order()},
                {"tokenizer", model.tokenizer_id()},
                {"smoothing", std::string(to_string(model.smoothing()))},
                {"discounts", model.discounts()},
                {"vocab_size", model.vocab().size()}};
  run.outputs.push_back("model.json");
  return run;
}

StageRun run_filter(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto docs = load_documents(shard_path(cfg, "translate"));
  const auto model = NGramModel::load(shard_path(cfg, "lm-train", "model.json"));
  const auto tok = ctx.tokenizer(cfg.lm.tokenizer);

  std::set<Provenance> targets;
  for (const auto& p : cfg.filter.provenance) targets.insert(provenance_from_string(p));
  std::vector<std::size_t> idx;
  std::vector<Document> candidates;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (targets.count(docs[i].provenance) && docs[i].lang == cfg.lm.lang) {
      idx.push_back(i);
      candidates.push_back(docs[i]);
    }
  }
  candidates = score_corpus(std::move(candidates), model, tok, cfg.workers);
  std::vector<double> scores;
  for (const auto& d : candidates) scores.push_back(d.quality->log_perplexity);
  const auto calibration =
      scores.empty() ? FilterCalibration::keep_all() : calibrate_threshold(scores, cfg.filter.target_discard_rate);
  for (std::size_t k = 0; k < idx.size(); ++k) docs[idx[k]] = std::move(candidates[k]);

  std::vector<Document> kept;
  std::vector<Document> discarded;
  for (auto& d : docs) {
    const bool drop = d.quality && targets.count(d.provenance) && d.lang == cfg.lm.lang &&
                      calibration.discards(d.quality->log_perplexity);
    (drop ? discarded : kept).push_back(std::move(d));
  }
  write_shard(kept, ctx.path("docs.jsonl"), ctx.write_options());
  write_shard(discarded, ctx.path("discarded.jsonl"), ctx.write_options());
  StageRun run;
  run.report = {{"documents", kept.size() + discarded.size()},
                {"scored", scores.size()},
                {"kept", kept.size()},
                {"discarded", discarded.size()},
                {"discarded_ids", ids_of(discarded)},
                {"calibration", calibration.to_json()}};
  add_shard(run, "docs.jsonl");
  add_shard(run, "discarded.jsonl");
  return run;
}

StageRun run_translit(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto docs = load_documents(shard_path(cfg, "filter"));
  const TranslitScheme scheme =
      cfg.translit.scheme.empty() ? TranslitScheme::hinglish() : TranslitScheme::from_file(cfg.resolve(cfg.translit.scheme));
  std::vector<std::size_t> sources;
  std::vector<Document> to_convert;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto& d = docs[i];
    if (d.script == Script::devanagari && d.lang == cfg.translit.source_lang &&
        d.provenance != Provenance::synthetic_transliterated) {
      sources.push_back(i);
      to_convert.push_back(d);
    }
  }
  TranslitReport report;
  auto converted = transliterate_corpus(to_convert, scheme, &report, cfg.workers);
  // Each copy follows its source.
  std::vector<Document> out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out.push_back(docs[i]);
    if (k < sources.size() && sources[k] == i) out.push_back(std::move(converted[k++]));
  }
  const auto manifest = write_shard(out, ctx.path("docs.jsonl"), ctx.write_options());
  StageRun run;
  run.report = {{"documents", out.size()},
                {"input_documents", docs.size()},
                {"added", sources.size()},
                {"unmapped", report.to_json()},
                {"by_provenance", manifest.provenance}};
  add_shard(run, "docs.jsonl");
  return run;
}

StageRun run_dedup(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  auto docs = load_documents(shard_path(cfg, "translit"));
  const std::size_t input = docs.size();
  DedupOptions opts;
  opts.shingle_width = cfg.dedup.shingle_width;
  opts.num_hashes = cfg.dedup.num_hashes;
  opts.bands = cfg.dedup.bands;
  opts.rows = cfg.dedup.rows;
  opts.verify_threshold = cfg.dedup.verify_threshold;
  opts.exact_verify = cfg.dedup.exact_verify;
  opts.seed = ctx.seed;
  opts.workers = cfg.workers;
  auto result = dedup_corpus(std::move(docs), opts);
  write_shard(result.kept, ctx.path("docs.jsonl"), ctx.write_options());
  write_shard(result.removed, ctx.path("removed.jsonl"), ctx.write_options());
  std::string clusters;
  for (const auto& c : result.clusters) clusters += to_json(c).dump() + "\n";
  text::write_file(ctx.path("clusters.jsonl"), clusters);
  StageRun run;
  run.report = {{"documents", input},
                {"kept", result.kept.size()},
                {"removed", result.removed.size()},
                {"removed_ids", ids_of(result.removed)},
                {"clusters", result.clusters.size()},
                {"candidate_pairs", result.candidate_pairs}};
  add_shard(run, "docs.jsonl");
  add_shard(run, "removed.jsonl");
  run.outputs.push_back("clusters.jsonl");
  return run;
}

StageRun run_blend(const StageContext& ctx) {
  const auto& cfg = ctx.cfg;
  const auto docs = load_documents(shard_path(cfg, "dedup"));

  // One component per (language, provenance), in first-seen order.
  std::vector<std::string> names;
  std::map<std::string, std::vector<Document>> groups;
  for (const auto& d : docs) {
    const std::string name = d.lang + "-" + std::string(to_string(d.provenance));
    if (!groups.count(name)) names.push_back(name);
    groups[name].push_back(d);
  }
  fs::create_directories(ctx.path("components"));
  BlendSpec spec;
  spec.tokenizer = cfg.blend.tokenizer;
  spec.seed = ctx.seed;
  spec.target_total_tokens = cfg.blend.target_total_tokens;
  spec.nominal_total_tokens = cfg.blend.nominal_total_tokens;
  spec.language_split = cfg.blend.language_split;
  StageRun run;
  for (const auto& name : names) {
    const auto& group = groups.at(name);
    const std::string rel = "components/" + name + ".jsonl";
    const auto m = write_shard(group, ctx.path(rel), ctx.write_options());
    add_shard(run, rel);
    BlendComponent c;
    c.name = name;
    c.lang = group.front().lang;
    c.provenance = group.front().provenance;
    c.shards = {rel};
    c.token_counts = m.token_counts;
    c.documents = m.documents;
    c.weight = c.provenance == Provenance::real_web ? cfg.blend.real_weight : cfg.blend.synthetic_weight;
    spec.components.push_back(std::move(c));
  }
  // Languages without a declared share cannot be balanced; drop the split
  // constraint rather than fail, and say so.
  std::vector<std::string> notes;
  for (const auto& c : spec.components) {
    if (!spec.language_split.empty() && !spec.language_split.count(c.lang)) {
      notes.push_back("language '" + c.lang + "' has no declared share; language split not applied");
      spec.language_split.clear();
    }
  }
  validate(spec);
  write_json_file(ctx.path("spec.json"), to_json(spec));
  run.outputs.push_back("spec.json");

  auto accounting = account_tokens(spec, ctx.dir);
  for (auto& n : notes) accounting.warnings.push_back(std::move(n));
  write_json_file(ctx.path("accounting.json"), to_json(accounting));
  run.outputs.push_back("accounting.json");

  json schedule_report = nullptr;
  if (!spec.components.empty() && cfg.blend.steps > 0) {
    std::ofstream out(ctx.path("schedule.jsonl"), std::ios::binary | std::ios::trunc);
    schedule_report = to_json(spec, write_schedule(spec, cfg.blend.batch_size, cfg.blend.steps, out));
    out.close();
    run.outputs.push_back("schedule.jsonl");
  }

  const auto manifest = write_shard(docs, ctx.path("docs.jsonl"), ctx.write_options());
  add_shard(run, "docs.jsonl");
  run.report = {{"documents", docs.size()},
                {"components", names},
                {"accounting", to_json(accounting)},
                {"schedule", schedule_report},
                {"warnings", accounting.warnings},
                {"final_manifest", to_json(manifest)}};
  return run;
}

using StageFn = StageRun (*)(const StageContext&);

struct StageDef {
  StageFn fn;
  std::vector<std::string> upstream;
};

const std::map<std::string, StageDef>& stage_defs() {
  static const std::map<std::string, StageDef> defs{
      {"parse", {run_parse, {}}},
      {"translate", {run_translate, {"parse"}}},
      {"lm-train", {run_lm_train, {"translate"}}},
      {"filter", {run_filter, {"lm-train", "translate"}}},
      {"translit", {run_translit, {"filter"}}},
      {"dedup", {run_dedup, {"translit"}}},
      {"blend", {run_blend, {"dedup"}}},
  };
  return defs;
}

json stage_config(const PipelineConfig& cfg, const std::string& stage) {
  const json full = to_json(cfg);
  json j = {{"stage", stage}, {"seed", cfg.seed}, {"tokenizers", cfg.tokenizers}};
  if (stage == "parse") {
    j["inputs"] = cfg.inputs;
    j["parse"] = full["parse"];
  } else if (stage == "translate") {
    j["translate"] = full["translate"];
  } else if (stage == "lm-train") {
    j["lm"] = full["lm"];
  } else if (stage == "filter") {
    j["filter"] = full["filter"];
    j["lm"] = full["lm"];
  } else if (stage == "translit") {
    j["translit"] = full["translit"];
  } else if (stage == "dedup") {
    j["dedup"] = full["dedup"];
  } else if (stage == "blend") {
    j["blend"] = full["blend"];
  }
  return j;
}

// Files whose checksums gate a stage: raw inputs for parse, otherwise the
// upstream stage records.
std::map<std::string, std::string> stage_inputs(const PipelineConfig& cfg, const std::string& stage) {
  std::map<std::string, std::string> out;
  if (stage == "parse") {
    for (const auto& in : cfg.inputs) {
      const auto path = cfg.resolve(in);
      if (!fs::is_regular_file(path)) throw IoError("input file not found: " + path);
      out["input:" + in] = path;
    }
    if (!cfg.parse.abbreviations.empty()) {
      for (const auto& a : cfg.parse.abbreviations) out["abbreviations:" + a] = cfg.resolve(a);
    }
    return out;
  }
  for (const auto& up : stage_defs().at(stage).upstream) {
    const auto record = (fs::path(cfg.stage_dir(up)) / "stage.json").string();
    if (!fs::exists(record)) {
      if (up == "lm-train") {
        throw PipelineError("missing_model", "stage '" + stage + "' needs a trained LM; run lm-train first");
      }
      throw PipelineError("missing_upstream", "stage '" + stage + "' needs completed stage '" + up + "'");
    }
    out["stage:" + up] = record;
  }
  if (stage == "translate" && cfg.translate.backend.starts_with("dict:")) {
    out["dictionary"] = cfg.resolve(cfg.translate.backend.substr(5));
  }
  if (stage == "translit" && !cfg.translit.scheme.empty()) out["scheme"] = cfg.resolve(cfg.translit.scheme);
  return out;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, bool resume) : config_(std::move(config)), resume_(resume) {}

StageOutcome Pipeline::run_stage(const std::string& stage) {
  const auto& defs = stage_defs();
  if (!defs.count(stage)) throw InvalidArgument("unknown pipeline stage '" + stage + "'");

  const std::string dir = config_.stage_dir(stage);
  const auto record_path = (fs::path(dir) / "stage.json").string();
  const json scfg = stage_config(config_, stage);
  const std::string config_sha = sha256_hex(scfg.dump());
  std::map<std::string, std::string> input_sums;
  for (const auto& [label, path] : stage_inputs(config_, stage)) input_sums[label] = sha256_file_hex(path);

  if (resume_ && fs::exists(record_path)) {
    const auto rec = read_json_file(record_path);
    if (rec.at("config_sha256").get<std::string>() != config_sha) {
      throw PipelineError("checksum_mismatch", "stage '" + stage + "' was recorded with a different configuration");
    }
    if (rec.at("inputs").get<std::map<std::string, std::string>>() != input_sums) {
      throw PipelineError("checksum_mismatch", "inputs of stage '" + stage + "' changed since it was recorded");
    }
    for (const auto& [name, sum] : rec.at("outputs").items()) {
      const auto p = (fs::path(dir) / name).string();
      if (!fs::exists(p) || sha256_file_hex(p) != sum.get<std::string>()) {
        throw PipelineError("checksum_mismatch", "output " + p + " of stage '" + stage + "' does not match its record");
      }
    }
    return {stage, true, read_json_file((fs::path(dir) / "report.json").string())};
  }

  if (!resume_) fs::remove_all(dir);
  fs::create_directories(dir);
  fs::remove(record_path);

  StageContext ctx{config_, stage, dir, derive_seed(config_.seed, stage), {}, resume_};
  for (const auto& up : defs.at(stage).upstream) {
    const auto manifest = manifest_path_for(shard_path(config_, up));
    if (fs::exists(manifest)) ctx.upstream_checksums[up] = read_manifest(manifest).content_sha256;
  }
  StageRun run = defs.at(stage).fn(ctx);

  run.report["stage"] = stage;
  run.report["seed"] = ctx.seed;
  write_json_file(ctx.path("report.json"), run.report);
  write_json_file(ctx.path("config.resolved.json"), to_json(config_));
  run.outputs.push_back("report.json");

  json outputs = json::object();
  for (const auto& name : run.outputs) outputs[name] = sha256_file_hex(ctx.path(name));
  write_json_file(record_path, {{"stage", stage}, {"config_sha256", config_sha}, {"inputs", input_sums}, {"outputs", outputs}});
  return {stage, false, run.report};
}

std::vector<StageOutcome> Pipeline::run_all() {
  std::vector<StageOutcome> out;
  for (const auto& s : run_all_stages()) out.push_back(run_stage(s));

  // Every document that entered is either in the final shard or attributed to
  // the stage that removed it. Transliteration adds copies.
  auto get = [&](const std::string& stage, const char* key) {
    for (const auto& o : out) {
      if (o.stage == stage) return o.report.at(key).get<std::uint64_t>();
    }
    throw PipelineError("internal", "missing stage report " + stage);
  };
  const auto parsed = get("parse", "documents");
  const auto added = get("translit", "added");
  const auto discarded = get("filter", "discarded");
  const auto removed = get("dedup", "removed");
  const auto final_docs = get("blend", "documents");
  const json summary = {{"parsed", parsed},
                        {"transliterated_added", added},
                        {"filter_discarded", discarded},
                        {"dedup_removed", removed},
                        {"final", final_docs},
                        {"conserved", parsed + added == final_docs + discarded + removed}};
  write_json_file((fs::path(config_.resolve(config_.work_dir)) / "run-all.json").string(), summary);
  if (!summary["conserved"].get<bool>()) {
    throw PipelineError("conservation", "document counts do not balance: " + summary.dump());
  }
  out.push_back({"run-all", false, summary});
  return out;
}

}  // namespace hicurate
