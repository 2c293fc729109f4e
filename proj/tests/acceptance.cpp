// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are pinned below next to each check.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hicurate/blend.hpp"
#include "hicurate/dedup.hpp"
#include "hicurate/docparse.hpp"
#include "hicurate/eval.hpp"
#include "hicurate/hashing.hpp"
#include "hicurate/mt.hpp"
#include "hicurate/quality_filter.hpp"
#include "hicurate/random.hpp"
#include "hicurate/text.hpp"
#include "hicurate/trainplan.hpp"
#include "hicurate/translit.hpp"
#include "support.hpp"

using namespace hicurate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed sub-check in the detail line.
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED[" << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Document hindi_doc(const std::string& raw, const std::string& id) {
  return segment_sentences(parse_document(raw, "hi", id));
}

std::vector<Document> clean_hindi(std::uint64_t seed, std::size_t n, const std::string& prefix) {
  Rng rng(seed);
  std::vector<Document> docs;
  docs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back(hindi_doc(testsupport::hindi_template_paragraph(rng, 3 + rng.below(4)), prefix + std::to_string(i)));
  }
  return docs;
}

// 1 ---------------------------------------------------------------------------
void filter_calibration(Outcome& o) {
  constexpr std::size_t kDocs = 10'000;
  constexpr std::size_t kNoise = 150;
  constexpr double kRate = 0.02;
  constexpr double kMaxSeconds = 30.0;
  const auto t0 = Clock::now();

  const auto tok = Tokenizer::whitespace();
  const auto model = train_lm(clean_hindi(1, 2000, "train"), tok);
  auto docs = clean_hindi(2, kDocs - kNoise, "c");
  Rng rng(3);
  std::set<std::string> planted;
  for (std::size_t i = 0; i < kNoise; ++i) {
    // Vocabulary words in random order: locally implausible text.
    std::string raw;
    for (int w = 0; w < 30; ++w) raw += (w ? " " : "") + model.vocab()[rng.below(model.vocab().size())];
    const std::string id = "noise" + std::to_string(i);
    docs.insert(docs.begin() + static_cast<long>(rng.below(docs.size() + 1)), hindi_doc(raw + "।", id));
    planted.insert(id);
  }

  const auto scored = score_corpus(docs, model, tok);
  std::vector<double> scores;
  for (const auto& d : scored) scores.push_back(d.quality->log_perplexity);
  const auto cal = calibrate_threshold(scores, kRate);
  const auto result = filter_corpus(scored, model, tok, cal);
  const double secs = seconds_since(t0);

  // Independent nearest rank: ceil(0.98 * n)-th smallest is kept, above it is discarded.
  auto sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil((1.0 - kRate) * static_cast<double>(kDocs)));
  const double oracle_threshold = sorted[rank - 1];
  const auto oracle_discards = static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [&](double s) { return s > oracle_threshold; }));
  std::size_t caught = 0;
  for (const auto& d : result.discarded) caught += planted.count(d.id);

  o.detail << "docs=" << docs.size() << " discarded=" << result.discarded.size() << " expected=" << oracle_discards
           << " (" << 100.0 * double(result.discarded.size()) / double(kDocs) << "%) planted_caught=" << caught << "/"
           << kNoise << " time=" << secs << "s";
  o.expect(docs.size() == kDocs, "corpus size");
  o.expect(cal.threshold == oracle_threshold, "threshold");
  o.expect(result.discarded.size() == oracle_discards, "discard count");
  o.expect(oracle_discards == 200, "2% of 10000");
  o.expect(result.kept.size() + result.discarded.size() == kDocs, "partition");
  o.expect(secs < kMaxSeconds, "runtime");
}

// 2 ---------------------------------------------------------------------------
void lr_schedule(Outcome& o) {
  constexpr double kRelTol = 1e-12;
  const LrSchedule s{2e-4, 4.5e-7, 100'000, 0};
  const double rel0 = std::abs(lr_at(s, 0) - 2e-4) / 2e-4;
  const double relT = std::abs(lr_at(s, s.total_steps) - 4.5e-7) / 4.5e-7;
  const auto table = lr_table(s, 10'000);
  bool monotone = true;
  for (std::size_t i = 1; i < table.size(); ++i) monotone = monotone && table[i].second <= table[i - 1].second;
  o.detail << "lr(0)=" << lr_at(s, 0) << " rel=" << rel0 << " lr(T)=" << lr_at(s, s.total_steps) << " rel=" << relT
           << " samples=" << table.size() << " monotone=" << monotone;
  o.expect(rel0 <= kRelTol, "lr(0)");
  o.expect(relT <= kRelTol, "lr(T)");
  o.expect(monotone, "monotone");
}

// 3 ---------------------------------------------------------------------------
void token_accounting(Outcome& o) {
  constexpr std::uint64_t B = 1'000'000'000ULL;
  auto comp = [](std::string name, std::string lang, Provenance p, std::uint64_t tokens) {
    BlendComponent c;
    c.name = std::move(name);
    c.lang = std::move(lang);
    c.provenance = p;
    c.token_counts["ws"] = tokens;
    return c;
  };
  BlendSpec spec;
  spec.components = {comp("hi-real", "hi", Provenance::real_web, 60 * B),
                     comp("hi-translated", "hi", Provenance::synthetic_translated, 40 * B),
                     comp("hi-transliterated", "hi", Provenance::synthetic_transliterated, 120 * B),
                     comp("en", "en", Provenance::real_web, 200 * B)};
  spec.nominal_total_tokens = 400 * B;
  const auto a = account_tokens(spec);
  const auto& hi = a.by_language_provenance.at("hi");
  const std::uint64_t devanagari = hi.at("real-web") + hi.at("synthetic-translated");
  o.detail << "hindi=" << devanagari / B << "B +translit=" << a.by_language.at("hi") / B
           << "B english=" << a.by_language.at("en") / B << "B total=" << a.total / B << "B warnings=" << a.warnings.size();
  o.expect(devanagari == 100 * B, "hindi subtotal");
  o.expect(a.by_language.at("hi") == 220 * B, "with transliterated");
  o.expect(a.by_language.at("en") == 200 * B, "english");
  o.expect(a.total == 420 * B, "total");
  o.expect(a.warnings.size() == 1 && a.warnings[0].find("nominal") != std::string::npos, "nominal warning");
}

// 4 ---------------------------------------------------------------------------
void train_plans(Outcome& o) {
  const auto sft = emit_plan(default_params(TrainStage::sft));
  const auto dpo = emit_plan(default_params(TrainStage::dpo));
  bool stable = true;
  for (const auto* p : {&sft, &dpo}) {
    const auto text = serialize(*p);
    const auto back = stage_plan_from_json(nlohmann::json::parse(text));
    stable = stable && back == *p && serialize(back) == text;
  }
  o.detail << "sft={batch " << sft.global_batch_size << ", lr " << sft.lr.lr_max << "->" << sft.lr.lr_min << ", "
           << sft.epochs << " epoch} dpo={batch " << dpo.global_batch_size << ", lr " << dpo.lr.lr_max << "->"
           << dpo.lr.lr_min << ", " << dpo.epochs << " epoch} round_trip=" << stable;
  o.expect(sft.global_batch_size == 1024 && sft.lr.lr_max == 5e-6 && sft.lr.lr_min == 9e-7 && sft.epochs == 1, "sft");
  o.expect(dpo.global_batch_size == 512 && dpo.lr.lr_max == 9e-6 && dpo.lr.lr_min == 9e-7 && dpo.epochs == 1, "dpo");
  o.expect(stable, "serialization");
}

// 5 ---------------------------------------------------------------------------
void dedup_quality(Outcome& o) {
  constexpr std::size_t kDocs = 10'000;
  constexpr std::size_t kPairs = 200;
  constexpr double kMinRecall = 0.95;
  constexpr double kMaxFalseMerge = 0.01;
  constexpr double kMaxSeconds = 60.0;

  Rng rng(5);
  std::vector<Document> docs;
  for (std::size_t i = 0; i < kDocs - kPairs; ++i) {
    auto d = parse_document(testsupport::random_prose(rng, 60 + rng.below(60)), "en", "d" + std::to_string(i));
    docs.push_back(std::move(d));
  }
  // Each planted copy pairs with a distinct original.
  std::vector<std::size_t> originals(kDocs - kPairs);
  std::iota(originals.begin(), originals.end(), std::size_t{0});
  rng.shuffle(originals);
  std::vector<std::pair<std::string, std::string>> planted;
  double min_j = 1.0;
  for (std::size_t i = 0; i < kPairs; ++i) {
    const auto& src = docs[originals[i]];
    auto copy = parse_document(testsupport::near_duplicate(rng, src.render()), "en", "p" + std::to_string(i));
    min_j = std::min(min_j, exact_jaccard(shingle(src.render(), 5), shingle(copy.render(), 5)));
    planted.emplace_back(src.id, copy.id);
    docs.push_back(std::move(copy));
  }
  std::set<std::string> in_pair;
  for (const auto& [a, b] : planted) in_pair.insert(a), in_pair.insert(b);

  const auto t0 = Clock::now();
  DedupOptions opts;
  opts.workers = 1;
  const auto r = dedup_corpus(docs, opts);
  const double secs = seconds_since(t0);

  std::map<std::string, std::size_t> cluster_of;
  for (std::size_t c = 0; c < r.clusters.size(); ++c) {
    for (const auto& m : r.clusters[c].members) cluster_of[m] = c;
  }
  std::size_t found = 0;
  for (const auto& [a, b] : planted) {
    found += cluster_of.count(a) && cluster_of.count(b) && cluster_of[a] == cluster_of[b];
  }
  // A non-duplicate is falsely merged when it lands in any cluster.
  std::size_t false_merged = 0;
  for (const auto& d : docs) false_merged += !in_pair.count(d.id) && cluster_of.count(d.id);
  const double recall = double(found) / kPairs;
  const double false_rate = double(false_merged) / double(kDocs - 2 * kPairs);
  const auto rerun = dedup_corpus(r.kept, opts);

  o.detail << "pairs=" << kPairs << " min_exact_J=" << min_j << " recall=" << recall << " false_merge=" << false_rate
           << " removed=" << r.removed.size() << " rerun_removed=" << rerun.removed.size() << " time=" << secs << "s";
  o.expect(docs.size() == kDocs, "corpus size");
  o.expect(min_j >= 0.8, "planted J");
  o.expect(recall >= kMinRecall, "recall");
  o.expect(false_rate <= kMaxFalseMerge, "false merges");
  o.expect(secs < kMaxSeconds, "runtime");
  o.expect(rerun.removed.empty(), "rerun");
}

// 6 ---------------------------------------------------------------------------
void minhash_estimator(Outcome& o) {
  constexpr double kMeanTol = 0.05, kMaxTol = 0.15, kRateTol = 0.03;
  Rng rng(6);
  auto sets = [&](std::size_t shared, std::size_t priv) {
    std::vector<std::uint64_t> a, b;
    for (std::size_t i = 0; i < shared; ++i) {
      const auto x = rng.next();
      a.push_back(x), b.push_back(x);
    }
    for (std::size_t i = 0; i < priv; ++i) a.push_back(rng.next()), b.push_back(rng.next());
    return std::pair{a, b};
  };
  double sum = 0, worst = 0;
  for (int t = 0; t < 100; ++t) {
    auto [a, b] = sets(200, 100);  // |A∩B| / |A∪B| = 200 / 400
    const double err = std::abs(estimate_jaccard(minhash_from_hashes(a, 128, t), minhash_from_hashes(b, 128, t)) - 0.5);
    sum += err, worst = std::max(worst, err);
  }
  o.detail << "mean_err=" << sum / 100 << " max_err=" << worst;
  o.expect(sum / 100 <= kMeanTol, "mean error");
  o.expect(worst <= kMaxTol, "max error");

  struct Case {
    double j;
    std::size_t shared, priv;
  };
  for (const auto& c : {Case{0.2, 40, 80}, Case{0.5, 100, 50}, Case{0.8, 160, 20}}) {
    int hits = 0;
    for (int t = 0; t < 1000; ++t) {
      auto [a, b] = sets(c.shared, c.priv);
      hits += !lsh_candidates(std::vector{minhash_from_hashes(a, 128, t), minhash_from_hashes(b, 128, t)}, 16, 8).empty();
    }
    const double expected = 1.0 - std::pow(1.0 - std::pow(c.j, 8), 16);
    o.detail << " J=" << c.j << ":rate=" << hits / 1000.0 << "/curve=" << expected;
    o.expect(std::abs(hits / 1000.0 - expected) <= kRateTol, "LSH rate");
  }
}

// 7 ---------------------------------------------------------------------------
void ngram_soundness(Outcome& o) {
  constexpr double kSumTol = 1e-9;
  const auto tok = Tokenizer::whitespace();
  const auto docs = clean_hindi(7, 300, "lm");
  const auto model = train_lm(docs, tok);

  Rng rng(70);
  std::vector<std::string> pool(model.vocab().begin(), model.vocab().end());
  pool.push_back("<s>");
  pool.push_back("unseen");
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const std::vector<std::string> ctx{pool[rng.below(pool.size())], pool[rng.below(pool.size())]};
    double s = model.prob(ctx, kUnk);
    for (const auto& w : model.vocab()) s += model.prob(ctx, w);
    worst = std::max(worst, std::abs(s - 1.0));
  }

  // Training text against the mean of 20 shuffles of the same text.
  std::size_t better = 0;
  constexpr std::size_t kChecked = 20;
  for (std::size_t i = 0; i < kChecked; ++i) {
    const double own = score_document(model, docs[i], tok).log_perplexity;
    double shuffled = 0;
    for (int s = 0; s < 20; ++s) {
      auto words = tok.tokenize(docs[i].render());
      rng.shuffle(words);
      std::string raw;
      for (const auto& w : words) raw += (raw.empty() ? "" : " ") + w;
      shuffled += score_document(model, hindi_doc(raw, "s"), tok).log_perplexity;
    }
    better += own <= shuffled / 20;
  }

  const std::span<const Document> all(docs);
  auto merged = count_ngrams(all.subspan(0, 100), tok, 3);
  merged.merge(count_ngrams(all.subspan(100), tok, 3));
  const bool merge_equal = merged == count_ngrams(all, tok, 3) &&
                           NGramModel::build(merged, "ws").to_json() == model.to_json();

  o.detail << "max|sum-1|=" << worst << " train<=shuffled=" << better << "/" << kChecked
           << " shard_merge_equal=" << merge_equal;
  o.expect(worst <= kSumTol, "normalization");
  o.expect(better == kChecked, "perplexity ordering");
  o.expect(merge_equal, "shard merge");
}

// 8 ---------------------------------------------------------------------------
void structure_preservation(Outcome& o) {
  Rng rng(8);
  std::vector<std::string> raws;
  std::vector<Document> docs;
  std::set<BlockKind> kinds;
  for (int i = 0; i < 500; ++i) {
    raws.push_back(testsupport::random_markdown(rng, i % 3 == 0));
    docs.push_back(segment_sentences(parse_document(raws.back(), i % 3 == 0 ? "hi" : "en", "m" + std::to_string(i))));
    for (const auto& b : docs.back().blocks) kinds.insert(b.kind);
  }
  EchoBackend echo;
  TranslateOptions opts;
  opts.retry.initial_delay = std::chrono::milliseconds(1);
  const auto out = translate_corpus(docs, echo, {"en", "hi"}, opts);
  std::size_t identical = 0;
  for (std::size_t i = 0; i < out.size(); ++i) identical += out[i].render() == raws[i];
  o.detail << "docs=500 byte_identical=" << identical << " block_kinds=" << kinds.size();
  o.expect(out.size() == 500 && identical == 500, "byte identity");
  o.expect(kinds.count(BlockKind::heading) && kinds.count(BlockKind::bullet_list) && kinds.count(BlockKind::table),
           "coverage");
}

// 9 ---------------------------------------------------------------------------
void roundtrip_filter_check(Outcome& o) {
  Rng rng(9);
  std::vector<SentencePair> pairs;
  for (int i = 0; i < 200; ++i) {
    SentencePair p;
    p.id = "s" + std::to_string(i);
    p.example_id = "e" + std::to_string(i / 4);
    p.source = testsupport::random_sentence(rng, testsupport::latin_words(), 6, 14, ".");
    p.target = p.source;
    pairs.push_back(p);
  }
  TranslateOptions opts;
  opts.retry.initial_delay = std::chrono::milliseconds(1);
  EchoBackend echo;
  const auto ident = roundtrip_filter(pairs, echo, {"en", "hi"}, 1.0, opts);
  bool all_one = ident.rejected.empty() && ident.kept.size() == pairs.size();
  for (const auto& p : ident.kept) all_one = all_one && p.similarity == 1.0;
  o.detail << "identity: kept=" << ident.kept.size() << " rejected=" << ident.rejected.size() << " sweep:";
  o.expect(all_one, "identity");

  double prev = 2.0;
  bool decreasing = true;
  for (int step = 0; step <= 10; ++step) {
    const double rate = 0.05 * step;
    FunctionBackend noisy("corrupt", [rate](const std::string& s) {
      Rng r(fnv1a64(s));
      auto cps = text::to_codepoints(s);
      for (auto& c : cps) {
        if (!text::is_space(c) && r.bernoulli(rate)) c = U'A' + static_cast<char32_t>(r.below(26));
      }
      return text::from_codepoints(cps);
    });
    const auto res = roundtrip_filter(pairs, noisy, {"en", "hi"}, 0.0, opts);
    double sum = 0;
    for (const auto& p : res.kept) sum += *p.similarity;
    const double mean = sum / double(res.kept.size());
    o.detail << " " << rate << "->" << mean;
    decreasing = decreasing && mean < prev;
    prev = mean;
  }
  o.expect(decreasing, "strictly decreasing");
}

// 10 --------------------------------------------------------------------------
void transliteration(Outcome& o) {
  constexpr double kLow = 1.1, kHigh = 1.3;
  Rng rng(10);
  std::size_t failures = 0;
  for (int i = 0; i < 100'000; ++i) {
    std::vector<char32_t> cps;
    const std::size_t n = rng.below(25);
    for (std::size_t k = 0; k < n; ++k) {
      cps.push_back(rng.bernoulli(0.1) ? U' ' : static_cast<char32_t>(0x0900 + rng.below(0x80)));
    }
    try {
      failures += !text::is_ascii(transliterate(text::from_codepoints(cps)));
    } catch (const std::exception&) {
      ++failures;
    }
  }

  std::istringstream golden(text::read_file(std::string(HICURATE_TEST_DATA) + "/translit_golden.tsv"));
  std::size_t entries = 0, matched = 0;
  for (std::string line; std::getline(golden, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    ++entries;
    matched += tab != std::string::npos && transliterate(line.substr(0, tab)) == line.substr(tab + 1);
  }

  const std::string root = HICURATE_SOURCE_DIR;
  const auto tok = Tokenizer::from_vocab_file("ref", root + "/data/vocab/reference.vocab");
  std::istringstream sample(text::read_file(root + "/data/toy/hi_sample.jsonl"));
  std::uint64_t native = 0, roman = 0;
  for (std::string line; std::getline(sample, line);) {
    if (text::trim(line).empty()) continue;
    const auto t = nlohmann::json::parse(line).at("text").get<std::string>();
    native += tok.count(t);
    roman += tok.count(transliterate(t));
  }
  const double expansion = double(roman) / double(native);
  o.detail << "fuzz_failures=" << failures << "/100000 golden=" << matched << "/" << entries
           << " expansion=" << expansion << " (" << roman << "/" << native << " tokens)";
  o.expect(failures == 0, "fuzz");
  o.expect(entries == 50 && matched == 50, "golden");
  o.expect(expansion >= kLow && expansion <= kHigh, "expansion");
}

// 11 --------------------------------------------------------------------------
void blend_sampling(Outcome& o) {
  constexpr double kTol = 0.01;
  BlendSpec spec;
  for (auto [name, w] : {std::pair{"real", 2.0}, std::pair{"synthetic", 1.0}}) {
    BlendComponent c;
    c.name = name;
    c.lang = "hi";
    c.weight = w;
    c.documents = 1000;
    spec.components.push_back(c);
  }
  spec.seed = 11;
  ScheduleSampler sampler(spec, component_doc_counts(spec), 1000);
  for (int i = 0; i < 1'000'000; ++i) sampler.next();
  const auto& rep = sampler.report();
  const double p0 = double(rep.component_draws[0]) / 1e6, p1 = double(rep.component_draws[1]) / 1e6;

  std::ostringstream x, y;
  write_schedule(spec, 64, 200, x);
  write_schedule(spec, 64, 200, y);
  o.detail << "draws=1000000 real=" << 100 * p0 << "% synthetic=" << 100 * p1 << "% same_seed_same_bytes="
           << (x.str() == y.str());
  o.expect(std::abs(p0 - 2.0 / 3) <= kTol && std::abs(p1 - 1.0 / 3) <= kTol, "proportions");
  o.expect(x.str() == y.str() && !x.str().empty(), "determinism");
}

// 12 --------------------------------------------------------------------------
void eval_harness(Outcome& o) {
  // The mock judge reads the score planted in each response.
  MockJudge judge([](const std::string& prompt) {
    const auto at = prompt.find("planted-score-");
    return std::string("{\"score\": ") + prompt[at + 14] + ", \"rationale\": \"fixture\"}";
  });
  const std::vector<std::pair<std::string, int>> fixture = {
      {"Geography", 4}, {"Geography", 4}, {"Geography", 5}, {"Geography", 3}, {"History", 5},
      {"History", 3},   {"History", 2},   {"History", 2},   {"Literature", 1}, {"Literature", 2}};
  std::vector<EvalItem> items;
  for (std::size_t i = 0; i < fixture.size(); ++i) {
    EvalItem it;
    it.id = "q" + std::to_string(i);
    it.lang = "hi";
    it.domain = fixture[i].first;
    it.question = "प्रश्न " + std::to_string(i);
    it.response = "उत्तर planted-score-" + std::to_string(fixture[i].second);
    items.push_back(it);
  }
  JudgeOptions opts;
  opts.initial_delay = std::chrono::milliseconds(1);
  const auto agg = aggregate_scores(judge_all(items, judge, PromptTemplate::builtin(JudgeMode::open), opts));
  // Hand-computed: Geography 16/4, History 12/4, Literature 3/2, overall 31/10.
  const bool means = agg.by_domain.at("Geography").mean == 4.0 && agg.by_domain.at("History").mean == 3.0 &&
                     agg.by_domain.at("Literature").mean == 1.5 && agg.overall.mean == 31.0 / 10.0;

  const auto ab = ab_aggregate({{"1", "ours", "theirs", true, Verdict::a_wins},
                                {"2", "ours", "theirs", true, Verdict::a_wins},
                                {"3", "ours", "theirs", true, Verdict::tie},
                                {"4", "ours", "theirs", true, Verdict::b_wins}});
  const auto order = assign_presentation(1000, 12);
  const double a_first = double(std::count(order.begin(), order.end(), true)) / 1000.0;

  o.detail << "means: Geography=" << agg.by_domain.at("Geography").mean << " History="
           << agg.by_domain.at("History").mean << " Literature=" << agg.by_domain.at("Literature").mean
           << " overall=" << agg.overall.mean << " ab=" << ab.overall.win_pct() << "/" << ab.overall.tie_pct() << "/"
           << ab.overall.loss_pct() << " a_first=" << 100 * a_first << "%";
  o.expect(means, "domain means");
  o.expect(ab.overall.win_pct() == 50.0 && ab.overall.tie_pct() == 25.0 && ab.overall.loss_pct() == 25.0, "A/B");
  o.expect(std::abs(a_first - 0.5) <= 0.05, "presentation balance");
}

// 13 --------------------------------------------------------------------------
void end_to_end(Outcome& o) {
  testsupport::TempDir dir("accept");
  const std::string config = std::string(HICURATE_SOURCE_DIR) + "/data/toy/config.json";
  auto run = [&](const std::string& work) {
    const std::string cmd = std::string("'") + HICURATE_CLI_PATH + "' run-all -c '" + config + "' --work-dir '" +
                            work + "' >/dev/null 2>'" + work + ".err'";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const auto w1 = dir / "run1", w2 = dir / "run2";
  const int e1 = run(w1), e2 = run(w2);
  o.expect(e1 == 0 && e2 == 0, "exit codes");
  if (e1 != 0 || e2 != 0) return;

  const auto summary = nlohmann::json::parse(text::read_file(w1 + "/run-all.json"));
  const std::uint64_t parsed = summary.at("parsed"), added = summary.at("transliterated_added"),
                      discarded = summary.at("filter_discarded"), removed = summary.at("dedup_removed"),
                      kept = summary.at("final");
  const auto final1 = text::read_file(w1 + "/dedup/docs.jsonl.manifest.json");
  const auto final2 = text::read_file(w2 + "/dedup/docs.jsonl.manifest.json");
  const auto blend1 = text::read_file(w1 + "/blend/docs.jsonl.manifest.json");
  const auto blend2 = text::read_file(w2 + "/blend/docs.jsonl.manifest.json");
  o.detail << "input=" << parsed << " +romanized=" << added << " kept=" << kept << " filter_discarded=" << discarded
           << " dedup_removed=" << removed << " manifests_identical=" << (final1 == final2 && blend1 == blend2);
  o.expect(parsed + added == kept + discarded + removed, "conservation");
  o.expect(summary.at("conserved") == true, "reported conservation");
  o.expect(final1 == final2 && blend1 == blend2, "reproducible manifests");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"filter calibration", filter_calibration},
      {"lr schedule endpoints", lr_schedule},
      {"token accounting", token_accounting},
      {"train-plan defaults", train_plans},
      {"dedup quality", dedup_quality},
      {"minhash estimator", minhash_estimator},
      {"n-gram soundness", ngram_soundness},
      {"structure preservation", structure_preservation},
      {"round-trip filter", roundtrip_filter_check},
      {"transliteration", transliteration},
      {"blend sampling", blend_sampling},
      {"eval harness", eval_harness},
      {"end-to-end", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " EXCEPTION: " << e.what();
    }
    failed += !o.pass;
    std::printf("%s %2zu %-24s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
