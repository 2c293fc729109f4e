#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "hicurate/docparse.hpp"
#include "hicurate/quality_filter.hpp"
#include "hicurate/random.hpp"
#include "support.hpp"

using namespace hicurate;

namespace {

Document doc_of(const std::string& raw, const std::string& id = "d") {
  return segment_sentences(parse_document(raw, "hi", id));
}

std::vector<Document> clean_corpus(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back(doc_of(testsupport::hindi_template_paragraph(rng, 3 + rng.below(4)), "c" + std::to_string(i)));
  }
  return docs;
}

std::vector<std::string> words_of(const std::string& s) { return text::split_whitespace(s); }

}  // namespace

TEST_CASE("unigram MLE on a symmetric corpus") {
  NGramCounts counts(1, /*end_of_sentence=*/false);
  const std::vector<std::string> toks{"a", "b", "a", "b"};
  counts.add_sentence(toks);
  const auto m = NGramModel::build(counts, "ws", Smoothing::mle);
  CHECK(m.prob({}, "a") == 0.5);
  CHECK(m.prob({}, "b") == 0.5);
}

TEST_CASE("bigram MLE matches a brute-force count table") {
  const std::vector<std::string> sents{"the cat sat", "the dog sat", "a cat ran"};
  NGramCounts counts(2);
  for (const auto& s : sents) counts.add_sentence(words_of(s));
  const auto m = NGramModel::build(counts, "ws", Smoothing::mle);

  // Oracle: pad, count bigrams and their left marginals directly.
  std::map<std::pair<std::string, std::string>, double> big;
  std::map<std::string, double> left;
  for (const auto& s : sents) {
    auto t = words_of(s);
    t.insert(t.begin(), "<s>");
    t.push_back("</s>");
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      big[{t[i], t[i + 1]}] += 1;
      left[t[i]] += 1;
    }
  }
  for (const auto& [ctx, total] : left) {
    for (const auto& w : m.vocab()) {
      const auto it = big.find({ctx, w});
      const double expected = it == big.end() ? 0.0 : it->second / total;
      const std::vector<std::string> c{ctx};
      CHECK(m.prob(c, w) == doctest::Approx(expected).epsilon(1e-15));
    }
  }
  // Spot values from the table: p(cat|the) = 1/2, p(sat|cat) = 1/2, p(</s>|ran) = 1.
  CHECK(m.prob(std::vector<std::string>{"the"}, "cat") == 0.5);
  CHECK(m.prob(std::vector<std::string>{"cat"}, "sat") == 0.5);
  CHECK(m.prob(std::vector<std::string>{"ran"}, "</s>") == 1.0);
}

TEST_CASE("bigram Kneser-Ney matches the interpolation formula") {
  Rng rng(17);
  std::vector<std::vector<std::string>> sents;
  for (int i = 0; i < 60; ++i) sents.push_back(words_of(testsupport::hindi_template_sentence(rng)));
  NGramCounts counts(2);
  for (const auto& s : sents) counts.add_sentence(s);
  const auto m = NGramModel::build(counts, "ws", Smoothing::kneser_ney);
  REQUIRE(m.smoothing() == Smoothing::kneser_ney);

  // Oracle built from raw bigram counts.
  std::map<std::pair<std::string, std::string>, double> c2;
  for (auto s : sents) {
    s.insert(s.begin(), "<s>");
    s.push_back("</s>");
    for (std::size_t i = 0; i + 1 < s.size(); ++i) c2[{s[i], s[i + 1]}] += 1;
  }
  std::map<std::string, double> cont, ctx_total, ctx_types;
  for (const auto& [bg, c] : c2) {
    cont[bg.second] += 1;
    ctx_total[bg.first] += c;
    ctx_types[bg.first] += 1;
  }
  auto discount = [](const std::vector<double>& cs) {
    double n1 = 0, n2 = 0;
    for (double c : cs) {
      n1 += c == 1;
      n2 += c == 2;
    }
    return n1 / (n1 + 2 * n2);
  };
  std::vector<double> top, low;
  for (const auto& [_, c] : c2) top.push_back(c);
  for (const auto& [_, c] : cont) low.push_back(c);
  const double d2 = discount(top), d1 = discount(low);
  double cont_total = 0;
  for (const auto& [_, c] : cont) cont_total += c;
  const double types = static_cast<double>(cont.size());
  auto p_uni = [&](const std::string& w) {
    const double c = cont.count(w) ? cont.at(w) : 0.0;
    return std::max(c - d1, 0.0) / cont_total + d1 * types / cont_total / (types + 1.0);
  };
  auto p_bi = [&](const std::string& v, const std::string& w) {
    if (!ctx_total.count(v)) return p_uni(w);
    const double c = c2.count({v, w}) ? c2.at({v, w}) : 0.0;
    return std::max(c - d2, 0.0) / ctx_total[v] + d2 * ctx_types[v] / ctx_total[v] * p_uni(w);
  };

  REQUIRE(m.discounts().size() == 2);
  CHECK(m.discounts()[0] == doctest::Approx(d1).epsilon(1e-15));
  CHECK(m.discounts()[1] == doctest::Approx(d2).epsilon(1e-15));
  for (const auto& [v, _] : ctx_total) {
    for (const auto& w : m.vocab()) {
      CHECK(m.prob(std::vector<std::string>{v}, w) == doctest::Approx(p_bi(v, w)).epsilon(1e-12));
    }
    CHECK(m.prob(std::vector<std::string>{v}, "never-seen") == doctest::Approx(p_bi(v, "<unk>")).epsilon(1e-12));
  }
}

TEST_CASE("conditional distributions are normalized over vocab and unk") {
  const auto docs = clean_corpus(1, 200);
  const auto tok = Tokenizer::whitespace();
  for (const auto smoothing : {Smoothing::kneser_ney, Smoothing::add_k}) {
    LmOptions opts;
    opts.smoothing = smoothing;
    const auto m = train_lm(docs, tok, opts);
    Rng rng(4);
    std::vector<std::string> pool(m.vocab().begin(), m.vocab().end());
    pool.push_back("<s>");
    pool.push_back("unseen-token");
    for (int i = 0; i < 100; ++i) {
      const std::vector<std::string> ctx{pool[rng.below(pool.size())], pool[rng.below(pool.size())]};
      double sum = m.prob(ctx, kUnk);
      for (const auto& w : m.vocab()) sum += m.prob(ctx, w);
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("unseen n-grams get strictly positive probability") {
  const auto m = train_lm(clean_corpus(2, 50), Tokenizer::whitespace());
  const std::vector<std::string> ctx{"दिल्ली", "में"};
  for (const auto& w : m.vocab()) CHECK(m.prob(ctx, w) > 0.0);
  CHECK(m.prob(ctx, "zzz") > 0.0);
}

TEST_CASE("uniform model has perplexity equal to its outcome count") {
  const auto m = NGramModel::uniform("ws", 100);
  Rng rng(6);
  for (int i = 0; i < 5; ++i) {
    const auto d = doc_of(testsupport::random_markdown(rng, true));
    CHECK(perplexity(m, d, Tokenizer::whitespace()) == doctest::Approx(100.0).epsilon(1e-12));
  }
}

TEST_CASE("a document of unknown tokens has perplexity 1/p(unk)") {
  NGramCounts counts(1, false);
  const std::vector<std::string> toks{"क", "ख", "ग", "क"};
  counts.add_sentence(toks);
  const auto m = NGramModel::build(counts, "ws", Smoothing::add_k, 0.1);
  // Closed form for add-k: p(unk) = k / (N + k * (V + 1)) with N = 4, V = 3.
  const double p_unk = 0.1 / (4.0 + 0.1 * 4.0);
  const auto d = doc_of("xx yy zz ww");
  CHECK(perplexity(m, d, Tokenizer::whitespace()) == doctest::Approx(1.0 / p_unk).epsilon(1e-12));
}

TEST_CASE("training text scores better than its shuffles") {
  const auto docs = clean_corpus(3, 100);
  const auto tok = Tokenizer::whitespace();
  const auto m = train_lm(docs, tok);
  Rng rng(33);
  for (std::size_t i = 0; i < 10; ++i) {
    const double own = score_document(m, docs[i], tok).log_perplexity;
    double shuffled = 0;
    for (int s = 0; s < 20; ++s) {
      auto words = tok.tokenize(docs[i].render());
      rng.shuffle(words);
      std::string raw;
      for (const auto& w : words) raw += (raw.empty() ? "" : " ") + w;
      shuffled += score_document(m, doc_of(raw), tok).log_perplexity;
    }
    CHECK(own <= shuffled / 20.0);
  }
}

TEST_CASE("shard-merged counts equal whole-corpus counts") {
  const auto docs = clean_corpus(4, 120);
  const auto tok = Tokenizer::whitespace();
  const std::span<const Document> all(docs);
  auto merged = count_ngrams(all.subspan(70), tok, 3);
  merged.merge(count_ngrams(all.subspan(0, 30), tok, 3));
  merged.merge(count_ngrams(all.subspan(30, 40), tok, 3));
  const auto whole = count_ngrams(all, tok, 3);
  CHECK(merged == whole);
  CHECK(merged.total() == whole.total());
  const auto a = NGramModel::build(merged, "ws");
  const auto b = NGramModel::build(whole, "ws");
  CHECK(a.to_json() == b.to_json());
  // Parallel counting is the same merge.
  CHECK(count_ngrams(all, tok, 3, true, 4) == whole);
}

TEST_CASE("model save and load preserve probabilities") {
  testsupport::TempDir dir("lm");
  const auto m = train_lm(clean_corpus(5, 40), Tokenizer::whitespace());
  m.save(dir / "m.json");
  const auto back = NGramModel::load(dir / "m.json");
  CHECK(back.to_json() == m.to_json());
  const std::vector<std::string> ctx{"लोग", "हर"};
  for (const auto& w : m.vocab()) CHECK(back.prob(ctx, w) == m.prob(ctx, w));
}

TEST_CASE("training preconditions") {
  const auto tok = Tokenizer::whitespace();
  CHECK_THROWS_AS(train_lm({}, tok), LmError);
  LmOptions bad;
  bad.order = 0;
  CHECK_THROWS_AS(train_lm(clean_corpus(1, 2), tok, bad), LmError);
  bad.order = 6;
  CHECK_THROWS_AS(train_lm(clean_corpus(1, 2), tok, bad), LmError);
}

TEST_CASE("Kneser-Ney falls back to add-k when a count-of-count is zero") {
  NGramCounts counts(2);
  const std::vector<std::string> toks{"x", "y"};
  counts.add_sentence(toks);  // every bigram occurs once: n2 = 0
  const auto m = NGramModel::build(counts, "ws", Smoothing::kneser_ney);
  CHECK(m.smoothing() == Smoothing::add_k);
}

TEST_CASE("scoring with another tokenizer is rejected") {
  const auto m = train_lm(clean_corpus(1, 5), Tokenizer::whitespace());
  CHECK_THROWS_AS(score_document(m, clean_corpus(1, 1)[0], Tokenizer::characters()), TokenizerMismatchError);
}

TEST_CASE("nearest-rank calibration discards exactly 20 of 1000") {
  Rng rng(12);
  std::vector<double> scores;
  for (int i = 0; i < 1000; ++i) scores.push_back(rng.uniform() * 10.0);
  const auto c = calibrate_threshold(scores, 0.02);
  // Oracle: the 980th smallest value.
  auto sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  CHECK(c.threshold == sorted[979]);
  CHECK(std::count_if(scores.begin(), scores.end(), [&](double s) { return c.discards(s); }) == 20);
  CHECK(c.achieved_rate == 0.02);
}

TEST_CASE("calibration on ties and bad rates") {
  const std::vector<double> same(50, 3.0);
  CHECK(calibrate_threshold(same, 0.1).achieved_rate == 0.0);
  CHECK_THROWS_AS(calibrate_threshold(same, 0.0), InvalidArgument);
  CHECK_THROWS_AS(calibrate_threshold(same, 1.0), InvalidArgument);
  CHECK_THROWS_AS(calibrate_threshold(std::vector<double>{}, 0.5), InvalidArgument);
}

TEST_CASE("keep-all calibration discards nothing") {
  const auto tok = Tokenizer::whitespace();
  const auto m = train_lm(clean_corpus(1, 20), tok);
  const auto r = filter_corpus(clean_corpus(9, 30), m, tok, FilterCalibration::keep_all());
  CHECK(r.discarded.empty());
  CHECK(r.kept.size() == 30);
  for (const auto& d : r.kept) CHECK(d.quality.has_value());
}

TEST_CASE("planted gibberish is discarded") {
  const auto tok = Tokenizer::whitespace();
  const auto m = train_lm(clean_corpus(10, 300), tok);
  auto docs = clean_corpus(11, 380);
  Rng rng(77);
  std::set<std::string> planted;
  for (int i = 0; i < 20; ++i) {
    // Random tokens drawn from the model's own vocabulary, in random order.
    std::string raw;
    for (int w = 0; w < 40; ++w) raw += (w ? " " : "") + m.vocab()[rng.below(m.vocab().size())];
    const std::string id = "noise" + std::to_string(i);
    docs.insert(docs.begin() + static_cast<long>(rng.below(docs.size())), doc_of(raw + "।", id));
    planted.insert(id);
  }
  const auto scored = score_corpus(docs, m, tok);
  std::vector<double> scores;
  for (const auto& d : scored) scores.push_back(d.quality->log_perplexity);
  const auto cal = calibrate_threshold(scores, 20.0 / 400.0);
  const auto r = filter_corpus(docs, m, tok, cal);
  CHECK(r.kept.size() + r.discarded.size() == docs.size());
  std::size_t caught = 0;
  for (const auto& d : r.discarded) caught += planted.count(d.id);
  CHECK(caught >= 19);  // >= 95%
  // Order is preserved on both sides.
  std::vector<std::string> order;
  for (const auto& d : docs) order.push_back(d.id);
  auto pos = [&](const std::string& id) { return std::find(order.begin(), order.end(), id) - order.begin(); };
  for (std::size_t i = 1; i < r.kept.size(); ++i) CHECK(pos(r.kept[i - 1].id) < pos(r.kept[i].id));
}
