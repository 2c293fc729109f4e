#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "hicurate/eval.hpp"
#include "hicurate/random.hpp"

using namespace hicurate;

namespace {

EvalItem item(std::string id, std::string domain = "Geography", std::string lang = "hi") {
  EvalItem it;
  it.id = std::move(id);
  it.lang = std::move(lang);
  it.domain = std::move(domain);
  it.question = "भारत की राजधानी क्या है?";
  it.response = "नई दिल्ली।";
  it.reference_facts = "राजधानी नई दिल्ली है।";
  it.model = "subject";
  return it;
}

EvalRecord scored(std::string id, std::string domain, int score, std::string lang = "hi") {
  EvalRecord r;
  r.item_id = std::move(id);
  r.domain = std::move(domain);
  r.lang = std::move(lang);
  r.score = score;
  return r;
}

AbVerdict ab(std::string id, Verdict v, bool a_first = true) {
  return AbVerdict{std::move(id), "ours", "theirs", a_first, v};
}

JudgeOptions fast() {
  JudgeOptions o;
  o.initial_delay = std::chrono::milliseconds(1);
  return o;
}

}  // namespace

TEST_CASE("verdict parsing") {
  CHECK(parse_verdict(R"({"score": 4, "rationale": "ok"})")->score == 4);
  CHECK(parse_verdict(R"(Here you go: {"score": 2, "rationale": "thin"} thanks)")->score == 2);
  const auto v = parse_verdict("Score: 3/5 because it misses a fact");
  REQUIRE(v);
  CHECK(v->score == 3);
  CHECK(!parse_verdict("excellent"));
  CHECK(!parse_verdict("Score: 7"));
}

TEST_CASE("scoring with mock judges") {
  const auto tmpl = PromptTemplate::builtin(JudgeMode::open);
  SUBCASE("JSON verdict") {
    auto j = MockJudge::constant(R"({"score": 4, "rationale": "good"})");
    const auto r = judge_score(item("q1"), *j, tmpl, fast());
    CHECK(r.score == 4);
    CHECK(r.rationale == "good");
    CHECK(!r.flagged);
    CHECK(r.attempts == 1);
    CHECK(r.template_hash == tmpl.hash());
  }
  SUBCASE("free-text verdict") {
    auto j = MockJudge::constant("Score: 3/5 because");
    CHECK(judge_score(item("q1"), *j, tmpl, fast()).score == 3);
  }
  SUBCASE("unparseable replies are retried, then flagged") {
    auto j = MockJudge::constant("excellent");
    const auto r = judge_score(item("q1"), *j, tmpl, fast());
    CHECK(r.flagged);
    CHECK(!r.score);
    CHECK(r.attempts == 3);
  }
  SUBCASE("a later attempt can succeed") {
    std::atomic<int> calls{0};
    MockJudge j([&](const std::string&) { return ++calls < 2 ? std::string("hmm") : std::string("5"); });
    const auto r = judge_score(item("q1"), j, tmpl, fast());
    CHECK(r.score == 5);
    CHECK(r.attempts == 2);
  }
}

TEST_CASE("fact mode needs reference facts") {
  auto j = MockJudge::constant("4");
  auto it = item("q1");
  it.reference_facts.reset();
  auto opts = fast();
  opts.mode = JudgeMode::fact;
  CHECK_THROWS_AS(judge_score(it, *j, PromptTemplate::builtin(JudgeMode::fact), opts), EvalError);
  opts.mode = JudgeMode::open;
  CHECK_NOTHROW(judge_score(it, *j, PromptTemplate::builtin(JudgeMode::open), opts));
}

TEST_CASE("prompts are rendered once and hashed deterministically") {
  PromptTemplate t("Q: {question}\nA: {response}\nF: {reference_facts}\n");
  auto it = item("q");
  it.response = "{question}";
  CHECK(t.render(it) == "Q: भारत की राजधानी क्या है?\nA: {question}\nF: राजधानी नई दिल्ली है।\n");
  const auto a = prompt_hash(build_messages(t, it));
  CHECK(a == prompt_hash(build_messages(t, it)));
  it.response = "other";
  CHECK(a != prompt_hash(build_messages(t, it)));
}

TEST_CASE("judge_all keeps input order and is deterministic") {
  std::vector<EvalItem> items;
  for (int i = 0; i < 40; ++i) items.push_back(item("q" + std::to_string(i)));
  auto j = MockJudge::hashed();
  auto opts = fast();
  opts.concurrency = 1;
  const auto serial = judge_all(items, *j, PromptTemplate::builtin(JudgeMode::open), opts);
  opts.concurrency = 8;
  const auto parallel = judge_all(items, *j, PromptTemplate::builtin(JudgeMode::open), opts);
  CHECK(serial == parallel);
  for (std::size_t i = 0; i < items.size(); ++i) CHECK(serial[i].item_id == items[i].id);
}

TEST_CASE("aggregate means") {
  auto a = aggregate_scores({scored("1", "Geo", 4), scored("2", "Geo", 4), scored("3", "Geo", 5)});
  CHECK(a.overall.mean == doctest::Approx(13.0 / 3));
  a = aggregate_scores({scored("1", "Geo", 5), scored("2", "Hist", 3)});
  CHECK(a.by_domain.at("Geo").mean == 5.0);
  CHECK(a.by_domain.at("Hist").mean == 3.0);
  CHECK(a.overall.mean == 4.0);

  auto flagged = scored("9", "Geo", 1);
  flagged.score.reset();
  flagged.flagged = true;
  a = aggregate_scores({scored("1", "Geo", 5), flagged});
  CHECK(a.flagged == 1);
  CHECK(a.scored == 1);
  CHECK(a.overall.mean == 5.0);
  CHECK_THROWS_AS(aggregate_scores({flagged}), EvalError);
}

TEST_CASE("confidence interval closed form") {
  Rng rng(4);
  std::vector<EvalRecord> recs;
  std::vector<int> xs;
  for (int i = 0; i < 100; ++i) {
    const int s = 1 + int(rng.below(5));
    xs.push_back(s);
    recs.push_back(scored(std::to_string(i), "Geo", s));
  }
  double mean = 0;
  for (int x : xs) mean += x;
  mean /= 100;
  double ss = 0;
  for (int x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / 99);
  const auto a = aggregate_scores(recs);
  CHECK(a.overall.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(a.overall.stddev == doctest::Approx(sd).epsilon(1e-12));
  CHECK(a.overall.ci_low == doctest::Approx(mean - 1.96 * sd / 10).epsilon(1e-4));
  CHECK(a.overall.ci_high == doctest::Approx(mean + 1.96 * sd / 10).epsilon(1e-4));

  // Aggregation ignores record order, bit for bit.
  auto shuffled = recs;
  rng.shuffle(shuffled);
  const auto b = aggregate_scores(shuffled);
  CHECK(b.overall.mean == a.overall.mean);
  CHECK(b.overall.ci_low == a.overall.ci_low);
  CHECK(to_json(b) == to_json(a));
}

TEST_CASE("single record has a zero-width interval") {
  const auto s = score_stats({3});
  CHECK(s.stddev == 0.0);
  CHECK(s.ci_low == 3.0);
  CHECK(s.ci_high == 3.0);
}

TEST_CASE("A/B win, tie, loss") {
  auto r = ab_aggregate({ab("1", Verdict::a_wins), ab("2", Verdict::a_wins), ab("3", Verdict::tie), ab("4", Verdict::b_wins)});
  CHECK(r.subject == "ours");
  CHECK(r.overall.win_pct() == 50.0);
  CHECK(r.overall.tie_pct() == 25.0);
  CHECK(r.overall.loss_pct() == 25.0);

  r = ab_aggregate({ab("1", Verdict::tie), ab("2", Verdict::tie)});
  CHECK(r.overall.win_pct() == 0.0);
  CHECK(r.overall.tie_pct() == 100.0);
  CHECK(r.overall.loss_pct() == 0.0);

  // Seen from the other side, wins and losses swap.
  r = ab_aggregate({ab("1", Verdict::a_wins), ab("2", Verdict::b_wins), ab("3", Verdict::b_wins)}, "theirs");
  CHECK(r.overall.wins == 2);
  CHECK(r.overall.losses == 1);

  CHECK_THROWS_AS(ab_aggregate({}), EvalError);
  CHECK_THROWS_AS(ab_aggregate({ab("1", Verdict::tie)}, "nobody"), EvalError);
}

TEST_CASE("order bias detection") {
  const auto order = assign_presentation(400, 3);
  std::vector<AbVerdict> fair, biased;
  Rng rng(5);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const bool a_first = order[i];
    // Fair judge: coin flip. Biased judge: the first response wins 80% of the time.
    fair.push_back(ab(std::to_string(i), rng.bernoulli(0.5) ? Verdict::a_wins : Verdict::b_wins, a_first));
    const bool first_wins = rng.bernoulli(0.8);
    biased.push_back(ab(std::to_string(i), first_wins == a_first ? Verdict::a_wins : Verdict::b_wins, a_first));
  }
  CHECK(!ab_aggregate(fair).order_bias.detected);
  const auto b = ab_aggregate(biased).order_bias;
  CHECK(b.detected);
  CHECK(b.first_shown_win_rate > 0.7);
  CHECK(b.decisive == 400);
}

TEST_CASE("presentation order is balanced and seeded") {
  for (std::size_t n : {0, 1, 2, 7, 1000}) {
    const auto p = assign_presentation(n, 17);
    CHECK(std::size_t(std::count(p.begin(), p.end(), true)) == n / 2);
  }
  const auto p = assign_presentation(1000, 17);
  CHECK(p == assign_presentation(1000, 17));
  CHECK(p != assign_presentation(1000, 18));
  // Balanced within any prefix too, roughly.
  const auto first_half = std::count(p.begin(), p.begin() + 500, true);
  CHECK(std::abs(double(first_half) / 500 - 0.5) <= 0.05);
}

TEST_CASE("verdict and record JSON round trips") {
  const auto v = ab("p", Verdict::b_wins, false);
  CHECK(ab_verdict_from_json(to_json(v)) == v);
  EvalRecord r = scored("x", "Geo", 2);
  r.rationale = "short";
  r.prompt_hash = "abc";
  r.attempts = 2;
  CHECK(eval_record_from_json(to_json(r)) == r);
  CHECK(eval_item_from_json(to_json(item("i"))) == item("i"));
  CHECK(verdict_from_string("a") == Verdict::a_wins);
  CHECK(verdict_from_string("b") == Verdict::b_wins);
}

TEST_CASE("judge reply shapes") {
  CHECK(parse_judge_reply(R"({"content": "4"})") == "4");
  CHECK(parse_judge_reply(R"({"message": {"content": "4"}})") == "4");
  CHECK(parse_judge_reply(R"({"choices": [{"message": {"content": "4"}}]})") == "4");
  CHECK_THROWS_AS(parse_judge_reply("{}"), JudgeTransportError);
  CHECK_THROWS_AS(parse_judge_reply("not json"), JudgeTransportError);
}

TEST_CASE("HTTP judge retries transport failures") {
  httplib::Server server;
  std::atomic<int> calls{0};
  std::string last_body;
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    last_body = req.body;
    res.set_content(R"({"choices": [{"message": {"content": "{\"score\": 5, \"rationale\": \"r\"}"}}]})",
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpJudgeClient judge("http://127.0.0.1:" + std::to_string(port) + "/v1/chat", "judge-x");
  const auto r = judge_score(item("q"), judge, PromptTemplate::builtin(JudgeMode::open), fast());
  CHECK(r.score == 5);
  CHECK(calls == 3);
  CHECK(r.judge_model == "judge-x");
  const auto body = nlohmann::json::parse(last_body);
  CHECK(body.at("model") == "judge-x");
  CHECK(body.at("temperature") == 0);

  auto opts = fast();
  opts.transport_attempts = 2;
  calls = 0;
  CHECK_THROWS_AS(judge_score(item("q"), judge, PromptTemplate::builtin(JudgeMode::open), opts), JudgeTransportError);

  server.stop();
  t.join();
}
