#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicurate/error.hpp"

namespace hicurate {

class EvalError : public Error {
 public:
  using Error::Error;
};

// Network or HTTP-level failure talking to the judge. Retried.
class JudgeTransportError : public EvalError {
 public:
  explicit JudgeTransportError(const std::string& msg) : EvalError("judge_unavailable", msg) {}
};

enum class JudgeMode { fact, open };
std::string_view to_string(JudgeMode m);
JudgeMode judge_mode_from_string(std::string_view s);

struct EvalItem {
  std::string id;
  std::string lang;
  std::string domain;
  std::string question;
  std::optional<std::string> reference_facts;
  std::string response;
  std::string model;  // which model produced the response; may be empty

  friend bool operator==(const EvalItem&, const EvalItem&) = default;
};

nlohmann::json to_json(const EvalItem& item);
EvalItem eval_item_from_json(const nlohmann::json& j);
std::vector<EvalItem> read_eval_items(const std::string& path);

struct EvalRecord {
  std::string item_id;
  std::string lang;
  std::string domain;
  std::string model;
  std::optional<int> score;  // 1..5, absent when flagged
  std::string rationale;
  std::string judge_model;
  std::string prompt_hash;
  std::string template_hash;
  int attempts = 0;
  bool flagged = false;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

nlohmann::json to_json(const EvalRecord& r);
EvalRecord eval_record_from_json(const nlohmann::json& j);

struct ChatMessage {
  std::string role;
  std::string content;
};

class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  // Returns the reply text. Must be safe to call concurrently.
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
  virtual std::string model_id() const = 0;
};

// Chat-style HTTP judge: POST {"model", "messages", "temperature": 0}. The
// reply content is read from "content", "message.content" or
// "choices[0].message.content".
class HttpJudgeClient final : public JudgeClient {
 public:
  HttpJudgeClient(std::string endpoint, std::string model, std::string api_key = {},
                  std::chrono::seconds timeout = std::chrono::seconds(120));
  // HICURATE_JUDGE_ENDPOINT, HICURATE_JUDGE_MODEL, HICURATE_JUDGE_API_KEY.
  static std::unique_ptr<HttpJudgeClient> from_env();

  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string model_id() const override { return model_; }

 private:
  std::string endpoint_;
  std::string base_;
  std::string path_;
  std::string model_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

nlohmann::json judge_request_json(const std::string& model, const std::vector<ChatMessage>& messages);
std::string parse_judge_reply(std::string_view body);

// Deterministic judge whose reply is a pure function of the prompt.
class MockJudge final : public JudgeClient {
 public:
  using ReplyFn = std::function<std::string(const std::string& prompt)>;
  explicit MockJudge(ReplyFn fn, std::string model = "mock-judge") : fn_(std::move(fn)), model_(std::move(model)) {}

  // Scores 1..5 chosen by a hash of the prompt, as a JSON verdict.
  static std::unique_ptr<MockJudge> hashed();
  // Always the same reply.
  static std::unique_ptr<MockJudge> constant(std::string reply);

  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string model_id() const override { return model_; }

 private:
  ReplyFn fn_;
  std::string model_;
};

// "mock:hash", "mock:score:<n>", "mock:reply:<text>", or an http(s) URL
// (model and key from the environment).
std::unique_ptr<JudgeClient> make_judge(const std::string& descriptor);

class PromptTemplate {
 public:
  explicit PromptTemplate(std::string text);
  static PromptTemplate builtin(JudgeMode mode);
  static PromptTemplate from_file(const std::string& path);

  const std::string& text() const { return text_; }
  const std::string& hash() const { return hash_; }

  // Replaces {question}, {response}, {reference_facts}, {lang}, {domain}.
  std::string render(const EvalItem& item) const;

 private:
  std::string text_;
  std::string hash_;
};

std::vector<ChatMessage> build_messages(const PromptTemplate& tmpl, const EvalItem& item);
std::string prompt_hash(const std::vector<ChatMessage>& messages);

struct ParsedVerdict {
  int score = 0;
  std::string rationale;
};

// JSON {"score": n, "rationale": ...} (possibly wrapped in prose), else the
// first standalone integer in 1..5 with the whole reply as rationale.
std::optional<ParsedVerdict> parse_verdict(std::string_view reply);

struct JudgeOptions {
  JudgeMode mode = JudgeMode::open;
  int max_attempts = 3;  // re-asks on an unparseable reply
  int transport_attempts = 4;
  std::chrono::milliseconds initial_delay{500};
  std::size_t concurrency = 4;
};

// Throws EvalError when fact mode lacks reference facts, and
// JudgeTransportError once transport retries are spent.
EvalRecord judge_score(const EvalItem& item, JudgeClient& judge, const PromptTemplate& tmpl,
                       const JudgeOptions& options = {});

// Output order = input order.
std::vector<EvalRecord> judge_all(const std::vector<EvalItem>& items, JudgeClient& judge, const PromptTemplate& tmpl,
                                  const JudgeOptions& options = {});

inline constexpr double kZ95 = 1.959963984540054;

struct ScoreStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 when n == 1
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct ScoreAggregate {
  ScoreStats overall;
  std::map<std::string, ScoreStats> by_lang;
  std::map<std::string, ScoreStats> by_domain;
  std::map<std::pair<std::string, std::string>, ScoreStats> by_lang_domain;
  std::uint64_t scored = 0;
  std::uint64_t flagged = 0;
};

nlohmann::json to_json(const ScoreAggregate& a);
std::string format_table(const ScoreAggregate& a);

// Means with 95% normal-approximation intervals. Flagged records are counted
// and excluded. Throws EvalError when no scored record remains.
ScoreAggregate aggregate_scores(std::vector<EvalRecord> records);
ScoreStats score_stats(const std::vector<int>& scores);

enum class Verdict { a_wins, b_wins, tie };
std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);  // also accepts "a", "b"

struct AbVerdict {
  std::string prompt_id;
  std::string model_a;
  std::string model_b;
  bool a_shown_first = true;
  Verdict verdict = Verdict::tie;

  friend bool operator==(const AbVerdict&, const AbVerdict&) = default;
};

nlohmann::json to_json(const AbVerdict& v);
AbVerdict ab_verdict_from_json(const nlohmann::json& j);
std::vector<AbVerdict> read_ab_verdicts(const std::string& path);

struct WinTieLoss {
  std::uint64_t wins = 0;
  std::uint64_t ties = 0;
  std::uint64_t losses = 0;
  std::uint64_t total() const { return wins + ties + losses; }
  double win_pct() const;
  double tie_pct() const;
  double loss_pct() const;
};

struct OrderBias {
  std::uint64_t decisive = 0;           // non-tie verdicts
  std::uint64_t first_shown_wins = 0;   // decisive verdicts won by the response shown first
  double first_shown_win_rate = 0.0;
  double subject_win_rate_first = 0.0;  // subject's win rate when shown first
  double subject_win_rate_second = 0.0;
  double z = 0.0;
  double p_value = 1.0;  // two-sided, normal approximation to Binomial(decisive, 1/2)
  bool detected = false;  // p_value < alpha
};

struct AbReport {
  std::string subject;
  WinTieLoss overall;
  std::map<std::string, WinTieLoss> by_opponent;
  OrderBias order_bias;
};

nlohmann::json to_json(const AbReport& r);

// Win/tie/loss from the subject's side (default: model_a of the first
// verdict). Verdicts not involving the subject are rejected.
AbReport ab_aggregate(const std::vector<AbVerdict>& verdicts, std::optional<std::string> subject = {},
                      double alpha = 0.01);

// Seeded, balanced presentation order: exactly floor(n/2) items show model A
// first, the rest B, in shuffled positions.
std::vector<bool> assign_presentation(std::size_t n, std::uint64_t seed);

}  // namespace hicurate
