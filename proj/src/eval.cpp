#include "hicurate/eval.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "hicurate/embedded_data.hpp"
#include "hicurate/hashing.hpp"
#include "hicurate/parallel.hpp"
#include "hicurate/random.hpp"
#include "hicurate/text.hpp"

namespace hicurate {
using nlohmann::json;

std::string_view to_string(JudgeMode m) { return m == JudgeMode::fact ? "fact" : "open"; }

JudgeMode judge_mode_from_string(std::string_view s) {
  if (s == "fact") return JudgeMode::fact;
  if (s == "open") return JudgeMode::open;
  throw EvalError("invalid_argument", "unknown judge mode '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Items and records

json to_json(const EvalItem& item) {
  json j = {{"id", item.id},           {"lang", item.lang},         {"domain", item.domain},
            {"question", item.question}, {"response", item.response}};
  if (item.reference_facts) j["reference_facts"] = *item.reference_facts;
  if (!item.model.empty()) j["model"] = item.model;
  return j;
}

EvalItem eval_item_from_json(const json& j) {
  try {
    EvalItem item;
    item.id = j.at("id").get<std::string>();
    item.lang = j.at("lang").get<std::string>();
    item.domain = j.value("domain", "general");
    item.question = j.at("question").get<std::string>();
    if (j.contains("reference_facts") && !j.at("reference_facts").is_null()) {
      item.reference_facts = j.at("reference_facts").get<std::string>();
    }
    item.response = j.at("response").get<std::string>();
    item.model = j.value("model", "");
    if (item.id.empty()) throw EvalError("schema", "eval item id must be nonempty");
    return item;
  } catch (const json::exception& e) {
    throw EvalError("schema", std::string("eval item: ") + e.what());
  }
}

std::vector<EvalItem> read_eval_items(const std::string& path) {
  std::vector<EvalItem> out;
  std::istringstream in(text::read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(eval_item_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw EvalError("schema", path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json to_json(const EvalRecord& r) {
  json j = {{"item_id", r.item_id},         {"lang", r.lang},
            {"domain", r.domain},           {"rationale", r.rationale},
            {"judge_model", r.judge_model}, {"prompt_hash", r.prompt_hash},
            {"template_hash", r.template_hash}, {"attempts", r.attempts},
            {"flagged", r.flagged}};
  j["score"] = r.score ? json(*r.score) : json(nullptr);
  if (!r.model.empty()) j["model"] = r.model;
  return j;
}

EvalRecord eval_record_from_json(const json& j) {
  try {
    EvalRecord r;
    r.item_id = j.at("item_id").get<std::string>();
    r.lang = j.at("lang").get<std::string>();
    r.domain = j.at("domain").get<std::string>();
    r.model = j.value("model", "");
    if (j.contains("score") && !j.at("score").is_null()) r.score = j.at("score").get<int>();
    r.rationale = j.value("rationale", "");
    r.judge_model = j.value("judge_model", "");
    r.prompt_hash = j.value("prompt_hash", "");
    r.template_hash = j.value("template_hash", "");
    r.attempts = j.value("attempts", 0);
    r.flagged = j.value("flagged", !r.score.has_value());
    if (r.score && (*r.score < 1 || *r.score > 5)) throw EvalError("schema", "score outside 1..5");
    if (!r.flagged && !r.score) throw EvalError("schema", "unflagged record without a score");
    return r;
  } catch (const json::exception& e) {
    throw EvalError("schema", std::string("eval record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Judge clients

json judge_request_json(const std::string& model, const std::vector<ChatMessage>& messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", model}, {"messages", msgs}, {"temperature", 0}};
}

std::string parse_judge_reply(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw JudgeTransportError(std::string("malformed judge reply: ") + e.what());
  }
  if (j.contains("content") && j["content"].is_string()) return j["content"].get<std::string>();
  if (j.contains("message") && j["message"].is_object() && j["message"].contains("content")) {
    return j["message"]["content"].get<std::string>();
  }
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& c = j["choices"][0];
    if (c.contains("message") && c["message"].contains("content")) return c["message"]["content"].get<std::string>();
  }
  throw JudgeTransportError("judge reply carries no content string");
}

HttpJudgeClient::HttpJudgeClient(std::string endpoint, std::string model, std::string api_key,
                                 std::chrono::seconds timeout)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme_end = endpoint_.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("judge endpoint must be an http(s) URL: " + endpoint_);
  const auto path_start = endpoint_.find('/', scheme_end + 3);
  base_ = endpoint_.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);
}

std::unique_ptr<HttpJudgeClient> HttpJudgeClient::from_env() {
  const char* endpoint = std::getenv("HICURATE_JUDGE_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') {
    throw EvalError("config", "HICURATE_JUDGE_ENDPOINT is not set");
  }
  const char* model = std::getenv("HICURATE_JUDGE_MODEL");
  const char* key = std::getenv("HICURATE_JUDGE_API_KEY");
  return std::make_unique<HttpJudgeClient>(endpoint, model ? model : "judge", key ? key : "");
}

std::string HttpJudgeClient::complete(const std::vector<ChatMessage>& messages) {
  httplib::Client client(base_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(path_, headers, judge_request_json(model_, messages).dump(), "application/json");
  if (!res) throw JudgeTransportError(endpoint_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw JudgeTransportError(endpoint_ + ": HTTP " + std::to_string(res->status));
  return parse_judge_reply(res->body);
}

std::string MockJudge::complete(const std::vector<ChatMessage>& messages) {
  std::string prompt;
  for (const auto& m : messages) prompt += m.role + "\n" + m.content + "\n";
  return fn_(prompt);
}

std::unique_ptr<MockJudge> MockJudge::hashed() {
  return std::make_unique<MockJudge>(
      [](const std::string& prompt) {
        const int score = static_cast<int>(mix64(fnv1a64(prompt)) % 5) + 1;
        return json({{"score", score}, {"rationale", "mock verdict"}}).dump();
      },
      "mock:hash");
}

std::unique_ptr<MockJudge> MockJudge::constant(std::string reply) {
  return std::make_unique<MockJudge>([reply](const std::string&) { return reply; }, "mock:constant");
}

std::unique_ptr<JudgeClient> make_judge(const std::string& descriptor) {
  if (descriptor == "mock:hash") return MockJudge::hashed();
  if (descriptor.starts_with("mock:score:")) {
    const int s = std::stoi(descriptor.substr(11));
    return MockJudge::constant(json({{"score", s}, {"rationale", "constant mock"}}).dump());
  }
  if (descriptor.starts_with("mock:reply:")) return MockJudge::constant(descriptor.substr(11));
  if (descriptor.starts_with("http://") || descriptor.starts_with("https://")) {
    const char* model = std::getenv("HICURATE_JUDGE_MODEL");
    const char* key = std::getenv("HICURATE_JUDGE_API_KEY");
    return std::make_unique<HttpJudgeClient>(descriptor, model ? model : "judge", key ? key : "");
  }
  if (descriptor == "env") return HttpJudgeClient::from_env();
  throw InvalidArgument("unknown judge '" + descriptor + "'");
}

// ---------------------------------------------------------------------------
// Prompts

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)), hash_(sha256_hex(text_)) {}

PromptTemplate PromptTemplate::builtin(JudgeMode mode) {
  return PromptTemplate(std::string(mode == JudgeMode::fact ? embedded::rubric_fact : embedded::rubric_open));
}

PromptTemplate PromptTemplate::from_file(const std::string& path) { return PromptTemplate(text::read_file(path)); }

std::string PromptTemplate::render(const EvalItem& item) const {
  const std::pair<std::string_view, std::string_view> fields[] = {
      {"{question}", item.question},
      {"{response}", item.response},
      {"{reference_facts}", item.reference_facts ? std::string_view(*item.reference_facts) : std::string_view()},
      {"{lang}", item.lang},
      {"{domain}", item.domain},
  };
  // Single left-to-right pass so substituted text is never re-scanned.
  std::string out;
  std::size_t i = 0;
  while (i < text_.size()) {
    bool matched = false;
    if (text_[i] == '{') {
      for (const auto& [key, value] : fields) {
        if (std::string_view(text_).substr(i, key.size()) == key) {
          out += value;
          i += key.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out += text_[i++];
  }
  return out;
}

std::vector<ChatMessage> build_messages(const PromptTemplate& tmpl, const EvalItem& item) {
  return {{"system", "You are a strict, impartial evaluator. Follow the rubric and answer in the requested format."},
          {"user", tmpl.render(item)}};
}

std::string prompt_hash(const std::vector<ChatMessage>& messages) {
  return sha256_hex(judge_request_json("", messages).at("messages").dump());
}

std::optional<ParsedVerdict> parse_verdict(std::string_view reply) {
  auto from_json = [](const json& j) -> std::optional<ParsedVerdict> {
    if (!j.is_object() || !j.contains("score")) return std::nullopt;
    const auto& s = j["score"];
    int score = 0;
    if (s.is_number_integer()) {
      score = s.get<int>();
    } else if (s.is_number_float() && s.get<double>() == std::floor(s.get<double>())) {
      score = static_cast<int>(s.get<double>());
    } else if (s.is_string() && s.get<std::string>().size() == 1 && std::isdigit(static_cast<unsigned char>(s.get<std::string>()[0]))) {
      score = s.get<std::string>()[0] - '0';
    } else {
      return std::nullopt;
    }
    if (score < 1 || score > 5) return std::nullopt;
    std::string rationale = j.contains("rationale") && j["rationale"].is_string() ? j["rationale"].get<std::string>() : "";
    return ParsedVerdict{score, rationale};
  };

  const json whole = json::parse(reply, nullptr, false);
  if (!whole.is_discarded()) {
    if (auto v = from_json(whole)) return v;
  }
  // JSON object embedded in prose or a code fence.
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
    const json inner = json::parse(reply.substr(open, close - open + 1), nullptr, false);
    if (!inner.is_discarded()) {
      if (auto v = from_json(inner)) return v;
    }
  }
  // First standalone integer in 1..5. Digit runs that are part of a decimal
  // number ("4.5") are skipped.
  std::size_t i = 0;
  while (i < reply.size()) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    const bool decimal_tail = j + 1 < reply.size() && reply[j] == '.' && std::isdigit(static_cast<unsigned char>(reply[j + 1]));
    const bool decimal_head = i >= 2 && reply[i - 1] == '.' && std::isdigit(static_cast<unsigned char>(reply[i - 2]));
    if (j - i == 1 && !decimal_tail && !decimal_head && reply[i] >= '1' && reply[i] <= '5') {
      return ParsedVerdict{reply[i] - '0', std::string(text::trim(reply))};
    }
    i = j;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scoring

EvalRecord judge_score(const EvalItem& item, JudgeClient& judge, const PromptTemplate& tmpl,
                       const JudgeOptions& options) {
  if (options.mode == JudgeMode::fact && (!item.reference_facts || item.reference_facts->empty())) {
    throw EvalError("missing_reference_facts", "item '" + item.id + "' has no reference facts for fact mode");
  }
  const auto messages = build_messages(tmpl, item);
  EvalRecord rec;
  rec.item_id = item.id;
  rec.lang = item.lang;
  rec.domain = item.domain;
  rec.model = item.model;
  rec.judge_model = judge.model_id();
  rec.prompt_hash = prompt_hash(messages);
  rec.template_hash = tmpl.hash();

  std::string last_reply;
  for (int attempt = 1; attempt <= std::max(1, options.max_attempts); ++attempt) {
    rec.attempts = attempt;
    auto delay = options.initial_delay;
    for (int t = 1;; ++t) {
      try {
        last_reply = judge.complete(messages);
        break;
      } catch (const JudgeTransportError&) {
        if (t >= options.transport_attempts) throw;
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
    }
    if (auto v = parse_verdict(last_reply)) {
      rec.score = v->score;
      rec.rationale = v->rationale;
      return rec;
    }
  }
  rec.flagged = true;
  rec.rationale = "unparseable judge reply: " + last_reply.substr(0, 200);
  return rec;
}

std::vector<EvalRecord> judge_all(const std::vector<EvalItem>& items, JudgeClient& judge, const PromptTemplate& tmpl,
                                  const JudgeOptions& options) {
  return parallel_map<EvalRecord>(items.size(), options.concurrency,
                                  [&](std::size_t i) { return judge_score(items[i], judge, tmpl, options); });
}

// ---------------------------------------------------------------------------
// Aggregation

ScoreStats score_stats(const std::vector<int>& scores) {
  ScoreStats s;
  s.n = scores.size();
  if (s.n == 0) return s;
  double sum = 0.0;
  for (int x : scores) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (int x : scores) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  const double half = kZ95 * s.stddev / std::sqrt(static_cast<double>(s.n));
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  return s;
}

ScoreAggregate aggregate_scores(std::vector<EvalRecord> records) {
  // A fixed order makes floating-point sums independent of input order.
  std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    return std::tie(a.item_id, a.model, a.score) < std::tie(b.item_id, b.model, b.score);
  });
  ScoreAggregate agg;
  std::vector<int> all;
  std::map<std::string, std::vector<int>> by_lang;
  std::map<std::string, std::vector<int>> by_domain;
  std::map<std::pair<std::string, std::string>, std::vector<int>> by_ld;
  for (const auto& r : records) {
    if (r.flagged || !r.score) {
      ++agg.flagged;
      continue;
    }
    ++agg.scored;
    all.push_back(*r.score);
    by_lang[r.lang].push_back(*r.score);
    by_domain[r.domain].push_back(*r.score);
    by_ld[{r.lang, r.domain}].push_back(*r.score);
  }
  if (agg.scored == 0) {
    throw EvalError("no_scores", records.empty() ? "no eval records" : "every eval record is flagged");
  }
  agg.overall = score_stats(all);
  for (const auto& [k, v] : by_lang) agg.by_lang[k] = score_stats(v);
  for (const auto& [k, v] : by_domain) agg.by_domain[k] = score_stats(v);
  for (const auto& [k, v] : by_ld) agg.by_lang_domain[k] = score_stats(v);
  return agg;
}

namespace {

json stats_json(const ScoreStats& s) {
  return {{"n", s.n}, {"mean", s.mean}, {"stddev", s.stddev}, {"ci95", {s.ci_low, s.ci_high}}};
}

}  // namespace

json to_json(const ScoreAggregate& a) {
  json by_lang = json::object();
  for (const auto& [k, v] : a.by_lang) by_lang[k] = stats_json(v);
  json by_domain = json::object();
  for (const auto& [k, v] : a.by_domain) by_domain[k] = stats_json(v);
  json by_ld = json::array();
  for (const auto& [k, v] : a.by_lang_domain) {
    auto j = stats_json(v);
    j["lang"] = k.first;
    j["domain"] = k.second;
    by_ld.push_back(j);
  }
  return {{"overall", stats_json(a.overall)}, {"by_lang", by_lang},   {"by_domain", by_domain},
          {"by_lang_domain", by_ld},          {"scored", a.scored}, {"flagged", a.flagged}};
}

std::string format_table(const ScoreAggregate& a) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  auto row = [&](const std::string& lang, const std::string& domain, const ScoreStats& s) {
    os << lang;
    for (std::size_t i = lang.size(); i < 6; ++i) os << ' ';
    os << domain;
    for (std::size_t i = domain.size(); i < 16; ++i) os << ' ';
    os << s.n << "\t" << s.mean << "\t[" << s.ci_low << ", " << s.ci_high << "]\n";
  };
  os << "lang  domain          n\tmean\tci95\n";
  for (const auto& [k, v] : a.by_lang_domain) row(k.first, k.second, v);
  row("*", "*", a.overall);
  os << "flagged: " << a.flagged << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// A/B

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::a_wins: return "a_wins";
    case Verdict::b_wins: return "b_wins";
    case Verdict::tie: return "tie";
  }
  return "?";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "a_wins" || s == "a") return Verdict::a_wins;
  if (s == "b_wins" || s == "b") return Verdict::b_wins;
  if (s == "tie") return Verdict::tie;
  throw EvalError("schema", "unknown verdict '" + std::string(s) + "'");
}

json to_json(const AbVerdict& v) {
  return {{"prompt_id", v.prompt_id},
          {"model_a", v.model_a},
          {"model_b", v.model_b},
          {"shown_first", v.a_shown_first ? "a" : "b"},
          {"verdict", std::string(to_string(v.verdict))}};
}

AbVerdict ab_verdict_from_json(const json& j) {
  try {
    AbVerdict v;
    v.prompt_id = j.at("prompt_id").get<std::string>();
    v.model_a = j.at("model_a").get<std::string>();
    v.model_b = j.at("model_b").get<std::string>();
    const auto first = j.value("shown_first", "a");
    if (first != "a" && first != "b") throw EvalError("schema", "shown_first must be \"a\" or \"b\"");
    v.a_shown_first = first == "a";
    v.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    if (v.model_a == v.model_b) throw EvalError("schema", "model_a and model_b must differ");
    return v;
  } catch (const json::exception& e) {
    throw EvalError("schema", std::string("ab verdict: ") + e.what());
  }
}

std::vector<AbVerdict> read_ab_verdicts(const std::string& path) {
  std::vector<AbVerdict> out;
  std::istringstream in(text::read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(ab_verdict_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw EvalError("schema", path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

double WinTieLoss::win_pct() const { return total() ? 100.0 * static_cast<double>(wins) / static_cast<double>(total()) : 0.0; }
double WinTieLoss::tie_pct() const { return total() ? 100.0 * static_cast<double>(ties) / static_cast<double>(total()) : 0.0; }
double WinTieLoss::loss_pct() const { return total() ? 100.0 * static_cast<double>(losses) / static_cast<double>(total()) : 0.0; }

namespace {

json wtl_json(const WinTieLoss& w) {
  return {{"wins", w.wins},           {"ties", w.ties},         {"losses", w.losses},
          {"win_pct", w.win_pct()}, {"tie_pct", w.tie_pct()}, {"loss_pct", w.loss_pct()}};
}

}  // namespace

json to_json(const AbReport& r) {
  json opp = json::object();
  for (const auto& [k, v] : r.by_opponent) opp[k] = wtl_json(v);
  const auto& b = r.order_bias;
  return {{"subject", r.subject},
          {"overall", wtl_json(r.overall)},
          {"by_opponent", opp},
          {"order_bias",
           {{"decisive", b.decisive},
            {"first_shown_wins", b.first_shown_wins},
            {"first_shown_win_rate", b.first_shown_win_rate},
            {"subject_win_rate_first", b.subject_win_rate_first},
            {"subject_win_rate_second", b.subject_win_rate_second},
            {"z", b.z},
            {"p_value", b.p_value},
            {"detected", b.detected}}}};
}

AbReport ab_aggregate(const std::vector<AbVerdict>& verdicts, std::optional<std::string> subject, double alpha) {
  if (verdicts.empty()) throw EvalError("no_verdicts", "no A/B verdicts");
  AbReport r;
  r.subject = subject.value_or(verdicts.front().model_a);
  std::uint64_t subj_first = 0, subj_first_wins = 0, subj_second = 0, subj_second_wins = 0;
  for (const auto& v : verdicts) {
    bool subject_is_a;
    if (v.model_a == r.subject) {
      subject_is_a = true;
    } else if (v.model_b == r.subject) {
      subject_is_a = false;
    } else {
      throw EvalError("invalid_argument", "verdict '" + v.prompt_id + "' does not involve '" + r.subject + "'");
    }
    const std::string& opponent = subject_is_a ? v.model_b : v.model_a;
    auto& slot = r.by_opponent[opponent];
    const bool subject_first = subject_is_a == v.a_shown_first;
    const bool subject_won = v.verdict == (subject_is_a ? Verdict::a_wins : Verdict::b_wins);
    if (v.verdict == Verdict::tie) {
      ++slot.ties, ++r.overall.ties;
    } else if (subject_won) {
      ++slot.wins, ++r.overall.wins;
    } else {
      ++slot.losses, ++r.overall.losses;
    }
    (subject_first ? subj_first : subj_second)++;
    if (subject_won) (subject_first ? subj_first_wins : subj_second_wins)++;
    if (v.verdict != Verdict::tie) {
      ++r.order_bias.decisive;
      const bool first_won = (v.verdict == Verdict::a_wins) == v.a_shown_first;
      if (first_won) ++r.order_bias.first_shown_wins;
    }
  }
  auto& b = r.order_bias;
  b.subject_win_rate_first = subj_first ? static_cast<double>(subj_first_wins) / static_cast<double>(subj_first) : 0.0;
  b.subject_win_rate_second = subj_second ? static_cast<double>(subj_second_wins) / static_cast<double>(subj_second) : 0.0;
  if (b.decisive > 0) {
    const double n = static_cast<double>(b.decisive);
    b.first_shown_win_rate = static_cast<double>(b.first_shown_wins) / n;
    b.z = (static_cast<double>(b.first_shown_wins) - n / 2.0) / std::sqrt(n / 4.0);
    b.p_value = std::erfc(std::abs(b.z) / std::sqrt(2.0));
    b.detected = b.p_value < alpha;
  }
  return r;
}

std::vector<bool> assign_presentation(std::size_t n, std::uint64_t seed) {
  std::vector<bool> a_first(n, false);
  for (std::size_t i = 0; i < n / 2; ++i) a_first[i] = true;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(derive_seed(seed, "ab-presentation"));
  rng.shuffle(perm);
  std::vector<bool> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a_first[perm[i]];
  return out;
}

}  // namespace hicurate
