#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicurate/corpus.hpp"
#include "hicurate/random.hpp"
#include "hicurate/tokenizer.hpp"

namespace hicurate {

class BlendError : public Error {
 public:
  using Error::Error;
};

struct BlendComponent {
  std::string name;
  std::string lang;
  Provenance provenance = Provenance::real_web;
  std::vector<std::string> shards;
  std::map<std::string, std::uint64_t> token_counts;  // tokenizer id -> tokens
  std::optional<std::uint64_t> documents;
  double weight = 1.0;

  friend bool operator==(const BlendComponent&, const BlendComponent&) = default;
};

struct BlendSpec {
  std::vector<BlendComponent> components;
  std::string tokenizer = "ws";  // which token_counts entry budgets refer to
  // Hard budget: a computed total further than 0.5% away is an error.
  std::optional<std::uint64_t> target_total_tokens;
  // Soft budget: a mismatch is reported as a warning.
  std::optional<std::uint64_t> nominal_total_tokens;
  // Declared share of tokens per language, e.g. {"hi": 0.5, "en": 0.5}. Token
  // shares that miss it are warned about; sampling rescales weights to it.
  std::map<std::string, double> language_split;
  std::uint64_t seed = 0;

  friend bool operator==(const BlendSpec&, const BlendSpec&) = default;
};

nlohmann::json to_json(const BlendComponent& c);
nlohmann::json to_json(const BlendSpec& s);
BlendSpec blend_spec_from_json(const nlohmann::json& j);
BlendSpec read_blend_spec(const std::string& path);

// Throws BlendError on duplicate names, non-positive weights or a bad split.
void validate(const BlendSpec& spec);

inline constexpr double kBudgetTolerance = 0.005;

struct ComponentTokens {
  std::string name;
  std::string lang;
  Provenance provenance;
  std::uint64_t tokens = 0;
  std::uint64_t documents = 0;
  bool from_shards = false;
};

struct TokenAccounting {
  std::string tokenizer;
  std::vector<ComponentTokens> components;  // spec order
  std::map<std::string, std::uint64_t> by_language;
  std::map<std::string, std::uint64_t> by_provenance;
  std::map<std::string, std::map<std::string, std::uint64_t>> by_language_provenance;
  std::uint64_t total = 0;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const TokenAccounting& a);

// Totals per language and provenance. A component without a declared count
// for spec.tokenizer takes it from its shard manifests, or by tokenizing the
// shards with `counter` when a manifest lacks it. Relative shard paths resolve
// against base_dir. Throws BlendError when target_total_tokens is missed by
// more than 0.5%; nominal and language-split mismatches become warnings.
TokenAccounting account_tokens(const BlendSpec& spec, const std::string& base_dir = ".",
                               const Tokenizer* counter = nullptr);

struct FertilityReport {
  std::string tokenizer;
  std::uint64_t words = 0;
  std::uint64_t tokens = 0;
  double tokens_per_word = 0.0;
};

nlohmann::json to_json(const FertilityReport& r);

// Tokens per whitespace word over the documents' text units. Throws BlendError
// when there are no words.
FertilityReport fertility(const std::vector<Document>& docs, const Tokenizer& tokenizer);

struct ScheduleEntry {
  std::uint64_t step = 0;
  std::uint64_t slot = 0;  // position in the batch
  std::size_t component = 0;
  std::uint64_t doc_index = 0;
  std::uint64_t epoch = 0;  // of this component
};

std::string schedule_line(const BlendSpec& spec, const ScheduleEntry& e);

struct ScheduleReport {
  std::uint64_t batch_size = 0;
  std::uint64_t steps = 0;
  std::uint64_t draws = 0;
  std::vector<double> probabilities;  // per component
  std::vector<std::uint64_t> component_draws;
  std::vector<std::uint64_t> epochs_started;
  std::uint64_t estimated_tokens = 0;
  std::uint64_t available_tokens = 0;
  bool multi_epoch = false;
};

nlohmann::json to_json(const BlendSpec& spec, const ScheduleReport& r);

// Per-draw component probabilities: normalized weights, rescaled so each
// language's total matches language_split when one is declared.
std::vector<double> component_probabilities(const BlendSpec& spec);

// Seeded stream of document draws. Each draw picks a component with its
// probability, then the next index of that component's current permutation;
// an exhausted permutation starts a new epoch with a fresh shuffle.
class ScheduleSampler {
 public:
  // doc_counts[i] is the number of documents in component i (must be > 0).
  ScheduleSampler(const BlendSpec& spec, std::vector<std::uint64_t> doc_counts, std::uint64_t batch_size);

  ScheduleEntry next();
  const ScheduleReport& report() const { return report_; }

 private:
  void start_epoch(std::size_t c);

  BlendSpec spec_;
  std::vector<std::uint64_t> doc_counts_;
  std::vector<double> cumulative_;
  Rng rng_;
  std::vector<std::vector<std::uint64_t>> perm_;
  std::vector<std::uint64_t> cursor_;
  std::uint64_t draw_ = 0;
  double estimated_ = 0.0;
  ScheduleReport report_;
};

struct Schedule {
  std::vector<ScheduleEntry> entries;
  ScheduleReport report;
};

// Document counts come from each component's `documents` field.
std::vector<std::uint64_t> component_doc_counts(const BlendSpec& spec);

Schedule sample_schedule(const BlendSpec& spec, std::uint64_t batch_size, std::uint64_t steps);
// Streams the schedule as JSONL and returns its report.
ScheduleReport write_schedule(const BlendSpec& spec, std::uint64_t batch_size, std::uint64_t steps,
                              std::ostream& out);

}  // namespace hicurate
