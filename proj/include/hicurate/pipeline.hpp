#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicurate/corpus.hpp"
#include "hicurate/dedup.hpp"

namespace hicurate {

class PipelineError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

struct PipelineConfig {
  std::string config_dir = ".";  // relative paths resolve against this
  std::string work_dir = "work";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  // Raw JSONL: {"text", "lang", optional "id", "source", "translate"}.
  std::vector<std::string> inputs;
  std::vector<nlohmann::json> tokenizers{{{"id", "ws"}, {"mode", "whitespace"}}};

  struct Parse {
    std::vector<std::string> abbreviations;  // empty: built-in lists
  } parse;

  struct Translate {
    std::string backend = "mock:echo";
    std::string src_lang = "en";
    std::string tgt_lang = "hi";
    std::size_t max_sentences = 32;
    std::size_t max_chars = 8000;
    std::size_t concurrency = 8;
    int max_attempts = 4;
    int initial_delay_ms = 250;
  } translate;

  struct Lm {
    std::string lang = "hi";
    int order = 3;
    std::string smoothing = "kneser-ney";
    double add_k = 0.1;
    std::string tokenizer = "ws";
  } lm;

  struct Filter {
    double target_discard_rate = 0.02;
    std::vector<std::string> provenance{"synthetic-translated"};
  } filter;

  struct Translit {
    std::string scheme;  // empty: built-in Hinglish scheme
    std::string source_lang = "hi";
  } translit;

  struct Dedup {
    std::size_t shingle_width = 5;
    std::size_t num_hashes = 128;
    std::size_t bands = 16;
    std::size_t rows = 8;
    double verify_threshold = 0.8;
    bool exact_verify = false;
  } dedup;

  struct Blend {
    std::string tokenizer = "ws";
    double real_weight = 2.0;
    double synthetic_weight = 1.0;
    std::map<std::string, double> language_split{{"en", 0.5}, {"hi", 0.5}};
    std::optional<std::uint64_t> target_total_tokens;
    std::optional<std::uint64_t> nominal_total_tokens;
    std::uint64_t batch_size = 8;
    std::uint64_t steps = 100;
  } blend;

  std::string resolve(const std::string& path) const;
  std::string stage_dir(std::string_view stage) const;
};

// Unknown keys anywhere are rejected with ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j, const std::string& config_dir = ".");
PipelineConfig load_config(const std::string& path);
nlohmann::json to_json(const PipelineConfig& c);

// Stage order of run-all.
const std::vector<std::string>& run_all_stages();

struct StageOutcome {
  std::string stage;
  bool skipped = false;  // resumed: outputs already complete and verified
  nlohmann::json report;
};

// Runs pipeline stages under <work_dir>/<stage>/. Each stage writes its shards
// with manifests, report.json, config.resolved.json and finally stage.json,
// which records checksums of the stage config, upstream inputs and outputs.
// With resume set, a stage whose stage.json verifies is skipped; a recorded
// stage whose files no longer match throws checksum_mismatch.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, bool resume = false);

  StageOutcome run_stage(const std::string& stage);
  std::vector<StageOutcome> run_all();

  const PipelineConfig& config() const { return config_; }

 private:
  PipelineConfig config_;
  bool resume_;
};

std::string shard_path(const PipelineConfig& c, std::string_view stage, std::string_view name = "docs.jsonl");

// Parses raw records into segmented documents. Records without an id get a
// content address from (source, line number).
std::vector<Document> parse_raw_jsonl(const std::string& path, const std::string& default_source);

// Entry point of the `hicurate` executable. Exit codes: 0 success, 1 runtime
// failure, 2 usage or configuration error. Failures print a JSON error report
// to stderr.
int run_cli(int argc, char** argv);

}  // namespace hicurate
