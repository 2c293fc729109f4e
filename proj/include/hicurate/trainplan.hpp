#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hicurate/error.hpp"

namespace hicurate {

class PlanError : public Error {
 public:
  using Error::Error;
};

class DanglingReferenceError : public PlanError {
 public:
  explicit DanglingReferenceError(const std::string& msg) : PlanError("dangling_reference", msg) {}
};

struct LrSchedule {
  double lr_max = 0.0;
  double lr_min = 0.0;
  std::uint64_t total_steps = 0;
  std::uint64_t warmup_steps = 0;

  friend bool operator==(const LrSchedule&, const LrSchedule&) = default;
};

// Throws PlanError unless lr_max >= lr_min > 0, total_steps > 0 and
// warmup_steps <= total_steps.
void validate(const LrSchedule& s);

// Linear warmup from 0 to lr_max, then cosine decay to lr_min at total_steps.
// lr_at(warmup) is lr_max and lr_at(total) is lr_min exactly.
double lr_at(const LrSchedule& s, std::uint64_t step);

// lr_at at n evenly spaced steps from 0 to total_steps inclusive (n >= 2).
std::vector<std::pair<std::uint64_t, double>> lr_table(const LrSchedule& s, std::size_t n);

enum class TrainStage { pretrain, sft, dpo };
std::string_view to_string(TrainStage s);
TrainStage train_stage_from_string(std::string_view s);

struct DataRef {
  std::string name;
  std::string manifest;  // path as given
  std::string sha256;    // of the manifest file

  friend bool operator==(const DataRef&, const DataRef&) = default;
};

struct StagePlan {
  TrainStage stage = TrainStage::sft;
  std::uint64_t global_batch_size = 0;
  std::uint64_t epochs = 1;
  LrSchedule lr;
  std::vector<DataRef> data;
  std::map<std::string, std::uint64_t> example_counts;
  std::optional<std::uint64_t> total_tokens;

  friend bool operator==(const StagePlan&, const StagePlan&) = default;
};

nlohmann::json to_json(const StagePlan& p);
StagePlan stage_plan_from_json(const nlohmann::json& j);
std::string serialize(const StagePlan& p);  // pretty JSON with a trailing newline

struct PlanParams {
  TrainStage stage = TrainStage::sft;
  std::optional<std::uint64_t> global_batch_size;
  std::optional<std::uint64_t> epochs;
  std::optional<double> lr_max;
  std::optional<double> lr_min;
  std::uint64_t warmup_steps = 0;
  // Required for pretrain; otherwise derived as ceil(examples * epochs / batch).
  std::optional<std::uint64_t> total_steps;
  std::optional<std::map<std::string, std::uint64_t>> example_counts;
  std::optional<std::uint64_t> total_tokens;
  std::map<std::string, std::string> data;  // name -> manifest path
};

// Stage defaults:
//   pretrain  lr 2e-4 -> 4.5e-7, 400B tokens; batch and steps must be given
//   sft       batch 1024, lr 5e-6 -> 9e-7, 200k English examples
//   dpo       batch 512,  lr 9e-6 -> 9e-7, 200k English + 60k Hindi examples
// All stages train for one epoch.
PlanParams default_params(TrainStage stage);

// Fills unset fields from the stage defaults, validates, and checksums each
// referenced manifest (relative paths resolve against base_dir). A reference
// to a missing manifest throws DanglingReferenceError.
StagePlan emit_plan(const PlanParams& params, const std::string& base_dir = ".");

}  // namespace hicurate
