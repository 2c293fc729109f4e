#include "hicurate/trainplan.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "hicurate/hashing.hpp"

namespace hicurate {
namespace fs = std::filesystem;

void validate(const LrSchedule& s) {
  if (!(s.lr_min > 0.0) || !(s.lr_max >= s.lr_min) || !std::isfinite(s.lr_max)) {
    throw PlanError("invalid_schedule", "learning rates need lr_max >= lr_min > 0");
  }
  if (s.total_steps == 0) throw PlanError("invalid_schedule", "total_steps must be > 0");
  if (s.warmup_steps > s.total_steps) throw PlanError("invalid_schedule", "warmup_steps exceeds total_steps");
}

double lr_at(const LrSchedule& s, std::uint64_t step) {
  validate(s);
  if (step > s.total_steps) {
    throw PlanError("step_out_of_range",
                    "step " + std::to_string(step) + " outside [0, " + std::to_string(s.total_steps) + "]");
  }
  if (step == s.total_steps) return s.lr_min;
  if (step < s.warmup_steps) {
    return s.lr_max * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  if (step == s.warmup_steps) return s.lr_max;
  const double t = static_cast<double>(step - s.warmup_steps) / static_cast<double>(s.total_steps - s.warmup_steps);
  return s.lr_min + 0.5 * (s.lr_max - s.lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

std::vector<std::pair<std::uint64_t, double>> lr_table(const LrSchedule& s, std::size_t n) {
  validate(s);
  if (n < 2) throw PlanError("invalid_argument", "table needs at least 2 rows");
  std::vector<std::pair<std::uint64_t, double>> out;
  for (std::size_t i = 0; i < n; ++i) {
    // Integer arithmetic keeps the endpoints exact.
    const auto step = static_cast<std::uint64_t>((static_cast<unsigned __int128>(s.total_steps) * i) / (n - 1));
    out.emplace_back(step, lr_at(s, step));
  }
  return out;
}

std::string_view to_string(TrainStage s) {
  switch (s) {
    case TrainStage::pretrain: return "pretrain";
    case TrainStage::sft: return "sft";
    case TrainStage::dpo: return "dpo";
  }
  return "?";
}

TrainStage train_stage_from_string(std::string_view s) {
  if (s == "pretrain") return TrainStage::pretrain;
  if (s == "sft") return TrainStage::sft;
  if (s == "dpo") return TrainStage::dpo;
  throw PlanError("invalid_argument", "unknown training stage '" + std::string(s) + "'");
}

nlohmann::json to_json(const StagePlan& p) {
  nlohmann::json data = nlohmann::json::array();
  for (const auto& d : p.data) data.push_back({{"name", d.name}, {"manifest", d.manifest}, {"sha256", d.sha256}});
  nlohmann::json j = {
      {"stage", std::string(to_string(p.stage))},
      {"global_batch_size", p.global_batch_size},
      {"epochs", p.epochs},
      {"lr",
       {{"schedule", "cosine"},
        {"lr_max", p.lr.lr_max},
        {"lr_min", p.lr.lr_min},
        {"total_steps", p.lr.total_steps},
        {"warmup_steps", p.lr.warmup_steps}}},
      {"data", data},
      {"example_counts", p.example_counts},
  };
  if (p.total_tokens) j["total_tokens"] = *p.total_tokens;
  return j;
}

StagePlan stage_plan_from_json(const nlohmann::json& j) {
  try {
    StagePlan p;
    p.stage = train_stage_from_string(j.at("stage").get<std::string>());
    p.global_batch_size = j.at("global_batch_size").get<std::uint64_t>();
    p.epochs = j.at("epochs").get<std::uint64_t>();
    const auto& lr = j.at("lr");
    if (lr.value("schedule", "cosine") != "cosine") throw PlanError("schema", "only cosine schedules are supported");
    p.lr = {lr.at("lr_max").get<double>(), lr.at("lr_min").get<double>(), lr.at("total_steps").get<std::uint64_t>(),
            lr.at("warmup_steps").get<std::uint64_t>()};
    for (const auto& d : j.at("data")) {
      p.data.push_back({d.at("name").get<std::string>(), d.at("manifest").get<std::string>(),
                        d.at("sha256").get<std::string>()});
    }
    p.example_counts = j.at("example_counts").get<std::map<std::string, std::uint64_t>>();
    if (j.contains("total_tokens")) p.total_tokens = j.at("total_tokens").get<std::uint64_t>();
    validate(p.lr);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw PlanError("schema", std::string("stage plan: ") + e.what());
  }
}

std::string serialize(const StagePlan& p) { return to_json(p).dump(2) + "\n"; }

PlanParams default_params(TrainStage stage) {
  PlanParams p;
  p.stage = stage;
  p.epochs = 1;
  switch (stage) {
    case TrainStage::pretrain:
      p.lr_max = 2e-4;
      p.lr_min = 4.5e-7;
      p.total_tokens = 400'000'000'000ULL;
      break;
    case TrainStage::sft:
      p.global_batch_size = 1024;
      p.lr_max = 5e-6;
      p.lr_min = 9e-7;
      p.example_counts = std::map<std::string, std::uint64_t>{{"en", 200'000}};
      break;
    case TrainStage::dpo:
      p.global_batch_size = 512;
      p.lr_max = 9e-6;
      p.lr_min = 9e-7;
      p.example_counts = std::map<std::string, std::uint64_t>{{"en", 200'000}, {"hi", 60'000}};
      break;
  }
  return p;
}

StagePlan emit_plan(const PlanParams& params, const std::string& base_dir) {
  const PlanParams d = default_params(params.stage);
  StagePlan plan;
  plan.stage = params.stage;
  plan.global_batch_size = params.global_batch_size.value_or(d.global_batch_size.value_or(0));
  plan.epochs = params.epochs.value_or(*d.epochs);
  plan.example_counts = params.example_counts.value_or(d.example_counts.value_or(std::map<std::string, std::uint64_t>{}));
  plan.total_tokens = params.total_tokens ? params.total_tokens : d.total_tokens;
  if (plan.global_batch_size == 0) {
    throw PlanError("invalid_plan", std::string(to_string(params.stage)) + " plan needs a global batch size > 0");
  }
  if (plan.epochs == 0) throw PlanError("invalid_plan", "epochs must be > 0");

  std::uint64_t steps = 0;
  if (params.total_steps) {
    steps = *params.total_steps;
  } else {
    std::uint64_t examples = 0;
    for (const auto& [_, n] : plan.example_counts) examples += n;
    if (examples == 0) {
      throw PlanError("invalid_plan", std::string(to_string(params.stage)) + " plan needs total_steps or example counts");
    }
    steps = (examples * plan.epochs + plan.global_batch_size - 1) / plan.global_batch_size;
  }
  plan.lr = {params.lr_max.value_or(*d.lr_max), params.lr_min.value_or(*d.lr_min), steps, params.warmup_steps};
  validate(plan.lr);

  for (const auto& [name, manifest] : params.data) {
    fs::path path(manifest);
    if (!path.is_absolute()) path = fs::path(base_dir) / path;
    if (!fs::is_regular_file(path)) {
      throw DanglingReferenceError("data reference '" + name + "' points at missing manifest " + path.string());
    }
    plan.data.push_back({name, manifest, sha256_file_hex(path.string())});
  }
  return plan;
}

}  // namespace hicurate
