#include "hicurate/blend.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "hicurate/hashing.hpp"
#include "hicurate/text.hpp"

namespace hicurate {
namespace fs = std::filesystem;

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw BlendError("schema", std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw BlendError("schema", std::string("unknown key '") + key + "' in " + what);
  }
}

std::string percent(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x * 100.0 << "%";
  return os.str();
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base_dir) / path).string();
}

}  // namespace

nlohmann::json to_json(const BlendComponent& c) {
  nlohmann::json j = {{"name", c.name},     {"lang", c.lang},
                      {"provenance", std::string(to_string(c.provenance))},
                      {"shards", c.shards}, {"token_counts", c.token_counts},
                      {"weight", c.weight}};
  if (c.documents) j["documents"] = *c.documents;
  return j;
}

nlohmann::json to_json(const BlendSpec& s) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : s.components) comps.push_back(to_json(c));
  nlohmann::json j = {{"components", comps}, {"tokenizer", s.tokenizer}, {"seed", s.seed}};
  if (s.target_total_tokens) j["target_total_tokens"] = *s.target_total_tokens;
  if (s.nominal_total_tokens) j["nominal_total_tokens"] = *s.nominal_total_tokens;
  if (!s.language_split.empty()) j["language_split"] = s.language_split;
  return j;
}

BlendSpec blend_spec_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"components", "tokenizer", "target_total_tokens", "nominal_total_tokens", "language_split", "seed"},
                 "blend spec");
  BlendSpec s;
  try {
    for (const auto& cj : j.value("components", nlohmann::json::array())) {
      reject_unknown(cj, {"name", "lang", "provenance", "shards", "token_counts", "documents", "weight"},
                     "blend component");
      BlendComponent c;
      c.name = cj.at("name").get<std::string>();
      c.lang = cj.at("lang").get<std::string>();
      c.provenance = provenance_from_string(cj.value("provenance", "real-web"));
      c.shards = cj.value("shards", std::vector<std::string>{});
      c.token_counts = cj.value("token_counts", std::map<std::string, std::uint64_t>{});
      if (cj.contains("documents")) c.documents = cj.at("documents").get<std::uint64_t>();
      c.weight = cj.value("weight", 1.0);
      s.components.push_back(std::move(c));
    }
    s.tokenizer = j.value("tokenizer", "ws");
    if (j.contains("target_total_tokens")) s.target_total_tokens = j.at("target_total_tokens").get<std::uint64_t>();
    if (j.contains("nominal_total_tokens")) s.nominal_total_tokens = j.at("nominal_total_tokens").get<std::uint64_t>();
    s.language_split = j.value("language_split", std::map<std::string, double>{});
    s.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw BlendError("schema", std::string("blend spec: ") + e.what());
  } catch (const SchemaError& e) {
    throw BlendError("schema", std::string("blend spec: ") + e.what());
  }
  validate(s);
  return s;
}

BlendSpec read_blend_spec(const std::string& path) {
  try {
    return blend_spec_from_json(nlohmann::json::parse(text::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw BlendError("schema", path + ": " + e.what());
  }
}

void validate(const BlendSpec& spec) {
  std::set<std::string> names;
  for (const auto& c : spec.components) {
    if (c.name.empty()) throw BlendError("invalid_blend", "component name must be nonempty");
    if (!names.insert(c.name).second) throw BlendError("invalid_blend", "duplicate component name '" + c.name + "'");
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw BlendError("invalid_blend", "component '" + c.name + "' needs a positive weight");
    }
  }
  if (!spec.language_split.empty()) {
    double sum = 0.0;
    for (const auto& [lang, share] : spec.language_split) {
      if (!(share > 0.0)) throw BlendError("invalid_blend", "language_split share for '" + lang + "' must be > 0");
      sum += share;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw BlendError("invalid_blend", "language_split shares must sum to 1");
    for (const auto& c : spec.components) {
      if (!spec.language_split.count(c.lang)) {
        throw BlendError("invalid_blend", "component '" + c.name + "' has language '" + c.lang +
                                              "' missing from language_split");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Token accounting

nlohmann::json to_json(const TokenAccounting& a) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : a.components) {
    comps.push_back({{"name", c.name},
                     {"lang", c.lang},
                     {"provenance", std::string(to_string(c.provenance))},
                     {"tokens", c.tokens},
                     {"documents", c.documents},
                     {"from_shards", c.from_shards}});
  }
  return {{"tokenizer", a.tokenizer},
          {"components", comps},
          {"by_language", a.by_language},
          {"by_provenance", a.by_provenance},
          {"by_language_provenance", a.by_language_provenance},
          {"total", a.total},
          {"warnings", a.warnings}};
}

TokenAccounting account_tokens(const BlendSpec& spec, const std::string& base_dir, const Tokenizer* counter) {
  validate(spec);
  TokenAccounting out;
  out.tokenizer = spec.tokenizer;
  for (const auto& c : spec.components) {
    ComponentTokens ct{c.name, c.lang, c.provenance, 0, c.documents.value_or(0), false};
    if (auto it = c.token_counts.find(spec.tokenizer); it != c.token_counts.end()) {
      ct.tokens = it->second;
    } else if (!c.shards.empty()) {
      ct.from_shards = true;
      std::uint64_t docs = 0;
      for (const auto& shard : c.shards) {
        const std::string path = resolve(base_dir, shard);
        std::optional<ShardManifest> m;
        if (fs::exists(manifest_path_for(path))) m = read_manifest(manifest_path_for(path));
        if (m && m->token_counts.count(spec.tokenizer)) {
          ct.tokens += m->token_counts.at(spec.tokenizer);
          docs += m->documents;
        } else if (counter && counter->id() == spec.tokenizer) {
          for (const auto& d : read_shard(path).documents) {
            ct.tokens += count_tokens(d, *counter);
            ++docs;
          }
        } else {
          throw BlendError("missing_token_count", "component '" + c.name + "': no '" + spec.tokenizer +
                                                      "' token count for shard " + path);
        }
      }
      if (!c.documents) ct.documents = docs;
    } else {
      throw BlendError("missing_token_count",
                       "component '" + c.name + "' declares no '" + spec.tokenizer + "' token count and no shards");
    }
    const std::string prov(to_string(c.provenance));
    out.by_language[c.lang] += ct.tokens;
    out.by_provenance[prov] += ct.tokens;
    out.by_language_provenance[c.lang][prov] += ct.tokens;
    out.total += ct.tokens;
    out.components.push_back(std::move(ct));
  }

  auto off_by = [](std::uint64_t got, std::uint64_t want) {
    if (want == 0) return got == 0 ? 0.0 : INFINITY;
    return std::abs(static_cast<double>(got) - static_cast<double>(want)) / static_cast<double>(want);
  };

  if (spec.target_total_tokens) {
    const double rel = off_by(out.total, *spec.target_total_tokens);
    if (rel > kBudgetTolerance) {
      std::ostringstream msg;
      msg << "computed total " << out.total << " misses target " << *spec.target_total_tokens << " by "
          << percent(rel) << "; components:";
      for (const auto& c : out.components) msg << " " << c.name << "=" << c.tokens;
      throw BlendError("budget_mismatch", msg.str());
    }
  }
  if (spec.nominal_total_tokens) {
    const double rel = off_by(out.total, *spec.nominal_total_tokens);
    if (rel > kBudgetTolerance) {
      out.warnings.push_back("total " + std::to_string(out.total) + " tokens differs from nominal " +
                             std::to_string(*spec.nominal_total_tokens) + " by " + percent(rel));
    }
  }
  if (!spec.language_split.empty() && out.total > 0) {
    for (const auto& [lang, share] : spec.language_split) {
      const auto it = out.by_language.find(lang);
      const double got = it == out.by_language.end() ? 0.0
                                                      : static_cast<double>(it->second) / static_cast<double>(out.total);
      if (std::abs(got - share) > kBudgetTolerance) {
        out.warnings.push_back("language '" + lang + "' holds " + percent(got) + " of tokens, declared split is " +
                               percent(share));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fertility

nlohmann::json to_json(const FertilityReport& r) {
  return {{"tokenizer", r.tokenizer}, {"words", r.words}, {"tokens", r.tokens}, {"tokens_per_word", r.tokens_per_word}};
}

FertilityReport fertility(const std::vector<Document>& docs, const Tokenizer& tokenizer) {
  FertilityReport r;
  r.tokenizer = tokenizer.id();
  for (const auto& d : docs) {
    for (auto unit : d.text_units()) {
      r.words += text::split_whitespace(unit).size();
      r.tokens += tokenizer.count(unit);
    }
  }
  if (r.words == 0) throw BlendError("zero_words", "fertility needs at least one word");
  r.tokens_per_word = static_cast<double>(r.tokens) / static_cast<double>(r.words);
  return r;
}

// ---------------------------------------------------------------------------
// Schedule

std::string schedule_line(const BlendSpec& spec, const ScheduleEntry& e) {
  // Hand-built to keep million-line schedules cheap; keys are in sorted order.
  std::string line = "{\"component\":";
  line += nlohmann::json(spec.components.at(e.component).name).dump();
  line += ",\"doc_index\":" + std::to_string(e.doc_index);
  line += ",\"epoch\":" + std::to_string(e.epoch);
  line += ",\"slot\":" + std::to_string(e.slot);
  line += ",\"step\":" + std::to_string(e.step);
  line += "}";
  return line;
}

nlohmann::json to_json(const BlendSpec& spec, const ScheduleReport& r) {
  nlohmann::json comps = nlohmann::json::array();
  for (std::size_t i = 0; i < spec.components.size(); ++i) {
    comps.push_back({{"name", spec.components[i].name},
                     {"probability", r.probabilities.at(i)},
                     {"draws", r.component_draws.at(i)},
                     {"epochs", r.epochs_started.at(i)}});
  }
  return {{"batch_size", r.batch_size},
          {"steps", r.steps},
          {"draws", r.draws},
          {"components", comps},
          {"estimated_tokens", r.estimated_tokens},
          {"available_tokens", r.available_tokens},
          {"multi_epoch", r.multi_epoch}};
}

std::vector<double> component_probabilities(const BlendSpec& spec) {
  validate(spec);
  std::vector<double> p(spec.components.size());
  if (spec.language_split.empty()) {
    double sum = 0.0;
    for (const auto& c : spec.components) sum += c.weight;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = spec.components[i].weight / sum;
    return p;
  }
  std::map<std::string, double> lang_weight;
  for (const auto& c : spec.components) lang_weight[c.lang] += c.weight;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& c = spec.components[i];
    p[i] = spec.language_split.at(c.lang) * c.weight / lang_weight.at(c.lang);
    sum += p[i];
  }
  // Languages declared without components leave mass unassigned.
  for (auto& x : p) x /= sum;
  return p;
}

ScheduleSampler::ScheduleSampler(const BlendSpec& spec, std::vector<std::uint64_t> doc_counts,
                                 std::uint64_t batch_size)
    : spec_(spec), doc_counts_(std::move(doc_counts)), rng_(derive_seed(spec.seed, "blend-schedule")) {
  if (spec.components.empty()) throw BlendError("invalid_blend", "schedule needs at least one component");
  if (doc_counts_.size() != spec.components.size()) {
    throw BlendError("invalid_blend", "one document count per component is required");
  }
  if (batch_size == 0) throw BlendError("invalid_argument", "batch_size must be > 0");
  for (std::size_t i = 0; i < doc_counts_.size(); ++i) {
    if (doc_counts_[i] == 0) throw BlendError("empty_component", "component '" + spec.components[i].name + "' has no documents");
  }
  report_.batch_size = batch_size;
  report_.probabilities = component_probabilities(spec);
  cumulative_.resize(report_.probabilities.size());
  std::partial_sum(report_.probabilities.begin(), report_.probabilities.end(), cumulative_.begin());
  const std::size_t n = spec.components.size();
  report_.component_draws.assign(n, 0);
  report_.epochs_started.assign(n, 0);
  perm_.resize(n);
  cursor_.assign(n, 0);
  for (const auto& c : spec.components) {
    if (auto it = c.token_counts.find(spec.tokenizer); it != c.token_counts.end()) report_.available_tokens += it->second;
  }
}

void ScheduleSampler::start_epoch(std::size_t c) {
  auto& perm = perm_[c];
  perm.resize(doc_counts_[c]);
  std::iota(perm.begin(), perm.end(), std::uint64_t{0});
  Rng shuffler(derive_seed(spec_.seed, "blend-epoch:" + spec_.components[c].name + ":" +
                                           std::to_string(report_.epochs_started[c])));
  shuffler.shuffle(perm);
  cursor_[c] = 0;
  ++report_.epochs_started[c];
  report_.multi_epoch = report_.multi_epoch || report_.epochs_started[c] > 1;
}

ScheduleEntry ScheduleSampler::next() {
  const double u = rng_.uniform();
  std::size_t c = 0;
  while (c + 1 < cumulative_.size() && u >= cumulative_[c]) ++c;
  if (report_.epochs_started[c] == 0 || cursor_[c] == perm_[c].size()) start_epoch(c);

  ScheduleEntry e;
  e.step = draw_ / report_.batch_size;
  e.slot = draw_ % report_.batch_size;
  e.component = c;
  e.doc_index = perm_[c][cursor_[c]++];
  e.epoch = report_.epochs_started[c] - 1;

  ++draw_;
  ++report_.draws;
  report_.steps = e.step + 1;
  ++report_.component_draws[c];
  const auto& comp = spec_.components[c];
  if (auto it = comp.token_counts.find(spec_.tokenizer); it != comp.token_counts.end()) {
    // Running estimate from the component's mean document length.
    estimated_ += static_cast<double>(it->second) / static_cast<double>(doc_counts_[c]);
    report_.estimated_tokens = static_cast<std::uint64_t>(std::llround(estimated_));
  }
  return e;
}

std::vector<std::uint64_t> component_doc_counts(const BlendSpec& spec) {
  std::vector<std::uint64_t> out;
  for (const auto& c : spec.components) {
    if (!c.documents) throw BlendError("missing_document_count", "component '" + c.name + "' has no document count");
    out.push_back(*c.documents);
  }
  return out;
}

Schedule sample_schedule(const BlendSpec& spec, std::uint64_t batch_size, std::uint64_t steps) {
  ScheduleSampler sampler(spec, component_doc_counts(spec), batch_size);
  Schedule s;
  s.entries.reserve(batch_size * steps);
  for (std::uint64_t i = 0; i < batch_size * steps; ++i) s.entries.push_back(sampler.next());
  s.report = sampler.report();
  s.report.steps = steps;
  return s;
}

ScheduleReport write_schedule(const BlendSpec& spec, std::uint64_t batch_size, std::uint64_t steps, std::ostream& out) {
  ScheduleSampler sampler(spec, component_doc_counts(spec), batch_size);
  for (std::uint64_t i = 0; i < batch_size * steps; ++i) out << schedule_line(spec, sampler.next()) << '\n';
  if (!out) throw IoError("failed writing schedule");
  auto report = sampler.report();
  report.steps = steps;
  return report;
}

}  // namespace hicurate
