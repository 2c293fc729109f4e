#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hicurate/blend.hpp"
#include "hicurate/eval.hpp"
#include "hicurate/mt.hpp"
#include "hicurate/pipeline.hpp"
#include "hicurate/quality_filter.hpp"
#include "hicurate/text.hpp"
#include "hicurate/trainplan.hpp"

namespace hicurate {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct StageFlags {
  std::string config;
  bool resume = false;
  std::size_t workers = 0;
  std::string work_dir;
  // Overrides. Unset values leave the config alone.
  std::string endpoint;
  std::size_t batch_size = 0;
  std::size_t concurrency = 0;
  double rate = 0.0;
  std::size_t bands = 0, rows = 0, num_hashes = 0, shingle = 0;
  double threshold = -1.0;
  bool exact_verify = false;
};

PipelineConfig load_with_overrides(const StageFlags& f) {
  PipelineConfig cfg = load_config(f.config);
  if (f.workers) cfg.workers = f.workers;
  // Absolute so that it does not resolve against the config directory.
  if (!f.work_dir.empty()) cfg.work_dir = fs::absolute(f.work_dir).lexically_normal().string();
  if (!f.endpoint.empty()) cfg.translate.backend = f.endpoint;
  if (f.batch_size) cfg.translate.max_sentences = f.batch_size;
  if (f.concurrency) cfg.translate.concurrency = f.concurrency;
  if (f.rate > 0.0) cfg.filter.target_discard_rate = f.rate;
  if (f.bands) cfg.dedup.bands = f.bands;
  if (f.rows) cfg.dedup.rows = f.rows;
  if (f.num_hashes) cfg.dedup.num_hashes = f.num_hashes;
  if (f.shingle) cfg.dedup.shingle_width = f.shingle;
  if (f.threshold >= 0.0) cfg.dedup.verify_threshold = f.threshold;
  if (f.exact_verify) cfg.dedup.exact_verify = true;
  // Re-validate the overridden values.
  auto j = to_json(cfg);
  return config_from_json(j, cfg.config_dir);
}

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

Tokenizer tokenizer_from_flags(const std::string& mode, const std::string& id, const std::string& vocab) {
  json spec = {{"mode", mode}, {"id", id.empty() ? (mode == "whitespace" ? "ws" : mode) : id}};
  if (!vocab.empty()) spec["vocab_file"] = vocab;
  return Tokenizer::from_json(spec);
}

template <typename T>
void write_jsonl(const std::string& path, const std::vector<T>& items) {
  std::string out;
  for (const auto& x : items) out += to_json(x).dump() + "\n";
  text::write_file(path, out);
}

std::vector<SentencePair> read_pairs(const std::string& path) {
  std::vector<SentencePair> out;
  std::istringstream in(text::read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(sentence_pair_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw SchemaError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

int report_error(const std::string& command, const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", {{"command", command}, {"kind", kind}, {"message", message}}}}.dump() << std::endl;
  return code;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Bilingual corpus curation pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hicurate 0.1.0");

  StageFlags sf;
  std::string active;

  auto stage_cmd = [&](const std::string& name, const std::string& help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("-c,--config", sf.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_flag("--resume", sf.resume, "Skip the stage when its recorded outputs verify");
    cmd->add_option("--workers", sf.workers, "Worker threads");
    cmd->add_option("--work-dir", sf.work_dir, "Override the config's work_dir");
    cmd->callback([&, name] {
      active = name;
      Pipeline p(load_with_overrides(sf), sf.resume);
      if (name == "run-all") {
        json out = json::array();
        for (const auto& o : p.run_all()) out.push_back({{"stage", o.stage}, {"skipped", o.skipped}});
        print(out);
      } else {
        const auto o = p.run_stage(name);
        print({{"stage", o.stage}, {"skipped", o.skipped}, {"report", o.report}});
      }
    });
    return cmd;
  };

  stage_cmd("parse", "Parse raw JSONL records into segmented documents");
  auto* translate = stage_cmd("translate", "Translate marked documents through the MT backend");
  translate->add_option("--endpoint", sf.endpoint, "Backend: mock:echo, mock:reverse, dict:<tsv> or an http(s) URL");
  translate->add_option("--batch-size", sf.batch_size, "Max sentences per request");
  translate->add_option("--concurrency", sf.concurrency, "Documents in flight");
  stage_cmd("lm-train", "Train the filter n-gram LM on real target-language text");
  auto* filter = stage_cmd("filter", "Score translated documents and discard the noisiest");
  filter->add_option("--rate", sf.rate, "Target discard rate in (0, 1)");
  stage_cmd("translit", "Add romanized copies of Devanagari documents");
  auto* dedup = stage_cmd("dedup", "Remove near-duplicate documents");
  dedup->add_option("--bands", sf.bands);
  dedup->add_option("--rows", sf.rows);
  dedup->add_option("--num-hashes", sf.num_hashes);
  dedup->add_option("--shingle", sf.shingle, "Shingle width in characters");
  dedup->add_option("--threshold", sf.threshold, "Verification threshold");
  dedup->add_flag("--exact-verify", sf.exact_verify, "Verify candidates with exact Jaccard");
  stage_cmd("run-all", "Run parse, translate, lm-train, filter, translit, dedup and blend");

  // blend: pipeline stage with --config, or standalone on a spec file.
  std::string blend_spec, schedule_out;
  std::uint64_t blend_batch = 8, blend_steps = 0;
  {
    auto* cmd = app.add_subcommand("blend", "Compose the blend, account tokens, emit a sampling schedule");
    auto* cfg_opt = cmd->add_option("-c,--config", sf.config, "Pipeline config (JSON)")->check(CLI::ExistingFile);
    auto* spec_opt = cmd->add_option("--spec", blend_spec, "Standalone blend spec (JSON)")->check(CLI::ExistingFile);
    cfg_opt->excludes(spec_opt);
    cmd->add_flag("--resume", sf.resume);
    cmd->add_option("--workers", sf.workers);
    cmd->add_option("--work-dir", sf.work_dir);
    cmd->add_option("--schedule-out", schedule_out, "Write the schedule JSONL here (standalone)");
    cmd->add_option("--batch-size", blend_batch);
    cmd->add_option("--steps", blend_steps);
    cmd->callback([&, cmd] {
      active = "blend";
      if (!sf.config.empty()) {
        Pipeline p(load_with_overrides(sf), sf.resume);
        const auto o = p.run_stage("blend");
        print({{"stage", o.stage}, {"skipped", o.skipped}, {"report", o.report}});
        return;
      }
      if (blend_spec.empty()) throw CLI::RequiredError("--config or --spec");
      const auto spec = read_blend_spec(blend_spec);
      const auto base = fs::path(blend_spec).parent_path().string();
      json out = {{"accounting", to_json(account_tokens(spec, base.empty() ? "." : base))}};
      if (!schedule_out.empty() && blend_steps > 0) {
        std::ofstream f(schedule_out, std::ios::binary | std::ios::trunc);
        out["schedule"] = to_json(spec, write_schedule(spec, blend_batch, blend_steps, f));
      }
      print(out);
      (void)cmd;
    });
  }

  // lm-score
  std::string model_path, in_path, out_path, tok_mode = "whitespace", tok_id, vocab_path;
  {
    auto* cmd = app.add_subcommand("lm-score", "Attach log-perplexity scores to a shard");
    cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
    cmd->add_option("--in", in_path)->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_path)->required();
    cmd->add_option("--tokenizer-mode", tok_mode)->check(CLI::IsMember({"whitespace", "char", "vocab-greedy"}));
    cmd->add_option("--tokenizer-id", tok_id);
    cmd->add_option("--vocab", vocab_path);
    cmd->add_option("--workers", sf.workers);
    cmd->callback([&] {
      active = "lm-score";
      const auto model = NGramModel::load(model_path);
      const auto tok = tokenizer_from_flags(tok_mode, tok_id.empty() ? model.tokenizer_id() : tok_id, vocab_path);
      auto contents = read_shard(in_path);
      auto scored = score_corpus(std::move(contents.documents), model, tok, std::max<std::size_t>(1, sf.workers));
      WriteOptions opts;
      opts.stage = "lm-score";
      opts.tokenizers = {tok};
      const auto m = write_shard(scored, out_path, opts);
      print({{"documents", m.documents}, {"malformed_lines", contents.errors.size()}});
    });
  }

  // backfilter
  std::string pairs_in, kept_out, rejected_out, bf_backend = "mock:echo", bf_src = "en", bf_tgt = "hi";
  double bf_threshold = 0.5;
  std::size_t bf_concurrency = 8, bf_batch = 32;
  {
    auto* cmd = app.add_subcommand("backfilter", "Round-trip filter sentence pairs by chrF");
    cmd->add_option("--in", pairs_in, "SentencePair JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--kept", kept_out)->required();
    cmd->add_option("--rejected", rejected_out)->required();
    cmd->add_option("--endpoint", bf_backend, "Backend descriptor");
    cmd->add_option("--src", bf_src);
    cmd->add_option("--tgt", bf_tgt);
    cmd->add_option("--threshold", bf_threshold)->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--concurrency", bf_concurrency);
    cmd->add_option("--batch-size", bf_batch);
    cmd->callback([&] {
      active = "backfilter";
      auto backend = make_backend(bf_backend);
      TranslateOptions opts;
      opts.concurrency = bf_concurrency;
      opts.limits.max_sentences = bf_batch;
      const auto pairs = read_pairs(pairs_in);
      try {
        const auto r = roundtrip_filter(pairs, *backend, {bf_src, bf_tgt}, bf_threshold, opts);
        write_jsonl(kept_out, r.kept);
        write_jsonl(rejected_out, r.rejected);
        auto all = r.kept;
        all.insert(all.end(), r.rejected.begin(), r.rejected.end());
        print({{"input", pairs.size()},
               {"kept", r.kept.size()},
               {"rejected", r.rejected.size()},
               {"example_similarity", example_similarity(all)}});
      } catch (const RoundTripAborted& e) {
        write_jsonl(kept_out, e.partial.kept);
        write_jsonl(rejected_out, e.partial.rejected);
        text::write_file(kept_out + ".checkpoint.json", json{{"completed", e.completed}}.dump(2) + "\n");
        throw;
      }
    });
  }

  // stats
  std::vector<std::string> stats_in;
  {
    auto* cmd = app.add_subcommand("stats", "Document, token and fertility statistics of shards");
    cmd->add_option("--in", stats_in)->required()->check(CLI::ExistingFile);
    cmd->add_option("--tokenizer-mode", tok_mode)->check(CLI::IsMember({"whitespace", "char", "vocab-greedy"}));
    cmd->add_option("--tokenizer-id", tok_id);
    cmd->add_option("--vocab", vocab_path);
    cmd->callback([&] {
      active = "stats";
      const auto tok = tokenizer_from_flags(tok_mode, tok_id, vocab_path);
      std::vector<Document> docs;
      std::size_t malformed = 0;
      for (const auto& p : stats_in) {
        auto c = read_shard(p);
        malformed += c.errors.size();
        for (auto& d : c.documents) docs.push_back(std::move(d));
      }
      std::map<std::string, std::uint64_t> prov, langs;
      std::map<std::string, std::vector<Document>> by_lang;
      std::uint64_t tokens = 0;
      for (const auto& d : docs) {
        prov[std::string(to_string(d.provenance))]++;
        langs[d.lang]++;
        tokens += count_tokens(d, tok);
        by_lang[d.lang].push_back(d);
      }
      json fert = json::object();
      for (const auto& [lang, group] : by_lang) {
        try {
          fert[lang] = to_json(fertility(group, tok));
        } catch (const BlendError&) {
          fert[lang] = nullptr;
        }
      }
      print({{"documents", docs.size()},
             {"malformed_lines", malformed},
             {"provenance", prov},
             {"languages", langs},
             {"tokens", {{tok.id(), tokens}}},
             {"fertility", fert}});
    });
  }

  // trainplan
  std::string tp_stage = "sft", tp_out;
  std::optional<std::uint64_t> tp_steps, tp_batch, tp_epochs;
  std::optional<double> tp_lr_max, tp_lr_min;
  std::uint64_t tp_warmup = 0;
  std::size_t tp_table = 0;
  std::vector<std::string> tp_data;
  {
    auto* cmd = app.add_subcommand("trainplan", "Emit a training plan with its learning-rate schedule");
    cmd->add_option("--stage", tp_stage)->check(CLI::IsMember({"pretrain", "sft", "dpo"}));
    cmd->add_option("--steps", tp_steps);
    cmd->add_option("--batch", tp_batch);
    cmd->add_option("--epochs", tp_epochs);
    cmd->add_option("--lr-max", tp_lr_max);
    cmd->add_option("--lr-min", tp_lr_min);
    cmd->add_option("--warmup", tp_warmup);
    cmd->add_option("--data", tp_data, "name=manifest path (repeatable)");
    cmd->add_option("--out", tp_out, "Write the plan here; stdout otherwise");
    cmd->add_option("--table", tp_table, "Print the LR at N evenly spaced steps");
    cmd->callback([&] {
      active = "trainplan";
      PlanParams params;
      params.stage = train_stage_from_string(tp_stage);
      params.total_steps = tp_steps;
      params.global_batch_size = tp_batch;
      params.epochs = tp_epochs;
      params.lr_max = tp_lr_max;
      params.lr_min = tp_lr_min;
      params.warmup_steps = tp_warmup;
      for (const auto& d : tp_data) {
        const auto eq = d.find('=');
        if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--data", "expected name=path");
        params.data[d.substr(0, eq)] = d.substr(eq + 1);
      }
      const auto plan = emit_plan(params);
      if (!tp_out.empty()) {
        text::write_file(tp_out, serialize(plan));
      } else {
        std::cout << serialize(plan);
      }
      if (tp_table > 0) {
        for (const auto& [step, lr] : lr_table(plan.lr, std::max<std::size_t>(2, tp_table))) {
          std::ostringstream row;
          row.precision(6);
          row << step << "\t" << std::scientific << lr;
          std::cout << row.str() << "\n";
        }
      }
    });
  }

  // eval-judge
  std::string items_path, records_out, agg_out, judge_desc = "env", mode = "open", template_path;
  std::size_t judge_concurrency = 4;
  bool text_table = false;
  {
    auto* cmd = app.add_subcommand("eval-judge", "Score responses with a judge LLM and aggregate");
    cmd->add_option("--items", items_path, "EvalItem JSONL")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", records_out, "EvalRecord JSONL")->required();
    cmd->add_option("--report", agg_out, "Aggregate report JSON");
    cmd->add_option("--judge", judge_desc, "env, mock:hash, mock:score:<n>, mock:reply:<text> or an http(s) URL");
    cmd->add_option("--mode", mode)->check(CLI::IsMember({"fact", "open"}));
    cmd->add_option("--template", template_path, "Rubric template; built-in per mode otherwise");
    cmd->add_option("--concurrency", judge_concurrency);
    cmd->add_flag("--table", text_table, "Print a plain-text table");
    cmd->callback([&] {
      active = "eval-judge";
      auto judge = make_judge(judge_desc);
      JudgeOptions opts;
      opts.mode = judge_mode_from_string(mode);
      opts.concurrency = judge_concurrency;
      const auto tmpl = template_path.empty() ? PromptTemplate::builtin(opts.mode) : PromptTemplate::from_file(template_path);
      const auto records = judge_all(read_eval_items(items_path), *judge, tmpl, opts);
      write_jsonl(records_out, records);
      const auto agg = aggregate_scores(records);
      if (!agg_out.empty()) text::write_file(agg_out, to_json(agg).dump(2) + "\n");
      if (text_table) {
        std::cout << format_table(agg);
      } else {
        print(to_json(agg));
      }
    });
  }

  // eval-ab
  std::string verdicts_path, ab_out, subject;
  std::size_t assign_n = 0;
  std::uint64_t assign_seed = 0;
  {
    auto* cmd = app.add_subcommand("eval-ab", "Aggregate pairwise preference verdicts");
    auto* v = cmd->add_option("--verdicts", verdicts_path, "AbVerdict JSONL")->check(CLI::ExistingFile);
    cmd->add_option("--subject", subject, "Model whose wins are counted; model_a of the first verdict otherwise");
    cmd->add_option("--out", ab_out);
    auto* a = cmd->add_option("--assign", assign_n, "Print a seeded presentation order for N items instead");
    cmd->add_option("--seed", assign_seed);
    v->excludes(a);
    cmd->callback([&] {
      active = "eval-ab";
      if (assign_n > 0) {
        json order = json::array();
        for (bool a_first : assign_presentation(assign_n, assign_seed)) order.push_back(a_first ? "a" : "b");
        print({{"shown_first", order}});
        return;
      }
      if (verdicts_path.empty()) throw CLI::RequiredError("--verdicts");
      const auto report = ab_aggregate(read_ab_verdicts(verdicts_path),
                                       subject.empty() ? std::nullopt : std::optional<std::string>(subject));
      if (!ab_out.empty()) text::write_file(ab_out, to_json(report).dump(2) + "\n");
      print(to_json(report));
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(active, "usage", e.what(), 2);
  } catch (const ConfigError& e) {
    return report_error(active, e.kind(), e.what(), 2);
  } catch (const Error& e) {
    return report_error(active, e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return report_error(active, "internal", e.what(), 1);
  }
  return 0;
}

}  // namespace hicurate
