#include "mrfl/commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mrfl/checkpoint.hpp"
#include "mrfl/errors.hpp"
#include "mrfl/inference.hpp"
#include "mrfl/vocabulary.hpp"

namespace mrfl {

namespace fs = std::filesystem;

DataPaths data_paths(const std::string& data_dir, const std::string& language, const std::string& split) {
  const fs::path dir(data_dir);
  return {(dir / (language + "." + split + ".tsv")).string(), (dir / (language + "." + split + ".ans")).string()};
}

std::vector<SentenceInstance> load_split(const std::string& data_dir, const std::string& language,
                                         const std::string& split, Track track) {
  const DataPaths p = data_paths(data_dir, language, split);
  return parse_file(p.covered, track, language, p.answers);
}

ScheduleKind schedule_from_name(const std::string& name) {
  if (name == "auto") return ScheduleKind::kAuto;
  if (name == "monolingual") return ScheduleKind::kMonolingual;
  if (name == "baseline") return ScheduleKind::kBaseline;
  if (name == "multilingual") return ScheduleKind::kMultilingual;
  throw ConfigError("unknown schedule '" + name + "'");
}

std::string schedule_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kAuto: return "auto";
    case ScheduleKind::kMonolingual: return "monolingual";
    case ScheduleKind::kBaseline: return "baseline";
    case ScheduleKind::kMultilingual: return "multilingual";
  }
  return "auto";
}

ScheduleKind resolve_schedule(const TrainOptions& options) {
  ScheduleKind kind = options.schedule;
  if (kind == ScheduleKind::kAuto) {
    if (options.model.context_mode == ContextMode::kWindow2) kind = ScheduleKind::kBaseline;
    else if (options.model.languages.size() > 1) kind = ScheduleKind::kMultilingual;
    else kind = ScheduleKind::kMonolingual;
  }
  const bool many = options.model.languages.size() > 1;
  if (kind == ScheduleKind::kMultilingual && !many) throw ConfigError("multilingual schedule needs 2-3 languages");
  if (kind != ScheduleKind::kMultilingual && many) {
    throw ConfigError("schedule " + schedule_name(kind) + " trains a single language");
  }
  return kind;
}

TrainConfig effective_train_config(const TrainOptions& options) {
  TrainConfig cfg = options.train;
  const ScheduleKind kind = resolve_schedule(options);
  if (kind == ScheduleKind::kBaseline) {
    const TrainConfig base = TrainConfig::baseline_replication();
    cfg.epochs = options.epochs.value_or(base.epochs);
    cfg.subsample_rate = options.subsample_rate.value_or(*base.subsample_rate);
    cfg.early_stop_tolerance = 0;
  } else {
    if (options.epochs) cfg.epochs = *options.epochs;
    if (kind == ScheduleKind::kMultilingual && options.epochs) cfg.multilingual_epochs = *options.epochs;
    if (options.subsample_rate) throw ConfigError("subsample_rate only applies to the baseline schedule");
    cfg.subsample_rate.reset();
  }
  cfg.validate();
  return cfg;
}

namespace {

std::string log_path(const std::string& explicit_path, const std::string& out) {
  return explicit_path.empty() ? out + ".log.jsonl" : explicit_path;
}

TrainHooks logging_hooks(std::string& sink) {
  TrainHooks hooks;
  hooks.on_epoch = [&sink](const EpochRecord& r) {
    sink += to_json_line(r);
    sink += '\n';
    return true;
  };
  return hooks;
}

}  // namespace

void cmd_train(const TrainOptions& options) {
  options.model.validate();
  if (options.out.empty()) throw ConfigError("--out is required");
  if (options.data_dir.empty()) throw ConfigError("--data-dir is required");
  const ScheduleKind kind = resolve_schedule(options);
  const TrainConfig cfg = effective_train_config(options);

  std::map<std::string, LanguageData> data;
  std::vector<SentenceInstance> all;
  for (const auto& lang : options.model.languages) {
    auto instances = load_split(options.data_dir, lang, "train", options.model.track);
    all.insert(all.end(), instances.begin(), instances.end());
    auto [train, validation] = split_train_validation(std::move(instances), 0.9, cfg.seed);
    data[lang] = LanguageData{std::move(train), std::move(validation)};
  }
  Model model(options.model, build_vocabularies(all, options.model.track), cfg.seed);

  std::string log;
  TrainHooks hooks = logging_hooks(log);
  TrainResult result;
  switch (kind) {
    case ScheduleKind::kBaseline: result = train_baseline_schedule(model, data.begin()->second, cfg, hooks); break;
    case ScheduleKind::kMultilingual: result = train_multilingual(model, data, cfg, hooks); break;
    default: result = train_monolingual(model, data.begin()->second, cfg, hooks); break;
  }
  const Metadata meta{{"schedule", schedule_name(kind)},
                      {"seed", std::to_string(cfg.seed)},
                      {"best_epoch", std::to_string(result.best_epoch)}};
  save_checkpoint(options.out, model, meta);
  write_file_atomic(log_path(options.log, options.out), log);
}

void cmd_finetune(const FinetuneOptions& options) {
  options.train.validate();
  if (options.out.empty()) throw ConfigError("--out is required");
  if (fs::exists(options.out) && fs::exists(options.checkpoint) &&
      fs::equivalent(options.out, options.checkpoint)) {
    throw ConfigError("--out must differ from the input checkpoint");
  }
  Checkpoint ckpt = load_checkpoint(options.checkpoint);
  const ModelConfig& mc = ckpt.model.config();
  if (mc.languages.size() < 2) {
    throw ConfigError(options.checkpoint + ": finetuning needs a multilingual checkpoint");
  }
  if (!ckpt.model.covers(options.language)) {
    throw ConfigError(options.checkpoint + ": language '" + options.language + "' is not in the checkpoint");
  }
  auto instances = load_split(options.data_dir, options.language, "train", mc.track);
  auto [train, validation] = split_train_validation(std::move(instances), 0.9, options.train.seed);
  std::string log;
  FinetuneResult ft = finetune(ckpt.model, options.language, LanguageData{std::move(train), std::move(validation)},
                               options.train, logging_hooks(log));
  Metadata meta = ckpt.metadata;
  meta["schedule"] = "finetune";
  meta["finetuned_from"] = fs::path(options.checkpoint).filename().string();
  meta["best_epoch"] = std::to_string(ft.result.best_epoch);
  save_checkpoint(options.out, ft.model, meta);
  write_file_atomic(log_path(options.log, options.out), log);
}

void cmd_predict(const PredictOptions& options) {
  const std::size_t n = options.checkpoints.size();
  if (n != 1 && n != kEnsembleSize) {
    throw ConfigError("predict takes 1 checkpoint or exactly " + std::to_string(kEnsembleSize) + " (got " +
                      std::to_string(n) + ")");
  }
  if (options.out.empty()) throw ConfigError("--out is required");
  std::vector<Checkpoint> ckpts;
  for (const auto& path : options.checkpoints) ckpts.push_back(load_checkpoint(path));
  const ModelConfig& first = ckpts.front().model.config();
  const Track track = options.track.value_or(first.track);
  std::string language;
  if (options.language) {
    language = *options.language;
  } else if (first.languages.size() == 1) {
    language = first.languages.front();
  } else {
    throw ConfigError("--language is required for multilingual checkpoints");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Model& m = ckpts[i].model;
    if (m.config().track != track) {
      throw ConfigError(options.checkpoints[i] + ": checkpoint is Track " +
                        std::to_string(static_cast<int>(m.config().track)) + ", input is Track " +
                        std::to_string(static_cast<int>(track)));
    }
    if (!m.covers(language)) throw ConfigError(options.checkpoints[i] + ": does not cover language '" + language + "'");
  }
  const auto instances = parse_file(options.input, track, language);
  EnsembleSpec spec;
  for (std::size_t i = 0; i < n; ++i) spec.members.push_back({&ckpts[i].model, i, 0.0});
  std::string out;
  for (const auto& inst : instances) {
    out += n == 1 ? predict_form(ckpts.front().model, inst) : ensemble_predict(spec, inst);
    out += '\n';
  }
  write_file_atomic(options.out, out);
}

std::string cmd_evaluate(const std::string& predictions_path, const std::string& answers_path) {
  std::ifstream pred(predictions_path, std::ios::binary);
  if (!pred) throw FormatError(predictions_path, 0, "cannot open file");
  std::vector<std::string> predictions;
  std::string line;
  while (std::getline(pred, line)) predictions.push_back(line.substr(0, line.find('\t')));
  std::ifstream ans(answers_path, std::ios::binary);
  if (!ans) throw FormatError(answers_path, 0, "cannot open file");
  std::vector<std::string> golds;
  for (auto& a : parse_answers(ans, answers_path)) golds.push_back(std::move(a.form));
  if (predictions.size() != golds.size()) {
    throw FormatError(predictions_path, predictions.size(),
                      std::to_string(predictions.size()) + " predictions for " + std::to_string(golds.size()) +
                          " answers in " + answers_path);
  }
  return format_percentage(accuracy(predictions, golds));
}

AblationReport cmd_ablate(const AblateOptions& options) {
  if (options.out_dir.empty()) throw ConfigError("--out is required");
  if (options.languages.empty()) throw ConfigError("ablate needs at least one language");
  AblationConfig cfg;
  for (const auto& lang : options.languages) {
    cfg.data[lang] = AblationData{load_split(options.data_dir, lang, "train", options.model.track),
                                  load_split(options.data_dir, lang, "dev", options.model.track)};
  }
  cfg.architectures = options.architectures;
  cfg.n_models_per_cell = options.n_models;
  cfg.n_groups = options.n_groups;
  cfg.base_seed = options.seed;
  cfg.model = options.model;
  cfg.train = options.train;
  cfg.baseline_train = options.baseline_train;
  cfg.workers = options.workers;
  AblationReport report = run_ablation(cfg);

  fs::create_directories(options.out_dir);
  const fs::path dir(options.out_dir);
  auto emit = [&](const std::string& name, auto writer) {
    std::ostringstream ss;
    writer(ss);
    write_file_atomic((dir / name).string(), ss.str());
  };
  emit("runs.csv", [&](std::ostream& o) { write_runs_csv(o, report); });
  emit("summary.csv", [&](std::ostream& o) { write_summary_csv(o, report); });
  emit("deltas.csv", [&](std::ostream& o) { write_deltas_csv(o, report); });
  if (!report.multilingual_runs.empty()) {
    const auto table = best_partner_table(report.multilingual_runs);
    emit("partners.csv", [&](std::ostream& o) { write_partner_csv(o, table); });
  }
  return report;
}

void cmd_synth(const SynthOptions& options) {
  if (options.out_dir.empty()) throw ConfigError("--out is required");
  SyntheticSpec spec = options.spec;
  spec.n_sentences = options.n_train + options.n_dev;
  auto corpus = generate_synthetic_corpus(spec);
  const std::span<const SentenceInstance> all(corpus);
  fs::create_directories(options.out_dir);
  auto emit = [&](const std::string& split, std::span<const SentenceInstance> part) {
    const DataPaths p = data_paths(options.out_dir, spec.language_id, split);
    std::ostringstream covered, answers;
    write_sentences(covered, part, options.track);
    write_answers(answers, part);
    write_file_atomic(p.covered, covered.str());
    write_file_atomic(p.answers, answers.str());
  };
  emit("train", all.first(options.n_train));
  emit("dev", all.subspan(options.n_train));
}

}  // namespace mrfl
