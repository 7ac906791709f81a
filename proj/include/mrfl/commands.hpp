#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrfl/corpus.hpp"
#include "mrfl/evaluation.hpp"
#include "mrfl/model.hpp"
#include "mrfl/synthetic.hpp"
#include "mrfl/training.hpp"

namespace mrfl {

// A data directory holds, per language L: L.train.tsv, L.train.ans,
// L.dev.tsv, L.dev.ans.
struct DataPaths {
  std::string covered;
  std::string answers;
};
DataPaths data_paths(const std::string& data_dir, const std::string& language, const std::string& split);
std::vector<SentenceInstance> load_split(const std::string& data_dir, const std::string& language,
                                         const std::string& split, Track track);

enum class ScheduleKind { kAuto, kMonolingual, kBaseline, kMultilingual };
ScheduleKind schedule_from_name(const std::string& name);
std::string schedule_name(ScheduleKind kind);

struct TrainOptions {
  ModelConfig model;
  TrainConfig train;
  // Unset: 20 / 0.3 under the baseline schedule, 50 / none otherwise.
  std::optional<std::size_t> epochs;
  std::optional<double> subsample_rate;
  ScheduleKind schedule = ScheduleKind::kAuto;
  std::string data_dir;
  std::string out;
  std::string log;  // JSON lines; empty: <out>.log.jsonl
};

// Resolves kAuto: window2 -> baseline, several languages -> multilingual,
// otherwise monolingual.
ScheduleKind resolve_schedule(const TrainOptions& options);
// The TrainConfig a run will use after schedule defaults are applied.
TrainConfig effective_train_config(const TrainOptions& options);

void cmd_train(const TrainOptions& options);

struct FinetuneOptions {
  std::string checkpoint;
  std::string language;
  std::string data_dir;
  std::string out;
  std::string log;
  TrainConfig train;
};
void cmd_finetune(const FinetuneOptions& options);

struct PredictOptions {
  std::vector<std::string> checkpoints;  // 1, or exactly 5 for an ensemble
  std::string input;
  std::optional<std::string> language;
  std::optional<Track> track;
  std::string out;
};
void cmd_predict(const PredictOptions& options);

// Returns the accuracy formatted with two decimals.
std::string cmd_evaluate(const std::string& predictions_path, const std::string& answers_path);

struct AblateOptions {
  std::vector<std::string> languages;
  std::string data_dir;
  std::vector<Architecture> architectures = ablation_ladder();
  std::size_t n_models = 50;
  std::size_t n_groups = 0;
  ModelConfig model;
  TrainConfig train;
  TrainConfig baseline_train = TrainConfig::baseline_replication();
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string out_dir;
};
AblationReport cmd_ablate(const AblateOptions& options);

struct SynthOptions {
  SyntheticSpec spec;  // n_sentences is ignored
  std::size_t n_train = 1000;
  std::size_t n_dev = 200;
  Track track = Track::kOne;
  std::string out_dir;
};
void cmd_synth(const SynthOptions& options);

}  // namespace mrfl
