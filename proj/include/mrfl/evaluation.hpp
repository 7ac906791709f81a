#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrfl/corpus.hpp"
#include "mrfl/model.hpp"
#include "mrfl/training.hpp"

namespace mrfl {

// 100 * exact matches / n, byte-exact comparison. Throws on length mismatch
// or empty input.
double accuracy(std::span<const std::string> predictions, std::span<const std::string> golds);

// Two decimals, e.g. "49.87".
std::string format_percentage(double value);

// Exact-match accuracy of greedy predictions against gold forms.
double dev_accuracy(const Model& model, std::span<const SentenceInstance> instances);

// Nouns, adjectives and verbs, judged by the first MSD component.
bool is_content_word(const MsdTag& msd);

// Non-target tokens that msd_accuracy would score.
std::size_t count_msd_eligible(std::span<const SentenceInstance> instances);

// Covers the content word at `position` instead of the original target. The
// original target gets its gold form back (its lemma when no gold exists).
SentenceInstance repose(const SentenceInstance& instance, std::size_t position);

// Auxiliary-decoder accuracy over every non-target content word, each scored
// by covering it and comparing the predicted tag sequence exactly.
double msd_accuracy(const Model& model, std::span<const SentenceInstance> instances);

// Auxiliary-decoder accuracy on the targets' own gold MSDs.
double target_msd_accuracy(const Model& model, std::span<const SentenceInstance> instances);

enum class Architecture { kWindow2Baseline, kLstmEnc, kMultiTask, kMultilingual, kFinetuned };

std::string_view architecture_name(Architecture arch);
Architecture architecture_from_name(std::string_view name);
const std::vector<Architecture>& ablation_ladder();

struct CellStats {
  std::size_t n_models = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double top5_mean = 0.0;
};

// Needs at least 5 accuracies.
CellStats summarize(std::span<const double> accuracies);

struct RunRecord {
  std::string language;
  Architecture architecture = Architecture::kLstmEnc;
  std::uint64_t seed = 0;
  double dev_accuracy = 0.0;
  std::string group;  // multilingual runs only
};

struct CellSummary {
  std::string language;
  Architecture architecture = Architecture::kLstmEnc;
  CellStats stats;
};

struct Delta {
  std::string language;
  Architecture from = Architecture::kWindow2Baseline;
  Architecture to = Architecture::kLstmEnc;
  double mean_delta = 0.0;
  double top5_delta = 0.0;
};

struct MultilingualRun {
  LanguageGroup group;
  std::uint64_t seed = 0;
  std::map<std::string, double> dev_accuracy;
};

struct AblationReport {
  std::vector<RunRecord> runs;  // sorted by (language, architecture, seed)
  std::vector<CellSummary> cells;
  std::vector<Delta> deltas;
  std::vector<MultilingualRun> multilingual_runs;
};

struct AblationData {
  std::vector<SentenceInstance> train;  // split 90:10 into train/validation
  std::vector<SentenceInstance> dev;    // scored for accuracy
};

struct AblationConfig {
  std::map<std::string, AblationData> data;
  std::vector<Architecture> architectures = ablation_ladder();
  std::size_t n_models_per_cell = 50;
  std::size_t n_groups = 0;  // 0: same as n_models_per_cell
  std::uint64_t base_seed = 1;
  ModelConfig model;  // dimensions and track; mode/aux/languages set per run
  TrainConfig train;
  TrainConfig baseline_train = TrainConfig::baseline_replication();
  std::size_t workers = 1;
};

AblationReport run_ablation(const AblationConfig& config);

// Per language, the five best multilingual runs containing it, as partner
// sets (the group minus the language), best first.
struct PartnerEntry {
  std::vector<std::string> partners;
  double dev_accuracy = 0.0;
  std::uint64_t seed = 0;
};
std::map<std::string, std::vector<PartnerEntry>> best_partner_table(std::span<const MultilingualRun> runs);

void write_runs_csv(std::ostream& out, const AblationReport& report);
void write_summary_csv(std::ostream& out, const AblationReport& report);
void write_deltas_csv(std::ostream& out, const AblationReport& report);
void write_partner_csv(std::ostream& out, const std::map<std::string, std::vector<PartnerEntry>>& table);

}  // namespace mrfl
