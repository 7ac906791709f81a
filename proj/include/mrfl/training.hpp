#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrfl/corpus.hpp"
#include "mrfl/model.hpp"

namespace mrfl {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t early_stop_tolerance = 5;  // 0 disables early stopping
  std::size_t batch_size = 1;
  double lr = 0.001;
  double finetune_lr = 0.0001;
  std::size_t finetune_epochs = 5;
  std::size_t multilingual_epochs = 20;
  double dropout = 0.3;
  double word_drop = 0.1;
  std::optional<double> subsample_rate;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  // Throws ConfigError, including when finetune_lr != lr / 10.
  void validate() const;

  // Defaults of the shared-task baseline: 20 epochs on fresh 30% subsamples.
  static TrainConfig baseline_replication();
};

struct EpochRecord {
  std::string phase;  // "monolingual", "baseline", "multilingual", "finetune"
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
  std::map<std::string, double> validation_by_language;
  std::map<std::string, std::size_t> minibatches_by_language;
  double lr = 0.0;
  std::size_t instances = 0;
  bool improved = false;
};

struct StepRecord {
  std::string language;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainHooks {
  std::function<void(const StepRecord&)> on_step;
  // Return false to stop after this epoch.
  std::function<bool(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();
  std::size_t instances_processed = 0;
  bool stopped_early = false;
};

struct LanguageData {
  std::vector<SentenceInstance> train;
  std::vector<SentenceInstance> validation;
};

// Tracks the best validation loss; stop once `tolerance` consecutive epochs
// fail to improve on it strictly.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t tolerance) : tolerance_(tolerance) {}

  // Returns true when `loss` is a new best.
  bool observe(double loss);
  bool should_stop() const { return tolerance_ > 0 && since_best_ >= tolerance_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t tolerance_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t since_best_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

// Mean total loss in inference mode.
double validation_loss(const Model& model, std::span<const EncodedInstance> instances);

// Up to cfg.epochs epochs over shuffled training data, early stopping on
// validation loss; the model ends with its best-validation weights.
TrainResult train_monolingual(Model& model, const LanguageData& data, const TrainConfig& cfg,
                              const TrainHooks& hooks = {});

// One baseline epoch's sample: the first round(rate * n) indices of a fresh
// shuffle of [0, n), at least one.
std::vector<std::size_t> draw_subsample(std::size_t n, double rate, Rng& rng);

// Exactly cfg.epochs epochs, each on a fresh round(rate * n) subsample;
// no early stopping. Keeps the best-validation weights.
TrainResult train_baseline_schedule(Model& model, const LanguageData& data, const TrainConfig& cfg,
                                    const TrainHooks& hooks = {});

struct LanguageGroup {
  std::vector<std::string> members;  // sorted, 2-3 distinct ids

  std::string name() const;  // members joined by '+'
  bool operator==(const LanguageGroup&) const = default;
};

// Random groups of 2 or 3 languages; every language appears in at least one
// group.
std::vector<LanguageGroup> make_language_groups(std::vector<std::string> languages, std::size_t n_groups,
                                                std::uint64_t seed);

// Each minibatch's language is drawn uniformly; an epoch is
// sum(train sizes) / batch_size minibatches. cfg.multilingual_epochs budget
// with early stopping on the mean per-language validation loss.
TrainResult train_multilingual(Model& model, const std::map<std::string, LanguageData>& data,
                               const TrainConfig& cfg, const TrainHooks& hooks = {});

struct FinetuneResult {
  Model model;
  TrainResult result;
};

// Forks the model down to `language` and trains it for cfg.finetune_epochs at
// cfg.finetune_lr with fresh optimiser state, keeping the best epoch.
FinetuneResult finetune(const Model& model, const std::string& language, const LanguageData& data,
                        const TrainConfig& cfg, const TrainHooks& hooks = {});

// One JSON object per line.
std::string to_json_line(const EpochRecord& record);

}  // namespace mrfl
