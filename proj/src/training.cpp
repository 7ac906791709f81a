#include "mrfl/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "mrfl/adam.hpp"
#include "mrfl/errors.hpp"

namespace mrfl {

void TrainConfig::validate() const {
  if (epochs == 0 || finetune_epochs == 0 || multilingual_epochs == 0) {
    throw ConfigError("epoch counts must be positive");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr >= 0.0)) throw ConfigError("lr must be non-negative");
  if (std::abs(finetune_lr - lr / 10.0) > 1e-12 * std::max(lr, 1e-300)) {
    throw ConfigError("finetune_lr must be a tenth of lr");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (!(word_drop >= 0.0 && word_drop < 1.0)) throw ConfigError("word_drop must be in [0, 1)");
  if (subsample_rate && !(*subsample_rate > 0.0 && *subsample_rate <= 1.0)) {
    throw ConfigError("subsample_rate must be in (0, 1]");
  }
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
}

TrainConfig TrainConfig::baseline_replication() {
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.early_stop_tolerance = 0;
  cfg.subsample_rate = 0.3;
  return cfg;
}

bool EarlyStopping::observe(double loss) {
  ++epoch_;
  if (loss < best_loss_) {
    best_loss_ = loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

double validation_loss(const Model& model, std::span<const EncodedInstance> instances) {
  if (instances.empty()) throw std::invalid_argument("validation set is empty");
  const ForwardOptions infer;
  Tape tape;
  double total = 0.0;
  for (const auto& inst : instances) {
    tape.clear();
    total += tape.scalar(model.compute_loss(tape, inst, infer).total);
  }
  return total / static_cast<double>(instances.size());
}

namespace {

struct Batch {
  std::string language;
  std::vector<const EncodedInstance*> items;
};

using EpochPlan = std::function<std::vector<Batch>(Rng&)>;
using EncodedByLanguage = std::map<std::string, std::vector<EncodedInstance>>;

struct Schedule {
  std::string phase;
  std::size_t epochs = 0;
  std::size_t tolerance = 0;
  double lr = 0.0;
};

TrainResult run_schedule(Model& model, const EncodedByLanguage& validation, const TrainConfig& cfg,
                         const Schedule& schedule, Rng& rng, const EpochPlan& plan,
                         const TrainHooks& hooks) {
  const std::vector<Parameter*> params = model.parameters();
  AdamState adam;
  EarlyStopping early(schedule.tolerance);
  std::vector<Tensor> best;
  TrainResult result;
  Tape tape;
  ForwardOptions opts{&rng, cfg.dropout, cfg.word_drop};

  for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
    EpochRecord record;
    record.phase = schedule.phase;
    record.epoch = epoch;
    record.lr = schedule.lr;
    double loss_sum = 0.0;
    for (const Batch& batch : plan(rng)) {
      model.zero_grad();
      double batch_loss = 0.0;
      for (const EncodedInstance* inst : batch.items) {
        tape.clear();
        LossParts parts = model.compute_loss(tape, *inst, opts);
        Var objective = batch.items.size() == 1
                            ? parts.total
                            : tape.scale(parts.total, 1.0 / static_cast<double>(batch.items.size()));
        tape.backward(objective);
        batch_loss += tape.scalar(parts.total);
      }
      clip_gradients(params, cfg.clip_norm);
      adam_step(params, adam, schedule.lr);
      loss_sum += batch_loss;
      record.instances += batch.items.size();
      ++record.minibatches_by_language[batch.language];
      if (hooks.on_step) hooks.on_step({batch.language, schedule.lr, batch_loss});
    }
    result.instances_processed += record.instances;
    record.train_loss = record.instances ? loss_sum / static_cast<double>(record.instances) : 0.0;

    double val_sum = 0.0;
    for (const auto& [lang, instances] : validation) {
      const double v = validation_loss(model, instances);
      record.validation_by_language[lang] = v;
      val_sum += v;
    }
    record.validation_loss = val_sum / static_cast<double>(validation.size());
    record.improved = early.observe(record.validation_loss);
    if (record.improved) {
      best.clear();
      for (const Parameter* p : params) best.push_back(p->value);
    }
    result.log.push_back(record);
    const bool keep_going = !hooks.on_epoch || hooks.on_epoch(record);
    if (early.should_stop()) {
      result.stopped_early = true;
      break;
    }
    if (!keep_going) break;
  }

  if (!best.empty()) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
  }
  model.zero_grad();
  result.best_epoch = early.best_epoch();
  result.best_validation_loss = early.best_loss();
  return result;
}

std::vector<Batch> batches_from(const std::string& language, std::span<const std::size_t> order,
                                const std::vector<EncodedInstance>& pool, std::size_t batch_size) {
  std::vector<Batch> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    Batch b{language, {}};
    for (std::size_t k = i; k < std::min(order.size(), i + batch_size); ++k) b.items.push_back(&pool[order[k]]);
    out.push_back(std::move(b));
  }
  return out;
}

std::string single_language(const LanguageData& data, const Model& model) {
  if (data.train.empty()) throw std::invalid_argument("no training instances");
  if (data.validation.empty()) throw std::invalid_argument("no validation instances");
  const std::string& lang = data.train.front().language;
  auto same = [&](const SentenceInstance& s) { return s.language == lang; };
  if (!std::all_of(data.train.begin(), data.train.end(), same) ||
      !std::all_of(data.validation.begin(), data.validation.end(), same)) {
    throw std::invalid_argument("monolingual data mixes languages");
  }
  if (!model.covers(lang)) throw std::out_of_range("model does not cover language '" + lang + "'");
  return lang;
}

std::vector<EncodedInstance> encode_for(const Model& model, std::span<const SentenceInstance> instances) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(model.encode(inst));
  return out;
}

TrainResult train_single(Model& model, const LanguageData& data, const TrainConfig& cfg,
                         const TrainHooks& hooks, bool baseline) {
  cfg.validate();
  const std::string lang = single_language(data, model);
  const auto train = encode_for(model, data.train);
  EncodedByLanguage validation{{lang, encode_for(model, data.validation)}};

  if (baseline && !cfg.subsample_rate) throw ConfigError("baseline schedule needs subsample_rate");
  const double rate = baseline ? *cfg.subsample_rate : 1.0;
  EpochPlan plan = [&](Rng& rng) {
    const auto order = draw_subsample(train.size(), rate, rng);
    return batches_from(lang, order, train, cfg.batch_size);
  };
  Rng rng(cfg.seed);
  Schedule schedule{baseline ? "baseline" : "monolingual", cfg.epochs,
                    baseline ? 0 : cfg.early_stop_tolerance, cfg.lr};
  return run_schedule(model, validation, cfg, schedule, rng, plan, hooks);
}

}  // namespace

std::vector<std::size_t> draw_subsample(std::size_t n, double rate, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  const auto k = static_cast<std::size_t>(std::lround(rate * static_cast<double>(n)));
  order.resize(std::min(n, std::max<std::size_t>(k, 1)));
  return order;
}

TrainResult train_monolingual(Model& model, const LanguageData& data, const TrainConfig& cfg,
                              const TrainHooks& hooks) {
  return train_single(model, data, cfg, hooks, false);
}

TrainResult train_baseline_schedule(Model& model, const LanguageData& data, const TrainConfig& cfg,
                                    const TrainHooks& hooks) {
  return train_single(model, data, cfg, hooks, true);
}

std::string LanguageGroup::name() const {
  std::string out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) out += '+';
    out += members[i];
  }
  return out;
}

std::vector<LanguageGroup> make_language_groups(std::vector<std::string> languages, std::size_t n_groups,
                                                std::uint64_t seed) {
  std::sort(languages.begin(), languages.end());
  languages.erase(std::unique(languages.begin(), languages.end()), languages.end());
  if (languages.size() < 2) throw std::invalid_argument("need at least 2 distinct languages to form groups");
  if (n_groups * 3 < languages.size()) {
    throw std::invalid_argument(std::to_string(n_groups) + " groups cannot cover " +
                                std::to_string(languages.size()) + " languages");
  }
  Rng rng(seed);
  const std::size_t max_size = std::min<std::size_t>(3, languages.size());

  auto sample = [&](const std::string* required) {
    const std::size_t size = max_size == 2 ? 2 : 2 + rng.below(2);
    std::vector<std::string> pool = languages;
    rng.shuffle(std::span<std::string>(pool));
    if (required) {
      std::iter_swap(pool.begin(), std::find(pool.begin(), pool.end(), *required));
    }
    LanguageGroup g;
    g.members.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));
    std::sort(g.members.begin(), g.members.end());
    return g;
  };

  std::vector<LanguageGroup> groups;
  for (std::size_t i = 0; i < n_groups; ++i) groups.push_back(sample(nullptr));

  // Coverage guard: resample a group whose members are all covered elsewhere,
  // forcing the missing language in.
  auto counts = [&] {
    std::map<std::string, std::size_t> c;
    for (const auto& g : groups) {
      for (const auto& m : g.members) ++c[m];
    }
    return c;
  };
  for (const auto& lang : languages) {
    auto c = counts();
    if (c[lang] > 0) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      bool redundant = std::all_of(groups[i].members.begin(), groups[i].members.end(),
                                   [&](const std::string& m) { return c[m] >= 2; });
      if (redundant) candidates.push_back(i);
    }
    if (candidates.empty()) throw std::invalid_argument("cannot cover every language with the requested groups");
    groups[candidates[rng.below(candidates.size())]] = sample(&lang);
  }
  return groups;
}

TrainResult train_multilingual(Model& model, const std::map<std::string, LanguageData>& data,
                               const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (data.size() < 2) throw std::invalid_argument("multilingual training needs at least 2 languages");
  std::map<std::string, std::vector<EncodedInstance>> train;
  EncodedByLanguage validation;
  std::size_t total = 0;
  for (const auto& [lang, d] : data) {
    if (d.train.empty() || d.validation.empty()) {
      throw std::invalid_argument("language '" + lang + "' has no training or validation data");
    }
    if (!model.covers(lang)) throw std::out_of_range("model does not cover language '" + lang + "'");
    for (const auto* set : {&d.train, &d.validation}) {
      for (const auto& s : *set) {
        if (s.language != lang) throw std::invalid_argument("instance of '" + s.language + "' filed under '" + lang + "'");
      }
    }
    train[lang] = encode_for(model, d.train);
    validation[lang] = encode_for(model, d.validation);
    total += d.train.size();
  }

  std::vector<std::string> languages;
  for (const auto& [lang, _] : train) languages.push_back(lang);
  struct Cursor {
    std::vector<std::size_t> order;
    std::size_t next = 0;
  };
  std::map<std::string, Cursor> cursors;
  for (const auto& lang : languages) cursors[lang].order.resize(train[lang].size());

  const std::size_t minibatches = std::max<std::size_t>(1, total / cfg.batch_size);
  EpochPlan plan = [&](Rng& rng) {
    std::vector<Batch> out;
    out.reserve(minibatches);
    for (std::size_t b = 0; b < minibatches; ++b) {
      const std::string& lang = languages[rng.below(languages.size())];
      Cursor& cur = cursors[lang];
      Batch batch{lang, {}};
      for (std::size_t k = 0; k < cfg.batch_size; ++k) {
        if (cur.next == 0) {
          std::iota(cur.order.begin(), cur.order.end(), 0);
          rng.shuffle(std::span<std::size_t>(cur.order));
        }
        batch.items.push_back(&train[lang][cur.order[cur.next]]);
        cur.next = (cur.next + 1) % cur.order.size();
      }
      out.push_back(std::move(batch));
    }
    return out;
  };
  Rng rng(cfg.seed);
  Schedule schedule{"multilingual", cfg.multilingual_epochs, cfg.early_stop_tolerance, cfg.lr};
  return run_schedule(model, validation, cfg, schedule, rng, plan, hooks);
}

FinetuneResult finetune(const Model& model, const std::string& language, const LanguageData& data,
                        const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  if (!model.covers(language)) {
    throw std::out_of_range("language '" + language + "' is not part of the model's group");
  }
  FinetuneResult out{model.restricted_to(language), {}};
  LanguageData own = data;
  for (auto* set : {&own.train, &own.validation}) {
    for (const auto& s : *set) {
      if (s.language != language) throw std::invalid_argument("finetuning data contains language '" + s.language + "'");
    }
  }
  const std::string lang = single_language(own, out.model);
  const auto train = encode_for(out.model, own.train);
  EncodedByLanguage validation{{lang, encode_for(out.model, own.validation)}};
  std::vector<std::size_t> order(train.size());
  EpochPlan plan = [&](Rng& rng) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    return batches_from(lang, order, train, cfg.batch_size);
  };
  Rng rng(cfg.seed);
  Schedule schedule{"finetune", cfg.finetune_epochs, 0, cfg.finetune_lr};
  out.result = run_schedule(out.model, validation, cfg, schedule, rng, plan, hooks);
  return out;
}

std::string to_json_line(const EpochRecord& r) {
  nlohmann::json j;
  j["phase"] = r.phase;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["validation_loss"] = r.validation_loss;
  j["validation_by_language"] = r.validation_by_language;
  j["minibatches_by_language"] = r.minibatches_by_language;
  j["lr"] = r.lr;
  j["instances"] = r.instances;
  j["improved"] = r.improved;
  return j.dump();
}

}  // namespace mrfl
