#include "mrfl/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "mrfl/vocabulary.hpp"

namespace mrfl {

double accuracy(std::span<const std::string> predictions, std::span<const std::string> golds) {
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(golds.size()) + " gold forms");
  }
  if (golds.empty()) throw std::invalid_argument("accuracy: no items");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) hits += predictions[i] == golds[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(golds.size());
}

std::string format_percentage(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

double dev_accuracy(const Model& model, std::span<const SentenceInstance> instances) {
  std::vector<std::string> predictions, golds;
  for (const auto& inst : instances) {
    if (!inst.gold_form) throw std::invalid_argument("dev instance without gold form");
    predictions.push_back(model.predict_form(inst));
    golds.push_back(*inst.gold_form);
  }
  return accuracy(predictions, golds);
}

bool is_content_word(const MsdTag& msd) {
  if (msd.components.empty()) return false;
  const std::string& pos = msd.part_of_speech();
  return pos == "N" || pos == "ADJ" || pos == "V";
}

namespace {
bool eligible(const SentenceInstance& inst, std::size_t i) {
  const Token& t = inst.tokens[i];
  return i != inst.target_index && t.msd && is_content_word(*t.msd);
}
}  // namespace

std::size_t count_msd_eligible(std::span<const SentenceInstance> instances) {
  std::size_t n = 0;
  for (const auto& inst : instances) {
    for (std::size_t i = 0; i < inst.tokens.size(); ++i) n += eligible(inst, i) ? 1 : 0;
  }
  return n;
}

SentenceInstance repose(const SentenceInstance& instance, std::size_t position) {
  if (position >= instance.tokens.size() || position == instance.target_index) {
    throw std::invalid_argument("repose: position must be a context token");
  }
  SentenceInstance out = instance;
  Token& old_target = out.tokens[instance.target_index];
  old_target.form = instance.gold_form ? *instance.gold_form : instance.lemma();
  old_target.msd = instance.gold_msd;
  Token& covered = out.tokens[position];
  if (!covered.lemma) covered.lemma = covered.form;
  out.gold_form = covered.form;
  out.gold_msd = covered.msd;
  covered.form.reset();
  covered.msd.reset();
  out.target_index = position;
  return out;
}

double msd_accuracy(const Model& model, std::span<const SentenceInstance> instances) {
  std::size_t total = 0, hits = 0;
  for (const auto& inst : instances) {
    for (std::size_t i = 0; i < inst.tokens.size(); ++i) {
      if (!eligible(inst, i)) continue;
      const SentenceInstance posed = repose(inst, i);
      ++total;
      hits += model.predict_msd(model.encode(posed)) == *posed.gold_msd ? 1 : 0;
    }
  }
  if (total == 0) throw std::invalid_argument("msd_accuracy: no noun, adjective or verb tokens to score");
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

double target_msd_accuracy(const Model& model, std::span<const SentenceInstance> instances) {
  std::size_t total = 0, hits = 0;
  for (const auto& inst : instances) {
    if (!inst.gold_msd) continue;
    ++total;
    hits += model.predict_msd(model.encode(inst)) == *inst.gold_msd ? 1 : 0;
  }
  if (total == 0) throw std::invalid_argument("target_msd_accuracy: no gold MSDs");
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

std::string_view architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::kWindow2Baseline: return "window2-baseline";
    case Architecture::kLstmEnc: return "lstm_enc";
    case Architecture::kMultiTask: return "multi_task";
    case Architecture::kMultilingual: return "multilingual";
    case Architecture::kFinetuned: return "finetuned";
  }
  return "unknown";
}

const std::vector<Architecture>& ablation_ladder() {
  static const std::vector<Architecture> ladder = {Architecture::kWindow2Baseline, Architecture::kLstmEnc,
                                                   Architecture::kMultiTask, Architecture::kMultilingual,
                                                   Architecture::kFinetuned};
  return ladder;
}

Architecture architecture_from_name(std::string_view name) {
  for (Architecture a : ablation_ladder()) {
    if (architecture_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

CellStats summarize(std::span<const double> accuracies) {
  if (accuracies.size() < 5) {
    throw std::invalid_argument("need at least 5 models per cell, got " + std::to_string(accuracies.size()));
  }
  CellStats s;
  s.n_models = accuracies.size();
  const double n = static_cast<double>(accuracies.size());
  s.mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / n;
  double sq = 0.0;
  for (double a : accuracies) sq += (a - s.mean) * (a - s.mean);
  s.std = std::sqrt(sq / n);
  std::vector<double> sorted(accuracies.begin(), accuracies.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  s.top5_mean = std::accumulate(sorted.begin(), sorted.begin() + 5, 0.0) / 5.0;
  return s;
}

namespace {

using Task = std::function<std::vector<RunRecord>()>;

// Runs tasks on a bounded pool; results stay in task order.
std::vector<std::vector<RunRecord>> run_pool(const std::vector<Task>& tasks, std::size_t workers) {
  std::vector<std::vector<RunRecord>> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, tasks.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::vector<SentenceInstance> concat(const LanguageData& d) {
  std::vector<SentenceInstance> all = d.train;
  all.insert(all.end(), d.validation.begin(), d.validation.end());
  return all;
}

std::size_t ladder_rank(Architecture a) {
  const auto& l = ablation_ladder();
  return static_cast<std::size_t>(std::find(l.begin(), l.end(), a) - l.begin());
}

}  // namespace

AblationReport run_ablation(const AblationConfig& config) {
  if (config.n_models_per_cell < 5) throw std::invalid_argument("n_models_per_cell must be at least 5");
  std::map<std::string, LanguageData> splits;
  for (const auto& [lang, d] : config.data) {
    auto [train, validation] = split_train_validation(d.train, 0.9, config.base_seed);
    splits[lang] = LanguageData{std::move(train), std::move(validation)};
  }
  auto wants = [&](Architecture a) {
    return std::find(config.architectures.begin(), config.architectures.end(), a) != config.architectures.end();
  };

  std::vector<Task> tasks;
  for (const auto& [lang_key, split_key] : splits) {
    const std::string lang = lang_key;
    for (Architecture arch : {Architecture::kWindow2Baseline, Architecture::kLstmEnc, Architecture::kMultiTask}) {
      if (!wants(arch)) continue;
      for (std::size_t i = 0; i < config.n_models_per_cell; ++i) {
        const std::uint64_t seed = config.base_seed + i;
        tasks.push_back([&config, &splits, lang, arch, seed] {
          const LanguageData& d = splits.at(lang);
          ModelConfig mc = config.model;
          mc.languages = {lang};
          mc.context_mode = arch == Architecture::kWindow2Baseline ? ContextMode::kWindow2 : ContextMode::kFullLstm;
          mc.aux_msd = arch == Architecture::kMultiTask;
          const auto all = concat(d);
          Model model(mc, build_vocabularies(all, mc.track), seed);
          TrainConfig tc = arch == Architecture::kWindow2Baseline ? config.baseline_train : config.train;
          tc.seed = seed;
          if (arch == Architecture::kWindow2Baseline) {
            train_baseline_schedule(model, d, tc);
          } else {
            train_monolingual(model, d, tc);
          }
          return std::vector<RunRecord>{{lang, arch, seed, dev_accuracy(model, config.data.at(lang).dev), ""}};
        });
      }
    }
  }

  std::vector<LanguageGroup> groups;
  const bool multilingual = wants(Architecture::kMultilingual) || wants(Architecture::kFinetuned);
  if (multilingual) {
    std::vector<std::string> languages;
    for (const auto& [lang, _] : splits) languages.push_back(lang);
    const std::size_t n_groups = config.n_groups ? config.n_groups : config.n_models_per_cell;
    groups = make_language_groups(languages, n_groups, config.base_seed);
  }
  const std::size_t first_group_task = tasks.size();
  for (std::size_t j = 0; j < groups.size(); ++j) {
    const LanguageGroup group = groups[j];
    const std::uint64_t seed = config.base_seed + j;
    tasks.push_back([&config, &splits, &wants, group, seed] {
      ModelConfig mc = config.model;
      mc.languages = group.members;
      mc.context_mode = ContextMode::kFullLstm;
      mc.aux_msd = true;
      std::map<std::string, LanguageData> data;
      std::vector<SentenceInstance> all;
      for (const auto& lang : group.members) {
        data[lang] = splits.at(lang);
        auto part = concat(data[lang]);
        all.insert(all.end(), part.begin(), part.end());
      }
      Model model(mc, build_vocabularies(all, mc.track), seed);
      TrainConfig tc = config.train;
      tc.seed = seed;
      train_multilingual(model, data, tc);
      std::vector<RunRecord> out;
      for (const auto& lang : group.members) {
        const auto& dev = config.data.at(lang).dev;
        if (wants(Architecture::kMultilingual)) {
          out.push_back({lang, Architecture::kMultilingual, seed, dev_accuracy(model, dev), group.name()});
        }
        if (wants(Architecture::kFinetuned)) {
          FinetuneResult ft = finetune(model, lang, data[lang], tc);
          out.push_back({lang, Architecture::kFinetuned, seed, dev_accuracy(ft.model, dev), group.name()});
        }
      }
      return out;
    });
  }

  const auto results = run_pool(tasks, config.workers);
  AblationReport report;
  for (std::size_t t = 0; t < results.size(); ++t) {
    report.runs.insert(report.runs.end(), results[t].begin(), results[t].end());
    if (t >= first_group_task) {
      MultilingualRun mr{groups[t - first_group_task], config.base_seed + (t - first_group_task), {}};
      for (const auto& r : results[t]) {
        const bool primary = wants(Architecture::kMultilingual) ? r.architecture == Architecture::kMultilingual
                                                                : r.architecture == Architecture::kFinetuned;
        if (primary) mr.dev_accuracy[r.language] = r.dev_accuracy;
      }
      report.multilingual_runs.push_back(std::move(mr));
    }
  }
  std::sort(report.runs.begin(), report.runs.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.language != b.language) return a.language < b.language;
    if (a.architecture != b.architecture) return ladder_rank(a.architecture) < ladder_rank(b.architecture);
    return a.seed < b.seed;
  });

  std::map<std::pair<std::string, std::size_t>, std::vector<double>> cells;
  for (const auto& r : report.runs) cells[{r.language, ladder_rank(r.architecture)}].push_back(r.dev_accuracy);
  for (const auto& [key, accs] : cells) {
    if (accs.size() < 5) {
      throw std::invalid_argument("language '" + key.first + "' has only " + std::to_string(accs.size()) + " " +
                                  std::string(architecture_name(ablation_ladder()[key.second])) +
                                  " models; raise n_groups");
    }
    report.cells.push_back({key.first, ablation_ladder()[key.second], summarize(accs)});
  }
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    for (std::size_t j = i + 1; j < report.cells.size(); ++j) {
      const auto& a = report.cells[i];
      const auto& b = report.cells[j];
      if (a.language != b.language) continue;
      const bool adjacent = ladder_rank(b.architecture) == ladder_rank(a.architecture) + 1;
      const bool overall = a.architecture == Architecture::kWindow2Baseline &&
                           b.architecture == Architecture::kFinetuned;
      if (adjacent || overall) {
        report.deltas.push_back({a.language, a.architecture, b.architecture, b.stats.mean - a.stats.mean,
                                 b.stats.top5_mean - a.stats.top5_mean});
      }
    }
  }
  return report;
}

std::map<std::string, std::vector<PartnerEntry>> best_partner_table(std::span<const MultilingualRun> runs) {
  std::map<std::string, std::vector<PartnerEntry>> table;
  for (const auto& run : runs) {
    for (const auto& [lang, acc] : run.dev_accuracy) {
      PartnerEntry e;
      for (const auto& m : run.group.members) {
        if (m != lang) e.partners.push_back(m);
      }
      e.dev_accuracy = acc;
      e.seed = run.seed;
      table[lang].push_back(std::move(e));
    }
  }
  for (auto& [lang, entries] : table) {
    if (entries.size() < 5) {
      throw std::invalid_argument("language '" + lang + "' appears in only " + std::to_string(entries.size()) +
                                  " multilingual models; need 5");
    }
    std::sort(entries.begin(), entries.end(), [](const PartnerEntry& a, const PartnerEntry& b) {
      if (a.dev_accuracy != b.dev_accuracy) return a.dev_accuracy > b.dev_accuracy;
      return a.seed < b.seed;
    });
    entries.resize(5);
  }
  return table;
}

namespace {
std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}
}  // namespace

void write_runs_csv(std::ostream& out, const AblationReport& report) {
  out << "language,architecture,seed,dev_accuracy\n";
  for (const auto& r : report.runs) {
    out << r.language << ',' << architecture_name(r.architecture) << ',' << r.seed << ','
        << fixed4(r.dev_accuracy) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const AblationReport& report) {
  out << "# std is the population standard deviation; top5_mean averages the 5 best models\n";
  out << "language,architecture,n_models,mean,std,top5_mean\n";
  for (const auto& c : report.cells) {
    out << c.language << ',' << architecture_name(c.architecture) << ',' << c.stats.n_models << ','
        << fixed4(c.stats.mean) << ',' << fixed4(c.stats.std) << ',' << fixed4(c.stats.top5_mean) << '\n';
  }
}

void write_deltas_csv(std::ostream& out, const AblationReport& report) {
  out << "language,from,to,mean_delta,top5_delta\n";
  for (const auto& d : report.deltas) {
    out << d.language << ',' << architecture_name(d.from) << ',' << architecture_name(d.to) << ','
        << fixed4(d.mean_delta) << ',' << fixed4(d.top5_delta) << '\n';
  }
}

void write_partner_csv(std::ostream& out, const std::map<std::string, std::vector<PartnerEntry>>& table) {
  out << "language,rank,partners,seed,dev_accuracy\n";
  for (const auto& [lang, entries] : table) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      std::string partners;
      for (std::size_t k = 0; k < entries[i].partners.size(); ++k) {
        if (k) partners += ' ';
        partners += entries[i].partners[k];
      }
      out << lang << ',' << i + 1 << ',' << partners << ',' << entries[i].seed << ','
          << fixed4(entries[i].dev_accuracy) << '\n';
    }
  }
}

}  // namespace mrfl
