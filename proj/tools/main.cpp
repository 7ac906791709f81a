// mrfl: train, finetune, predict, evaluate, ablate, synth.
// Every flag can also be given as `key = value` in the file passed to --config.
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "mrfl/commands.hpp"
#include "mrfl/errors.hpp"

namespace {

using namespace mrfl;

struct ModelFlags {
  std::string context = "full_lstm";
  int track = 1;
};

void add_model_flags(CLI::App* cmd, ModelConfig& model, ModelFlags& flags) {
  cmd->add_option("--track", flags.track, "Shared-task track")->check(CLI::IsMember({1, 2}));
  cmd->add_option("--context-mode,--context_mode", flags.context, "window2 or full_lstm")
      ->check(CLI::IsMember({"window2", "full_lstm"}));
  cmd->add_flag("--aux-msd,--aux_msd", model.aux_msd, "Auxiliary MSD decoder (Track 1 only)");
  cmd->add_option("--embed-dim,--embed_dim", model.embed_dim);
  cmd->add_option("--lstm-dim,--lstm_dim", model.lstm_dim);
  cmd->add_option("--attn-dim,--attn_dim", model.attn_dim);
}

void finish_model(ModelConfig& model, const ModelFlags& flags) {
  model.track = track_from_int(flags.track);
  model.context_mode = context_mode_from_name(flags.context);
}

void add_train_flags(CLI::App* cmd, TrainConfig& train, bool with_epochs) {
  if (with_epochs) {
    cmd->add_option("--tolerance", train.early_stop_tolerance, "Early-stopping patience (0 disables)");
    cmd->add_option("--multilingual-epochs,--multilingual_epochs", train.multilingual_epochs);
  }
  cmd->add_option("--batch-size,--batch_size", train.batch_size);
  cmd->add_option("--lr", train.lr);
  cmd->add_option("--finetune-lr,--finetune_lr", train.finetune_lr);
  cmd->add_option("--finetune-epochs,--finetune_epochs", train.finetune_epochs);
  cmd->add_option("--dropout", train.dropout);
  cmd->add_option("--word-drop,--word_drop", train.word_drop);
  cmd->add_option("--clip-norm,--clip_norm", train.clip_norm);
  cmd->add_option("--seed", train.seed);
}

std::string flag_name(std::string_view arg) {
  const auto eq = arg.find('=');
  std::string name(arg.substr(2, eq == std::string_view::npos ? std::string_view::npos : eq - 2));
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

// Replaces `--config FILE` after the subcommand with the file's entries as
// --key=value arguments. Keys already present on the command line win; keys
// may sit at top level or under a [subcommand] section.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2) return args;
  const std::string sub = args[1];
  std::optional<std::string> path;
  std::vector<std::string> kept{args[0], sub};
  std::set<std::string> given;
  for (std::size_t i = 2; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    } else {
      if (a.rfind("--", 0) == 0 && a.size() > 2) given.insert(flag_name(a));
      kept.push_back(a);
    }
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) throw ConfigError(*path + ": cannot open config file");
  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub)) continue;
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '-', '_');
    if (given.count(key)) continue;
    std::string value;
    for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? "," : "") + item.inputs[k];
    injected.push_back("--" + key + "=" + value);
  }
  kept.insert(kept.begin() + 2, injected.begin(), injected.end());
  return kept;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morphological inflection in context"};
  std::string config_path;  // consumed by expand_config; declared for --help
  app.require_subcommand(1);

  TrainOptions train;
  ModelFlags train_model;
  std::string schedule = "auto";
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  train_cmd->add_option("--config", config_path, "key = value file (INI/TOML); flags override it");
  add_model_flags(train_cmd, train.model, train_model);
  add_train_flags(train_cmd, train.train, true);
  train_cmd->add_option("--languages,--language", train.model.languages, "Language ids")->required()->delimiter(',');
  train_cmd->add_option("--data-dir,--data_dir", train.data_dir, "Directory with <lang>.train.tsv/.ans")->required();
  train_cmd->add_option("--schedule", schedule)->check(CLI::IsMember({"auto", "monolingual", "baseline", "multilingual"}));
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--subsample-rate,--subsample_rate", train.subsample_rate);
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  train_cmd->add_option("--log", train.log, "JSON-lines log (default <out>.log.jsonl)");

  FinetuneOptions ft;
  auto* ft_cmd = app.add_subcommand("finetune", "Finetune a multilingual checkpoint on one language");
  ft_cmd->add_option("--config", config_path, "key = value file (INI/TOML); flags override it");
  add_train_flags(ft_cmd, ft.train, false);
  ft_cmd->add_option("--checkpoint", ft.checkpoint)->required();
  ft_cmd->add_option("--language", ft.language)->required();
  ft_cmd->add_option("--data-dir,--data_dir", ft.data_dir)->required();
  ft_cmd->add_option("--out", ft.out)->required();
  ft_cmd->add_option("--log", ft.log);

  PredictOptions pred;
  int pred_track = 0;
  std::string pred_language;
  auto* pred_cmd = app.add_subcommand("predict", "Predict covered forms with 1 model or a 5-model ensemble");
  pred_cmd->add_option("--config", config_path, "key = value file (INI/TOML); flags override it");
  pred_cmd->add_option("--checkpoint,--checkpoints", pred.checkpoints)->required()->delimiter(',');
  pred_cmd->add_option("--input", pred.input)->required();
  pred_cmd->add_option("--language", pred_language);
  pred_cmd->add_option("--track", pred_track)->check(CLI::IsMember({1, 2}));
  pred_cmd->add_option("--out", pred.out)->required();

  std::string eval_pred, eval_ans;
  auto* eval_cmd = app.add_subcommand("evaluate", "Exact-match accuracy of predictions against answers");
  eval_cmd->add_option("--config", config_path, "key = value file (INI/TOML); flags override it");
  eval_cmd->add_option("--predictions", eval_pred)->required();
  eval_cmd->add_option("--answers", eval_ans)->required();

  AblateOptions abl;
  ModelFlags abl_model;
  std::vector<std::string> abl_arch;
  std::size_t baseline_epochs = abl.baseline_train.epochs;
  double baseline_subsample = *abl.baseline_train.subsample_rate;
  abl.workers = std::max(1u, std::thread::hardware_concurrency());
  auto* abl_cmd = app.add_subcommand("ablate", "Run the architecture ladder and write CSV reports");
  abl_cmd->add_option("--config", config_path, "key = value file (INI/TOML); flags override it");
  add_model_flags(abl_cmd, abl.model, abl_model);
  add_train_flags(abl_cmd, abl.train, true);
  abl_cmd->add_option("--epochs", abl.train.epochs);
  abl_cmd->add_option("--baseline-epochs,--baseline_epochs", baseline_epochs);
  abl_cmd->add_option("--baseline-subsample,--baseline_subsample", baseline_subsample);
  abl_cmd->add_option("--languages", abl.languages)->required()->delimiter(',');
  abl_cmd->add_option("--data-dir,--data_dir", abl.data_dir, "Directory with <lang>.{train,dev}.{tsv,ans}")->required();
  abl_cmd->add_option("--architectures", abl_arch)->delimiter(',');
  abl_cmd->add_option("--models,--n-models,--n_models", abl.n_models, "Models per cell");
  abl_cmd->add_option("--groups,--n-groups,--n_groups", abl.n_groups, "Multilingual groups (0: same as --models)");
  abl_cmd->add_option("--workers", abl.workers)->check(CLI::PositiveNumber);
  abl_cmd->add_option("--out", abl.out_dir, "Output directory")->required();

  SynthOptions syn;
  int syn_track = 1;
  auto* syn_cmd = app.add_subcommand("synth", "Write a synthetic agreement corpus");
  syn_cmd->add_option("--config", config_path, "key = value file (INI/TOML); flags override it");
  syn_cmd->add_option("--language", syn.spec.language_id);
  syn_cmd->add_option("--variant", syn.spec.variant);
  syn_cmd->add_option("--trigger-distance,--trigger_distance", syn.spec.trigger_distance);
  syn_cmd->add_option("--lemmas,--n-lemmas,--n_lemmas", syn.spec.n_lemmas);
  syn_cmd->add_option("--train,--n-train,--n_train", syn.n_train);
  syn_cmd->add_option("--dev,--n-dev,--n_dev", syn.n_dev);
  syn_cmd->add_option("--seed", syn.spec.seed);
  syn_cmd->add_option("--track", syn_track)->check(CLI::IsMember({1, 2}));
  syn_cmd->add_option("--out", syn.out_dir, "Output directory")->required();

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "mrfl: error: " << e.what() << '\n';
    return 1;
  }
  std::vector<char*> cargv;
  for (auto& a : args) cargv.push_back(a.data());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train_cmd) {
      finish_model(train.model, train_model);
      train.schedule = schedule_from_name(schedule);
      cmd_train(train);
    } else if (*ft_cmd) {
      cmd_finetune(ft);
    } else if (*pred_cmd) {
      if (pred_track != 0) pred.track = track_from_int(pred_track);
      if (!pred_language.empty()) pred.language = pred_language;
      cmd_predict(pred);
    } else if (*eval_cmd) {
      std::cout << cmd_evaluate(eval_pred, eval_ans) << '\n';
    } else if (*abl_cmd) {
      finish_model(abl.model, abl_model);
      abl.model.languages = abl.languages;
      if (!abl_arch.empty()) abl.architectures.clear();
      for (const auto& a : abl_arch) abl.architectures.push_back(architecture_from_name(a));
      abl.baseline_train = abl.train;
      abl.baseline_train.epochs = baseline_epochs;
      abl.baseline_train.subsample_rate = baseline_subsample;
      abl.baseline_train.early_stop_tolerance = 0;
      cmd_ablate(abl);
    } else if (*syn_cmd) {
      syn.track = track_from_int(syn_track);
      cmd_synth(syn);
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "mrfl: error: " << msg << '\n';
    return 1;
  }
  return 0;
}
