#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "mrfl/corpus.hpp"
#include "mrfl/model.hpp"
#include "mrfl/random.hpp"
#include "mrfl/synthetic.hpp"
#include "mrfl/vocabulary.hpp"

namespace mrfl::test {

// "We were _ to feel very welcome ." with target lemma "make".
inline constexpr const char* kTable1 =
    "We\twe\tPRO;NOM;PL;1\n"
    "were\tbe\tAUX;IND;PST;FIN\n"
    "_\tmake\t_\n"
    "to\tto\tPART\n"
    "feel\tfeel\tV;NFIN\n"
    "very\tvery\tADV\n"
    "welcome\twelcome\tADJ\n"
    ".\t.\tPUNCT\n";

inline SentenceInstance table1_instance(Track track) {
  std::istringstream in(kTable1);
  auto parsed = parse_sentences(in, track, "en", "table1");
  std::istringstream ans("made\tV;PST;V.PTCP;PASS\n");
  attach_answers(parsed, parse_answers(ans));
  return parsed.at(0);
}

inline std::string random_word(Rng& rng) {
  static const std::vector<std::string> alphabet{"a", "b", "k", "z", "é", "ø", "ß", "я", "ж", "中", "'", "-", ".", "1"};
  std::string w;
  const std::size_t len = 1 + rng.below(6);
  for (std::size_t i = 0; i < len; ++i) w += alphabet[rng.below(alphabet.size())];
  return w;
}

inline std::string random_msd(Rng& rng) {
  static const std::vector<std::string> parts{"N", "V", "ADJ", "PRO", "PL", "SG", "PST", "V.PTCP", "NOM", "1", "LGSPEC1"};
  std::string tag;
  const std::size_t len = 1 + rng.below(5);
  for (std::size_t i = 0; i < len; ++i) tag += (i ? ";" : "") + parts[rng.below(parts.size())];
  return tag;
}

// Well-formed random instances, including unavailable fields.
inline std::vector<SentenceInstance> fuzz_corpus(std::size_t n, Rng& rng, Track track) {
  std::vector<SentenceInstance> out;
  for (std::size_t s = 0; s < n; ++s) {
    SentenceInstance inst;
    inst.language = "fz";
    const std::size_t len = 1 + rng.below(12);
    inst.target_index = rng.below(len);
    for (std::size_t i = 0; i < len; ++i) {
      Token t;
      if (i == inst.target_index) {
        t.lemma = random_word(rng);
      } else {
        t.form = random_word(rng);
        if (track == Track::kOne) {
          if (rng.bernoulli(0.8)) t.lemma = random_word(rng);
          if (rng.bernoulli(0.8)) t.msd = split_msd(random_msd(rng));
        }
      }
      inst.tokens.push_back(std::move(t));
    }
    inst.gold_form = random_word(rng);
    if (rng.bernoulli(0.9)) inst.gold_msd = split_msd(random_msd(rng));
    out.push_back(std::move(inst));
  }
  return out;
}

inline ModelConfig tiny_config(std::vector<std::string> languages, std::size_t dim = 4) {
  ModelConfig c;
  c.embed_dim = c.lstm_dim = c.attn_dim = dim;
  c.languages = std::move(languages);
  return c;
}

inline std::vector<SentenceInstance> synth(std::size_t n, std::uint64_t seed, const std::string& lang = "syn",
                                           std::size_t distance = 1, std::size_t variant = 0,
                                           std::size_t n_lemmas = 20) {
  SyntheticSpec spec;
  spec.n_sentences = n;
  spec.seed = seed;
  spec.language_id = lang;
  spec.trigger_distance = distance;
  spec.variant = variant;
  spec.n_lemmas = n_lemmas;
  return generate_synthetic_corpus(spec);
}

}  // namespace mrfl::test

#include "mrfl/evaluation.hpp"
#include "mrfl/training.hpp"

namespace mrfl::test {

// Trains without regularisation until the model reproduces `data` exactly,
// or max_epochs pass.
inline Model overfit(const std::vector<SentenceInstance>& data, std::vector<std::string> langs, std::size_t dim,
                     bool aux = false, std::size_t max_epochs = 300, std::uint64_t seed = 5) {
  ModelConfig cfg = tiny_config(std::move(langs), dim);
  cfg.aux_msd = aux;
  Model m(cfg, build_vocabularies(data, Track::kOne), seed);
  TrainConfig tc;
  tc.epochs = max_epochs;
  tc.early_stop_tolerance = 0;
  tc.dropout = 0.0;
  tc.word_drop = 0.0;
  tc.lr = 0.005;
  tc.finetune_lr = 0.0005;
  tc.seed = seed;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    if (r.epoch % 5 != 0) return true;
    return dev_accuracy(m, data) < 100.0 || (aux && target_msd_accuracy(m, data) < 100.0);
  };
  train_monolingual(m, LanguageData{data, data}, tc, hooks);
  return m;
}

}  // namespace mrfl::test
