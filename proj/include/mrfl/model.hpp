#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrfl/corpus.hpp"
#include "mrfl/encoding.hpp"
#include "mrfl/layers.hpp"
#include "mrfl/random.hpp"
#include "mrfl/tape.hpp"
#include "mrfl/vocabulary.hpp"

namespace mrfl {

enum class ContextMode { kWindow2, kFullLstm };

std::string_view context_mode_name(ContextMode mode);
ContextMode context_mode_from_name(std::string_view name);

struct ModelConfig {
  std::size_t embed_dim = 100;
  std::size_t lstm_dim = 100;
  std::size_t attn_dim = 100;
  Track track = Track::kOne;
  ContextMode context_mode = ContextMode::kFullLstm;
  bool aux_msd = false;
  std::vector<std::string> languages;

  // Throws ConfigError: aux_msd outside Track 1, no/duplicate languages,
  // zero dimensions.
  void validate() const;

  // Width of one context token's features: form, plus lemma and MSD in Track 1.
  std::size_t feature_dim() const;
  // Width of the vector returned by encode_context.
  std::size_t context_dim() const;

  bool operator==(const ModelConfig&) const = default;
};

// Parameters private to one language.
struct LanguageBlock {
  Parameter char_embed;   // [chars x E], shared by lemma encoder and form decoder
  Parameter word_embed;   // [words x E]
  Parameter lemma_embed;  // [lemmas x E], Track 1 only
  Parameter msd_embed;    // [msd components x E], Track 1 only
  LstmWeights past_lstm;    // full_lstm only
  LstmWeights future_lstm;  // full_lstm only
  LstmWeights encoder;      // input E + context_dim
  LstmWeights decoder;      // input E + H
  // Additive attention v^T tanh(W [d ; s]) with W split column-wise into the
  // decoder-state part and the encoder-state part.
  Parameter attn_query;  // [A x H]
  Parameter attn_key;    // [A x H]
  Parameter attn_score;  // [A]
  Parameter out_weight;  // [chars x H]
  Parameter out_bias;    // [chars]
};

// Auxiliary MSD decoder, one instance per model whatever the language count.
struct MsdDecoderBlock {
  Parameter init_weight;  // [H x context_dim]
  Parameter init_bias;    // [H]
  Parameter embed;        // [shared msd components x E]
  LstmWeights lstm;
  Parameter out_weight;   // [shared msd components x H]
  Parameter out_bias;
};

// Training-mode switches. A null rng means inference: no dropout, no word drop.
struct ForwardOptions {
  Rng* rng = nullptr;
  double dropout = 0.0;
  double word_drop = 0.0;
};

struct Attention {
  Var context;
  Var weights;
};

struct Decoding {
  std::vector<Var> logits;
  std::vector<Var> attention;  // form decoder only, one weight vector per step
  std::vector<int> symbols;    // predicted indices, EOS excluded
  bool truncated = false;
};

struct LossParts {
  Var total;
  Var main;
  Var aux;  // invalid when aux_msd is off
};

struct FormPrediction {
  std::string form;
  bool truncated = false;
};

class Model {
 public:
  static constexpr std::size_t kMaxMsdLength = 10;

  Model(ModelConfig config, Vocabularies vocabularies, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const Vocabularies& vocabularies() const noexcept { return vocab_; }
  bool covers(const std::string& language) const { return blocks_.count(language) > 0; }
  const LanguageBlock& block(const std::string& language) const;
  LanguageBlock& block(const std::string& language);
  // The one auxiliary decoder; every language resolves to the same object.
  const MsdDecoderBlock& msd_decoder() const;
  const MsdDecoderBlock& msd_decoder_for(const std::string& language) const;

  // Deterministic order: languages sorted, fixed order within a block, then
  // the shared block.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();

  EncodedInstance encode(const SentenceInstance& instance) const;

  Var encode_context(Tape& tape, const EncodedInstance& inst, const ForwardOptions& opts) const;
  Var encode_context_full(Tape& tape, const EncodedInstance& inst, const ForwardOptions& opts) const;
  Var encode_context_window2(Tape& tape, const EncodedInstance& inst, const ForwardOptions& opts) const;

  struct LemmaEncoding {
    std::vector<Var> states;
    LstmState final;
  };
  LemmaEncoding encode_lemma(Tape& tape, const std::string& language, std::span<const int> lemma_chars,
                             Var context, const ForwardOptions& opts) const;

  Attention attend(Tape& tape, const std::string& language, Var decoder_state,
                   std::span<const Var> encoder_states) const;

  // Teacher forcing when `gold` (output symbols ending in EOS, no BOS) is
  // given: one logit vector per gold symbol. Greedy otherwise, stopping at EOS
  // or after max_len symbols (truncated).
  Decoding decode_form(Tape& tape, const std::string& language, const LemmaEncoding& encoding,
                       std::optional<std::span<const int>> gold, std::size_t max_len,
                       const ForwardOptions& opts) const;

  // Component-at-a-time MSD generation from the context vector only; gold and
  // greedy behave as in decode_form. Greedy output always has >= 1 component.
  Decoding decode_msd(Tape& tape, Var context, std::optional<std::span<const int>> gold,
                      std::size_t max_len, const ForwardOptions& opts) const;

  // main = sum of per-character cross entropies; aux = sum over MSD
  // components; total = main + aux, unweighted.
  LossParts compute_loss(Tape& tape, const EncodedInstance& inst, const ForwardOptions& opts) const;

  static std::size_t max_form_length(const EncodedInstance& inst);

  FormPrediction predict(const EncodedInstance& inst) const;
  std::string predict_form(const SentenceInstance& instance) const;
  MsdTag predict_msd(const EncodedInstance& inst) const;

  // Copy holding only `language` and the (forked) shared decoder.
  Model restricted_to(const std::string& language) const;

 private:
  Var token_features(Tape& tape, const LanguageBlock& b, const EncodedToken* token,
                     const ForwardOptions& opts) const;
  void check_language(const std::string& language) const;

  ModelConfig config_;
  Vocabularies vocab_;
  std::map<std::string, LanguageBlock> blocks_;
  std::optional<MsdDecoderBlock> msd_;
};

}  // namespace mrfl
