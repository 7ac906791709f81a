#include "mrfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "mrfl/errors.hpp"

namespace mrfl {

namespace {

constexpr double kEmbeddingInit = 0.1;

Parameter embedding_table(const std::string& name, std::size_t rows, std::size_t dim, Rng& rng) {
  return Parameter(name, uniform_tensor({rows, dim}, kEmbeddingInit, rng));
}

void push_lstm(std::vector<Parameter*>& out, LstmWeights& l) {
  if (l.weight.value.empty()) return;
  out.push_back(&l.weight);
  out.push_back(&l.bias);
}

void push(std::vector<Parameter*>& out, Parameter& p) {
  if (!p.value.empty()) out.push_back(&p);
}

int argmax_allowed(std::span<const double> logits, bool allow_eos) {
  int best = -1;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const int idx = static_cast<int>(i);
    if (idx == Vocabulary::kPad || idx == Vocabulary::kBos || idx == Vocabulary::kDrop) continue;
    if (idx == Vocabulary::kEos && !allow_eos) continue;
    if (best < 0 || logits[i] > logits[best]) best = idx;
  }
  return best;
}

Var mean_of(Tape& tape, std::span<const Var> parts) {
  Var acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = tape.add(acc, parts[i]);
  return parts.size() == 1 ? acc : tape.scale(acc, 1.0 / static_cast<double>(parts.size()));
}

}  // namespace

std::string_view context_mode_name(ContextMode mode) {
  return mode == ContextMode::kWindow2 ? "window2" : "full_lstm";
}

ContextMode context_mode_from_name(std::string_view name) {
  if (name == "window2") return ContextMode::kWindow2;
  if (name == "full_lstm") return ContextMode::kFullLstm;
  throw ConfigError("context_mode must be window2 or full_lstm, got '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (aux_msd && track != Track::kOne) {
    throw ConfigError("aux_msd requires Track 1 (MSD tags are unavailable in Track 2)");
  }
  if (languages.empty()) throw ConfigError("model needs at least one language");
  if (std::set<std::string>(languages.begin(), languages.end()).size() != languages.size()) {
    throw ConfigError("duplicate language in model config");
  }
  if (embed_dim == 0 || lstm_dim == 0 || attn_dim == 0) throw ConfigError("model dimensions must be positive");
}

std::size_t ModelConfig::feature_dim() const {
  return track == Track::kOne ? 3 * embed_dim : embed_dim;
}

std::size_t ModelConfig::context_dim() const {
  return context_mode == ContextMode::kFullLstm ? 2 * lstm_dim : 2 * feature_dim();
}

Model::Model(ModelConfig config, Vocabularies vocabularies, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocabularies)) {
  config_.validate();
  std::sort(config_.languages.begin(), config_.languages.end());
  const std::size_t E = config_.embed_dim, H = config_.lstm_dim, A = config_.attn_dim;
  const std::size_t F = config_.feature_dim(), C = config_.context_dim();
  Rng rng(seed);
  for (const auto& lang : config_.languages) {
    const LanguageVocabularies& v = vocab_.at(lang);
    const std::size_t chars = v.chars.size();
    LanguageBlock b;
    b.char_embed = embedding_table(lang + ".char_embed", chars, E, rng);
    b.word_embed = embedding_table(lang + ".word_embed", v.words.size(), E, rng);
    if (config_.track == Track::kOne) {
      b.lemma_embed = embedding_table(lang + ".lemma_embed", v.lemmas.size(), E, rng);
      b.msd_embed = embedding_table(lang + ".msd_embed", v.msd_features.size(), E, rng);
    }
    if (config_.context_mode == ContextMode::kFullLstm) {
      b.past_lstm = LstmWeights(lang + ".past_lstm", F, H, rng);
      b.future_lstm = LstmWeights(lang + ".future_lstm", F, H, rng);
    }
    b.encoder = LstmWeights(lang + ".encoder", E + C, H, rng);
    b.decoder = LstmWeights(lang + ".decoder", E + H, H, rng);
    b.attn_query = Parameter(lang + ".attn_query", glorot_uniform(A, H, rng));
    b.attn_key = Parameter(lang + ".attn_key", glorot_uniform(A, H, rng));
    b.attn_score = Parameter(lang + ".attn_score", uniform_tensor({A}, std::sqrt(3.0 / A), rng));
    b.out_weight = Parameter(lang + ".out_weight", glorot_uniform(chars, H, rng));
    b.out_bias = Parameter(lang + ".out_bias", Tensor({chars}));
    blocks_.emplace(lang, std::move(b));
  }
  if (config_.aux_msd) {
    const std::size_t comps = vocab_.msd_components.size();
    MsdDecoderBlock m;
    m.init_weight = Parameter("shared.msd.init_weight", glorot_uniform(H, C, rng));
    m.init_bias = Parameter("shared.msd.init_bias", Tensor({H}));
    m.embed = embedding_table("shared.msd.embed", comps, E, rng);
    m.lstm = LstmWeights("shared.msd.lstm", E, H, rng);
    m.out_weight = Parameter("shared.msd.out_weight", glorot_uniform(comps, H, rng));
    m.out_bias = Parameter("shared.msd.out_bias", Tensor({comps}));
    msd_ = std::move(m);
  }
}

void Model::check_language(const std::string& language) const {
  if (!covers(language)) throw std::out_of_range("model does not cover language '" + language + "'");
}

const LanguageBlock& Model::block(const std::string& language) const {
  check_language(language);
  return blocks_.find(language)->second;
}

LanguageBlock& Model::block(const std::string& language) {
  check_language(language);
  return blocks_.find(language)->second;
}

const MsdDecoderBlock& Model::msd_decoder() const {
  if (!msd_) throw std::logic_error("model has no auxiliary MSD decoder (aux_msd is off)");
  return *msd_;
}

const MsdDecoderBlock& Model::msd_decoder_for(const std::string& language) const {
  check_language(language);
  return msd_decoder();
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& [lang, b] : blocks_) {
    push(out, b.char_embed);
    push(out, b.word_embed);
    push(out, b.lemma_embed);
    push(out, b.msd_embed);
    push_lstm(out, b.past_lstm);
    push_lstm(out, b.future_lstm);
    push_lstm(out, b.encoder);
    push_lstm(out, b.decoder);
    push(out, b.attn_query);
    push(out, b.attn_key);
    push(out, b.attn_score);
    push(out, b.out_weight);
    push(out, b.out_bias);
  }
  if (msd_) {
    push(out, msd_->init_weight);
    push(out, msd_->init_bias);
    push(out, msd_->embed);
    push_lstm(out, msd_->lstm);
    push(out, msd_->out_weight);
    push(out, msd_->out_bias);
  }
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  auto mut = const_cast<Model*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

EncodedInstance Model::encode(const SentenceInstance& instance) const {
  check_language(instance.language);
  return encode_instance(instance, vocab_, config_.track);
}

Var Model::token_features(Tape& tape, const LanguageBlock& b, const EncodedToken* token,
                          const ForwardOptions& opts) const {
  // token == nullptr: padding beyond the sentence edge.
  int form = token ? token->form : Vocabulary::kPad;
  if (token && opts.rng && opts.word_drop > 0.0 && opts.rng->bernoulli(opts.word_drop)) {
    form = Vocabulary::kDrop;
  }
  Var form_vec = tape.embedding(b.word_embed, static_cast<std::size_t>(form));
  if (config_.track == Track::kTwo) return form_vec;

  Var lemma_vec = tape.embedding(b.lemma_embed, static_cast<std::size_t>(token ? token->lemma : Vocabulary::kPad));
  Var msd_vec;
  if (!token || token->msd.empty()) {
    msd_vec = tape.embedding(b.msd_embed, Vocabulary::kUnavailable);
  } else {
    std::vector<Var> parts;
    parts.reserve(token->msd.size());
    for (int c : token->msd) parts.push_back(tape.embedding(b.msd_embed, static_cast<std::size_t>(c)));
    msd_vec = mean_of(tape, parts);
  }
  const Var all[] = {form_vec, lemma_vec, msd_vec};
  return tape.concat(all);
}

Var Model::encode_context(Tape& tape, const EncodedInstance& inst, const ForwardOptions& opts) const {
  return config_.context_mode == ContextMode::kFullLstm ? encode_context_full(tape, inst, opts)
                                                       : encode_context_window2(tape, inst, opts);
}

Var Model::encode_context_full(Tape& tape, const EncodedInstance& inst, const ForwardOptions& opts) const {
  const LanguageBlock& b = block(inst.language);
  if (b.past_lstm.weight.value.empty()) throw std::logic_error("full-context encoder needs context_mode=full_lstm");
  // Features are computed left to right so word-drop draws follow token order.
  std::vector<Var> features(inst.tokens.size());
  for (std::size_t i = 0; i < inst.tokens.size(); ++i) {
    if (i != inst.target_index) features[i] = token_features(tape, b, &inst.tokens[i], opts);
  }
  LstmState past = lstm_zero_state(tape, b.past_lstm);
  for (std::size_t i = 0; i < inst.target_index; ++i) past = lstm_step(tape, b.past_lstm, features[i], past.h, past.c);
  LstmState future = lstm_zero_state(tape, b.future_lstm);
  for (std::size_t i = inst.tokens.size(); i-- > inst.target_index + 1;) {
    future = lstm_step(tape, b.future_lstm, features[i], future.h, future.c);
  }
  const Var halves[] = {apply_dropout(tape, past.h, opts.dropout, opts.rng),
                        apply_dropout(tape, future.h, opts.dropout, opts.rng)};
  return tape.concat(halves);
}

Var Model::encode_context_window2(Tape& tape, const EncodedInstance& inst, const ForwardOptions& opts) const {
  const LanguageBlock& b = block(inst.language);
  const std::size_t t = inst.target_index;
  const EncodedToken* prev = t > 0 ? &inst.tokens[t - 1] : nullptr;
  const EncodedToken* next = t + 1 < inst.tokens.size() ? &inst.tokens[t + 1] : nullptr;
  const Var halves[] = {token_features(tape, b, prev, opts), token_features(tape, b, next, opts)};
  return tape.concat(halves);
}

Model::LemmaEncoding Model::encode_lemma(Tape& tape, const std::string& language,
                                         std::span<const int> lemma_chars, Var context,
                                         const ForwardOptions& opts) const {
  const LanguageBlock& b = block(language);
  LemmaEncoding enc;
  enc.final = lstm_zero_state(tape, b.encoder);
  for (int c : lemma_chars) {
    const Var in[] = {tape.embedding(b.char_embed, static_cast<std::size_t>(c)), context};
    enc.final = lstm_step(tape, b.encoder, tape.concat(in), enc.final.h, enc.final.c);
    enc.states.push_back(apply_dropout(tape, enc.final.h, opts.dropout, opts.rng));
  }
  return enc;
}

Attention Model::attend(Tape& tape, const std::string& language, Var decoder_state,
                        std::span<const Var> encoder_states) const {
  if (encoder_states.empty()) throw DimensionError("attend: no encoder states");
  const LanguageBlock& b = block(language);
  Var query = tape.matmul(tape.parameter(b.attn_query), decoder_state);
  Var key_weight = tape.parameter(b.attn_key);
  Var score_weight = tape.parameter(b.attn_score);
  std::vector<Var> scores;
  scores.reserve(encoder_states.size());
  for (Var s : encoder_states) {
    Var hidden = tape.tanh(tape.add(query, tape.matmul(key_weight, s)));
    scores.push_back(tape.dot(score_weight, hidden));
  }
  Var weights = tape.softmax(tape.concat(scores));
  return {tape.weighted_sum(weights, encoder_states), weights};
}

Decoding Model::decode_form(Tape& tape, const std::string& language, const LemmaEncoding& encoding,
                            std::optional<std::span<const int>> gold, std::size_t max_len,
                            const ForwardOptions& opts) const {
  const LanguageBlock& b = block(language);
  Decoding out;
  LstmState state = encoding.final;
  Var out_weight = tape.parameter(b.out_weight);
  Var out_bias = tape.parameter(b.out_bias);
  int prev = Vocabulary::kBos;
  const std::size_t steps = gold ? gold->size() : max_len;
  for (std::size_t t = 0; t < steps; ++t) {
    Attention att = attend(tape, language, state.h, encoding.states);
    const Var in[] = {tape.embedding(b.char_embed, static_cast<std::size_t>(prev)), att.context};
    state = lstm_step(tape, b.decoder, tape.concat(in), state.h, state.c);
    Var hidden = apply_dropout(tape, state.h, opts.dropout, opts.rng);
    Var logits = tape.add(tape.matmul(out_weight, hidden), out_bias);
    out.logits.push_back(logits);
    out.attention.push_back(att.weights);
    if (gold) {
      prev = (*gold)[t];
      continue;
    }
    const int next = argmax_allowed(tape.value(logits).data(), true);
    if (next == Vocabulary::kEos) return out;
    out.symbols.push_back(next);
    prev = next;
  }
  out.truncated = !gold;
  return out;
}

Decoding Model::decode_msd(Tape& tape, Var context, std::optional<std::span<const int>> gold,
                           std::size_t max_len, const ForwardOptions& opts) const {
  const MsdDecoderBlock& m = msd_decoder();
  Decoding out;
  LstmState state;
  state.h = tape.tanh(tape.add(tape.matmul(tape.parameter(m.init_weight), context), tape.parameter(m.init_bias)));
  state.c = tape.constant(Tensor({config_.lstm_dim}));
  Var out_weight = tape.parameter(m.out_weight);
  Var out_bias = tape.parameter(m.out_bias);
  int prev = Vocabulary::kBos;
  const std::size_t steps = gold ? gold->size() : max_len;
  for (std::size_t t = 0; t < steps; ++t) {
    state = lstm_step(tape, m.lstm, tape.embedding(m.embed, static_cast<std::size_t>(prev)), state.h, state.c);
    Var hidden = apply_dropout(tape, state.h, opts.dropout, opts.rng);
    Var logits = tape.add(tape.matmul(out_weight, hidden), out_bias);
    out.logits.push_back(logits);
    if (gold) {
      prev = (*gold)[t];
      continue;
    }
    const int next = argmax_allowed(tape.value(logits).data(), t > 0);
    if (next == Vocabulary::kEos) return out;
    out.symbols.push_back(next);
    prev = next;
  }
  out.truncated = !gold;
  return out;
}

LossParts Model::compute_loss(Tape& tape, const EncodedInstance& inst, const ForwardOptions& opts) const {
  if (inst.form_chars.size() < 2) throw std::invalid_argument("compute_loss: instance has no gold form");
  if (config_.aux_msd && inst.msd_components.size() < 2) {
    throw std::invalid_argument("compute_loss: auxiliary loss needs a gold MSD");
  }
  Var context = encode_context(tape, inst, opts);
  LemmaEncoding enc = encode_lemma(tape, inst.language, inst.lemma_chars, context, opts);
  std::span<const int> gold_form(inst.form_chars);
  Decoding form = decode_form(tape, inst.language, enc, gold_form.subspan(1), 0, opts);

  LossParts parts;
  parts.main = tape.cross_entropy(form.logits[0], static_cast<std::size_t>(gold_form[1]));
  for (std::size_t t = 1; t < form.logits.size(); ++t) {
    parts.main = tape.add(parts.main, tape.cross_entropy(form.logits[t], static_cast<std::size_t>(gold_form[t + 1])));
  }
  parts.total = parts.main;
  if (config_.aux_msd) {
    std::span<const int> gold_msd(inst.msd_components);
    Decoding msd = decode_msd(tape, context, gold_msd.subspan(1), 0, opts);
    parts.aux = tape.cross_entropy(msd.logits[0], static_cast<std::size_t>(gold_msd[1]));
    for (std::size_t t = 1; t < msd.logits.size(); ++t) {
      parts.aux = tape.add(parts.aux, tape.cross_entropy(msd.logits[t], static_cast<std::size_t>(gold_msd[t + 1])));
    }
    parts.total = tape.add(parts.main, parts.aux);
  }
  return parts;
}

std::size_t Model::max_form_length(const EncodedInstance& inst) {
  const std::size_t lemma_len = inst.lemma_chars.size() >= 2 ? inst.lemma_chars.size() - 2 : 0;
  return 2 * lemma_len + 10;
}

FormPrediction Model::predict(const EncodedInstance& inst) const {
  Tape tape;
  const ForwardOptions infer;
  Var context = encode_context(tape, inst, infer);
  LemmaEncoding enc = encode_lemma(tape, inst.language, inst.lemma_chars, context, infer);
  Decoding d = decode_form(tape, inst.language, enc, std::nullopt, max_form_length(inst), infer);
  return {decode_chars(d.symbols, vocab_.at(inst.language).chars), d.truncated};
}

std::string Model::predict_form(const SentenceInstance& instance) const {
  return predict(encode(instance)).form;
}

MsdTag Model::predict_msd(const EncodedInstance& inst) const {
  Tape tape;
  const ForwardOptions infer;
  Var context = encode_context(tape, inst, infer);
  Decoding d = decode_msd(tape, context, std::nullopt, kMaxMsdLength, infer);
  MsdTag tag;
  for (int s : d.symbols) tag.components.push_back(vocab_.msd_components.symbol(s));
  return tag;
}

Model Model::restricted_to(const std::string& language) const {
  check_language(language);
  Model out = *this;
  out.config_.languages = {language};
  std::erase_if(out.blocks_, [&](const auto& kv) { return kv.first != language; });
  std::erase_if(out.vocab_.languages, [&](const auto& kv) { return kv.first != language; });
  return out;
}

}  // namespace mrfl
