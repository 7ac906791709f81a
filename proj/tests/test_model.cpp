#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mrfl/errors.hpp"
#include "mrfl/grad_check.hpp"
#include "mrfl/model.hpp"
#include "mrfl/vocabulary.hpp"
#include "test_util.hpp"

using namespace mrfl;

namespace {

// Small alphabet so every vocabulary stays at 12 entries or fewer.
std::vector<SentenceInstance> tiny_corpus(const std::string& lang = "xx") {
  const char* text =
      "ka\tka\tPRO;PL\n_\tab\t_\nla\tla\tDET\n\n"
      "la\tla\tDET\nmo\tmo\tPRO;SG\n_\tba\t_\n\n"
      "_\tab\t_\nka\tka\tPRO;PL\n";
  const char* answers = "aben\tV;PL\nbat\tV;SG\nabt\tV;SG\n";
  std::istringstream in(text), ans(answers);
  auto out = parse_sentences(in, Track::kOne, lang);
  attach_answers(out, parse_answers(ans));
  return out;
}

Model tiny_model(ContextMode mode, bool aux, Track track = Track::kOne, std::vector<std::string> langs = {"xx"},
                 std::size_t dim = 4) {
  std::vector<SentenceInstance> all;
  for (const auto& l : langs) {
    auto c = tiny_corpus(l);
    all.insert(all.end(), c.begin(), c.end());
  }
  ModelConfig cfg = test::tiny_config(langs, dim);
  cfg.context_mode = mode;
  cfg.aux_msd = aux;
  cfg.track = track;
  return Model(cfg, build_vocabularies(all, track), 17);
}

std::vector<double> vals(const Tape& t, Var v) {
  auto d = t.value(v).data();
  return {d.begin(), d.end()};
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = test::tiny_config({"en"});
  c.track = Track::kTwo;
  c.aux_msd = true;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.aux_msd = false;
  CHECK_NOTHROW(c.validate());
  c.languages = {"en", "en"};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.languages = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  ModelConfig d;
  CHECK(d.embed_dim == 100);
  CHECK(d.lstm_dim == 100);
  CHECK(d.attn_dim == 100);
}

TEST_CASE("full-context encoder") {
  Model m = tiny_model(ContextMode::kFullLstm, false);
  const std::size_t H = m.config().lstm_dim;
  auto corpus = tiny_corpus();

  // Target at sentence start: the past half is the zero vector.
  Tape t;
  Var ctx = m.encode_context(t, m.encode(corpus[2]), {});
  auto v = vals(t, ctx);
  REQUIRE(v.size() == 2 * H);
  for (std::size_t i = 0; i < H; ++i) CHECK(v[i] == 0.0);
  bool future_nonzero = false;
  for (std::size_t i = H; i < 2 * H; ++i) future_nonzero |= v[i] != 0.0;
  CHECK(future_nonzero);

  // Fixed width whatever the sentence length.
  Rng rng(3);
  ModelConfig big = test::tiny_config({"fz"}, 5);
  auto fz = test::fuzz_corpus(30, rng, Track::kOne);
  Model fm(big, build_vocabularies(fz, Track::kOne), 1);
  for (const auto& s : fz) {
    Tape u;
    CHECK(u.shape(fm.encode_context(u, fm.encode(s), {})) == Shape{10});
  }

  // Order sensitivity of the backward LSTM.
  SentenceInstance s = corpus[0];
  s.tokens.push_back(Token{"mo", "mo", split_msd("PRO;SG")});
  Tape a, b;
  auto before = vals(a, m.encode_context(a, m.encode(s), {}));
  std::swap(s.tokens[2], s.tokens[3]);
  auto after = vals(b, m.encode_context(b, m.encode(s), {}));
  for (std::size_t i = 0; i < H; ++i) CHECK(before[i] == after[i]);
  bool changed = false;
  for (std::size_t i = H; i < 2 * H; ++i) changed |= before[i] != after[i];
  CHECK(changed);
}

TEST_CASE("adjacent-window context") {
  Model m = tiny_model(ContextMode::kWindow2, false, Track::kTwo);
  const auto& b = m.block("xx");
  const std::size_t E = m.config().embed_dim;
  auto row = [&](int idx) {
    std::vector<double> r;
    for (std::size_t j = 0; j < E; ++j) r.push_back(b.word_embed.value.at(idx, j));
    return r;
  };
  SentenceInstance s = tiny_corpus()[1];  // la mo _
  s.tokens.push_back(Token{"ka", std::nullopt, std::nullopt});
  s.tokens.push_back(Token{"la", std::nullopt, std::nullopt});
  const auto& words = m.vocabularies().at("xx").words;
  Tape t;
  auto v = vals(t, m.encode_context(t, m.encode(s), {}));
  auto expect = row(words.index("mo"));
  auto next = row(words.index("ka"));
  expect.insert(expect.end(), next.begin(), next.end());
  CHECK(v == expect);

  // Tokens two or more positions away have no effect.
  SentenceInstance far = s;
  far.tokens[0].form = "ka";
  far.tokens[4].form = "mo";
  Tape u;
  CHECK(vals(u, m.encode_context(u, m.encode(far), {})) == v);

  // Target alone: both halves are padding.
  SentenceInstance alone;
  alone.language = "xx";
  alone.tokens = {Token{std::nullopt, "ab", std::nullopt}};
  Tape w;
  auto pad = row(Vocabulary::kPad);
  auto both = pad;
  both.insert(both.end(), pad.begin(), pad.end());
  CHECK(vals(w, m.encode_context(w, m.encode(alone), {})) == both);
}

TEST_CASE("lemma encoder") {
  Model m = tiny_model(ContextMode::kFullLstm, false);
  auto inst = m.encode(tiny_corpus()[0]);
  Tape t;
  Var ctx = m.encode_context(t, inst, {});
  auto enc = m.encode_lemma(t, "xx", inst.lemma_chars, ctx, {});
  CHECK(enc.states.size() == inst.lemma_chars.size());

  // Another context changes every state.
  Var other = t.scale(ctx, -3.0);
  auto enc2 = m.encode_lemma(t, "xx", inst.lemma_chars, other, {});
  for (std::size_t i = 0; i < enc.states.size(); ++i) CHECK(vals(t, enc.states[i]) != vals(t, enc2.states[i]));

  Model z = tiny_model(ContextMode::kFullLstm, false);
  for (Parameter* p : z.parameters()) p->value.fill(0.0);
  Tape u;
  auto zenc = z.encode_lemma(u, "xx", inst.lemma_chars, z.encode_context(u, inst, {}), {});
  for (Var s : zenc.states) {
    for (double x : u.value(s).data()) CHECK(x == 0.0);
  }
}

TEST_CASE("attention") {
  Model m = tiny_model(ContextMode::kFullLstm, false);
  const std::size_t H = m.config().lstm_dim;
  Rng rng(5);
  Tape t;
  Var d = t.constant(uniform_tensor({H}, 1.0, rng));
  Var s0 = t.constant(uniform_tensor({H}, 1.0, rng));
  Var one[] = {s0};
  Attention a = m.attend(t, "xx", d, one);
  CHECK(vals(t, a.context) == vals(t, s0));
  CHECK(vals(t, a.weights) == std::vector<double>{1.0});

  std::vector<Var> states;
  for (int i = 0; i < 6; ++i) states.push_back(t.constant(uniform_tensor({H}, 1.0, rng)));
  for (int trial = 0; trial < 20; ++trial) {
    Var q = t.constant(uniform_tensor({H}, 2.0, rng));
    auto w = vals(t, m.attend(t, "xx", q, states).weights);
    double sum = 0.0;
    for (double x : w) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  Model flat = tiny_model(ContextMode::kFullLstm, false);
  flat.block("xx").attn_score.value.fill(0.0);
  Attention mean = flat.attend(t, "xx", d, states);
  for (std::size_t j = 0; j < H; ++j) {
    double avg = 0.0;
    for (Var s : states) avg += t.value(s)[j];
    CHECK(t.value(mean.context)[j] == doctest::Approx(avg / 6.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(m.attend(t, "xx", d, {}), DimensionError);
}

TEST_CASE("decoders") {
  Model m = tiny_model(ContextMode::kFullLstm, true);
  auto inst = m.encode(tiny_corpus()[0]);
  Tape t;
  Var ctx = m.encode_context(t, inst, {});
  auto enc = m.encode_lemma(t, "xx", inst.lemma_chars, ctx, {});
  std::span<const int> gold(inst.form_chars);
  Decoding forced = m.decode_form(t, "xx", enc, gold.subspan(1), 0, {});
  CHECK(forced.logits.size() == inst.form_chars.size() - 1);

  CHECK(m.predict(inst).form == m.predict(inst).form);
  Decoding g = m.decode_form(t, "xx", enc, std::nullopt, 3, {});
  CHECK(g.symbols.size() <= 3);

  std::span<const int> gm(inst.msd_components);
  Decoding mf = m.decode_msd(t, ctx, gm.subspan(1), 0, {});
  CHECK(mf.logits.size() == inst.msd_components.size() - 1);
  for (int trial = 0; trial < 3; ++trial) {
    Decoding mg = m.decode_msd(t, ctx, std::nullopt, Model::kMaxMsdLength, {});
    CHECK(mg.symbols.size() >= 1);
    CHECK(mg.symbols.size() <= Model::kMaxMsdLength);
  }

  // All-UNK lemma still terminates within the length bound.
  SentenceInstance odd = tiny_corpus()[0];
  odd.tokens[odd.target_index].lemma = "ЖЖЖ";
  auto oe = m.encode(odd);
  auto p = m.predict(oe);
  CHECK(utf8_chars(p.form).size() <= Model::max_form_length(oe));
}

TEST_CASE("the auxiliary decoder is one object for every language") {
  Model m = tiny_model(ContextMode::kFullLstm, true, Track::kOne, {"sv", "en"});
  CHECK(&m.msd_decoder_for("en") == &m.msd_decoder_for("sv"));
  CHECK(&m.msd_decoder_for("en") == &m.msd_decoder());
  CHECK(m.config().languages == std::vector<std::string>{"en", "sv"});
  Model r = m.restricted_to("sv");
  CHECK(r.covers("sv"));
  CHECK_FALSE(r.covers("en"));
  CHECK(&r.msd_decoder() != &m.msd_decoder());
  CHECK(r.msd_decoder().lstm.weight.value == m.msd_decoder().lstm.weight.value);
  CHECK(r.block("sv").encoder.weight.value == m.block("sv").encoder.weight.value);
}

TEST_CASE("loss composition") {
  for (ContextMode mode : {ContextMode::kFullLstm, ContextMode::kWindow2}) {
    Model plain = tiny_model(mode, false);
    for (const auto& s : tiny_corpus()) {
      Tape t;
      LossParts p = plain.compute_loss(t, plain.encode(s), {});
      CHECK_FALSE(p.aux.valid());
      CHECK(t.scalar(p.total) == t.scalar(p.main));
    }
    Model aux = tiny_model(mode, true);
    for (const auto& s : tiny_corpus()) {
      Tape t;
      LossParts p = aux.compute_loss(t, aux.encode(s), {});
      REQUIRE(p.aux.valid());
      CHECK(t.scalar(p.aux) > 0.0);
      CHECK(std::abs(t.scalar(p.total) - (t.scalar(p.main) + t.scalar(p.aux))) <= 1e-12);
    }
  }
  Model m = tiny_model(ContextMode::kFullLstm, false);
  SentenceInstance nogold = tiny_corpus()[0];
  nogold.gold_form.reset();
  Tape t;
  CHECK_THROWS(m.compute_loss(t, m.encode(nogold), {}));
}

TEST_CASE("full-model gradient check") {
  struct Case {
    ContextMode mode;
    bool aux;
    Track track;
  };
  for (Case c : {Case{ContextMode::kFullLstm, true, Track::kOne}, Case{ContextMode::kWindow2, false, Track::kOne},
                 Case{ContextMode::kFullLstm, false, Track::kTwo}}) {
    Model m = tiny_model(c.mode, c.aux, c.track);
    CHECK(m.vocabularies().at("xx").chars.size() <= 12);
    std::vector<EncodedInstance> data;
    for (const auto& s : tiny_corpus()) data.push_back(m.encode(s));
    auto loss = [&](Tape& t) {
      Var total = m.compute_loss(t, data[0], {}).total;
      for (std::size_t i = 1; i < data.size(); ++i) total = t.add(total, m.compute_loss(t, data[i], {}).total);
      return total;
    };
    auto r = grad_check(loss, m.parameters(), 1e-4, Stencil::kFivePoint);
    INFO("worst " << r.worst_parameter << "[" << r.worst_index << "] analytic " << r.analytic << " numeric "
                  << r.numeric);
    CHECK(r.coordinates_checked == m.parameter_count());
    CHECK(r.max_relative_error < 1e-5);
  }
}

TEST_CASE("parameters are named and ordered deterministically") {
  Model a = tiny_model(ContextMode::kFullLstm, true, Track::kOne, {"sv", "en"});
  Model b = tiny_model(ContextMode::kFullLstm, true, Track::kOne, {"en", "sv"});
  auto pa = a.parameters();
  auto pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->name == pb[i]->name);
    CHECK(pa[i]->value == pb[i]->value);
  }
  CHECK(pa.front()->name.rfind("en.", 0) == 0);
  CHECK(pa.back()->name.rfind("shared.", 0) == 0);
}
