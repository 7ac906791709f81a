#include <cmath>

#include "doctest.h"
#include "mrfl/errors.hpp"
#include "mrfl/evaluation.hpp"
#include "mrfl/training.hpp"
#include "mrfl/vocabulary.hpp"
#include "test_util.hpp"

using namespace mrfl;

namespace {

Model make_model(const std::vector<SentenceInstance>& data, std::vector<std::string> langs, std::size_t dim = 4,
                 bool aux = false, std::uint64_t seed = 3) {
  ModelConfig cfg = test::tiny_config(std::move(langs), dim);
  cfg.aux_msd = aux;
  return Model(cfg, build_vocabularies(data, Track::kOne), seed);
}

LanguageData split(std::vector<SentenceInstance> d, std::uint64_t seed = 1) {
  auto [t, v] = split_train_validation(std::move(d), 0.9, seed);
  return {std::move(t), std::move(v)};
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.multilingual_epochs = epochs;
  return c;
}

std::vector<Tensor> snapshot(const Model& m) {
  std::vector<Tensor> out;
  for (const Parameter* p : m.parameters()) out.push_back(p->value);
  return out;
}

}  // namespace

TEST_CASE("defaults follow the paper") {
  TrainConfig c;
  CHECK(c.epochs == 50);
  CHECK(c.early_stop_tolerance == 5);
  CHECK(c.lr == 0.001);
  CHECK(c.finetune_lr == 0.0001);
  CHECK(c.finetune_epochs == 5);
  CHECK(c.dropout == 0.3);
  CHECK(c.word_drop == 0.1);
  CHECK_FALSE(c.subsample_rate.has_value());
  TrainConfig b = TrainConfig::baseline_replication();
  CHECK(b.epochs == 20);
  CHECK(*b.subsample_rate == 0.3);
  c.finetune_lr = 0.0002;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("early stopping arithmetic") {
  EarlyStopping es(5);
  const double losses[] = {5, 4, 4.5, 4.6, 4.7, 4.8, 4.9};
  std::size_t stopped_after = 0;
  for (std::size_t e = 0; e < 7; ++e) {
    es.observe(losses[e]);
    if (es.should_stop()) {
      stopped_after = e + 1;
      break;
    }
  }
  CHECK(stopped_after == 7);
  CHECK(es.best_epoch() == 2);
  CHECK(es.best_loss() == 4.0);

  EarlyStopping improving(5);
  for (int e = 0; e < 50; ++e) {
    CHECK(improving.observe(100.0 - e));
    CHECK_FALSE(improving.should_stop());
  }
  // Equal is not an improvement.
  EarlyStopping flat(2);
  flat.observe(1.0);
  CHECK_FALSE(flat.observe(1.0));
  CHECK_FALSE(flat.should_stop());
  flat.observe(1.0);
  CHECK(flat.should_stop());
}

TEST_CASE("monolingual training keeps the best epoch and stops after the tolerance") {
  auto data = test::synth(60, 4, "aa");
  Model m = make_model(data, {"aa"}, 6);
  TrainConfig cfg = quick(40);
  cfg.early_stop_tolerance = 2;
  cfg.lr = 0.05;  // noisy on purpose so validation loss stalls early
  cfg.finetune_lr = 0.005;
  std::vector<Tensor> best;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    if (r.improved) best = snapshot(m);
    return true;
  };
  auto result = train_monolingual(m, split(data), cfg, hooks);
  REQUIRE(result.stopped_early);
  CHECK(result.log.size() == result.best_epoch + 2);
  for (std::size_t i = result.best_epoch; i < result.log.size(); ++i) CHECK_FALSE(result.log[i].improved);
  CHECK(result.log[result.best_epoch - 1].improved);
  CHECK(snapshot(m) == best);
  CHECK_THROWS(validation_loss(m, std::vector<EncodedInstance>{}));
}

TEST_CASE("baseline schedule: 20 epochs of 30% subsamples") {
  Rng rng(1);
  const auto a = draw_subsample(37, 0.3, rng);
  const auto b = draw_subsample(37, 0.3, rng);
  CHECK(a.size() == 11);
  CHECK(a != b);
  std::set<std::size_t> distinct(a.begin(), a.end());
  CHECK(distinct.size() == a.size());
  CHECK(draw_subsample(45, 0.3, rng).size() == 14);  // round(13.5)

  auto data = test::synth(52, 8, "aa");  // 46 train after the split
  Model m = make_model(data, {"aa"});
  auto ld = split(data);
  REQUIRE(ld.train.size() == 46);
  const auto per_epoch = static_cast<std::size_t>(std::lround(0.3 * 46));
  auto result = train_baseline_schedule(m, ld, TrainConfig::baseline_replication());
  CHECK(result.log.size() == 20);
  for (const auto& r : result.log) {
    CHECK(r.instances == per_epoch);
    CHECK(r.phase == "baseline");
  }
  CHECK(result.instances_processed == 20 * per_epoch);
  CHECK_FALSE(result.stopped_early);
}

TEST_CASE("language groups") {
  auto g = make_language_groups({"en", "sv"}, 3, 1);
  REQUIRE(g.size() == 3);
  for (const auto& x : g) CHECK(x.members == std::vector<std::string>{"en", "sv"});
  CHECK(g[0].name() == "en+sv");

  const std::vector<std::string> seven{"de", "en", "es", "fi", "fr", "ru", "sv"};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto groups = make_language_groups(seven, 50, seed);
    CHECK(groups.size() == 50);
    std::map<std::string, int> seen;
    for (const auto& x : groups) {
      CHECK((x.members.size() == 2 || x.members.size() == 3));
      CHECK(std::set<std::string>(x.members.begin(), x.members.end()).size() == x.members.size());
      CHECK(std::is_sorted(x.members.begin(), x.members.end()));
      for (const auto& l : x.members) ++seen[l];
    }
    for (const auto& l : seven) CHECK(seen[l] >= 1);
  }
  // Coverage even when groups are scarce.
  auto few = make_language_groups(seven, 3, 5);
  std::set<std::string> covered;
  for (const auto& x : few) covered.insert(x.members.begin(), x.members.end());
  CHECK(covered.size() == 7);
  CHECK_THROWS(make_language_groups({"en"}, 3, 1));
  CHECK(make_language_groups(seven, 50, 9) == make_language_groups(seven, 50, 9));
}

TEST_CASE("multilingual minibatches alternate languages evenly") {
  auto en = test::synth(56, 1, "en", 1, 0);
  auto sv = test::synth(56, 2, "sv", 1, 1);
  std::vector<SentenceInstance> all = en;
  all.insert(all.end(), sv.begin(), sv.end());
  Model m = make_model(all, {"en", "sv"}, 3, true);
  std::map<std::string, LanguageData> data{{"en", split(en)}, {"sv", split(sv)}};
  TrainConfig cfg = quick(100);  // 100 minibatches per epoch
  cfg.early_stop_tolerance = 0;
  std::map<std::string, std::size_t> counts;
  auto result = train_multilingual(m, data, cfg, {.on_step = [&](const StepRecord& s) { ++counts[s.language]; }});
  const std::size_t total = counts["en"] + counts["sv"];
  CHECK(total == 10000);
  const double share = static_cast<double>(counts["en"]) / static_cast<double>(total);
  CHECK(share >= 0.47);
  CHECK(share <= 0.53);
  std::size_t logged = 0;
  for (const auto& r : result.log) {
    for (const auto& [_, n] : r.minibatches_by_language) logged += n;
    CHECK(r.validation_by_language.size() == 2);
    CHECK(r.validation_loss ==
          doctest::Approx((r.validation_by_language.at("en") + r.validation_by_language.at("sv")) / 2));
  }
  CHECK(logged == 10000);
}

TEST_CASE("the shared decoder moves after a minibatch of either language") {
  auto en = test::synth(20, 1, "en", 1, 0);
  auto sv = test::synth(20, 2, "sv", 1, 1);
  std::vector<SentenceInstance> all = en;
  all.insert(all.end(), sv.begin(), sv.end());
  Model m = make_model(all, {"en", "sv"}, 4, true);
  std::map<std::string, LanguageData> data{{"en", split(en)}, {"sv", split(sv)}};
  Tensor last = m.msd_decoder().out_weight.value;
  std::set<std::string> moved_by;
  TrainConfig cfg = quick(1);
  auto r = train_multilingual(m, data, cfg, {.on_step = [&](const StepRecord& s) {
                                if (!(m.msd_decoder().out_weight.value == last)) moved_by.insert(s.language);
                                last = m.msd_decoder().out_weight.value;
                              }});
  CHECK(moved_by == std::set<std::string>{"en", "sv"});
}

TEST_CASE("a three-language model answers for exactly its members") {
  std::vector<SentenceInstance> all;
  for (const char* l : {"aa", "bb", "cc"}) {
    auto c = test::synth(12, 1, l);
    all.insert(all.end(), c.begin(), c.end());
  }
  Model m = make_model(all, {"cc", "aa", "bb"});
  for (const char* l : {"aa", "bb", "cc"}) CHECK(m.covers(l));
  CHECK_FALSE(m.covers("dd"));
  SentenceInstance foreign = test::synth(1, 1, "dd")[0];
  CHECK_THROWS(m.predict_form(foreign));
}

TEST_CASE("finetuning") {
  auto en = test::synth(30, 1, "en", 1, 0);
  auto sv = test::synth(30, 2, "sv", 1, 1);
  std::vector<SentenceInstance> all = en;
  all.insert(all.end(), sv.begin(), sv.end());
  Model base = make_model(all, {"en", "sv"}, 4, true);
  const auto before = snapshot(base);
  TrainConfig cfg;
  std::vector<double> lrs;
  TrainHooks hooks{.on_step = [&](const StepRecord& s) { lrs.push_back(s.lr); }, .on_epoch = {}};
  auto sv_first = finetune(base, "sv", split(sv), cfg);
  auto en_ft = finetune(base, "en", split(en), cfg, hooks);
  auto sv_second = finetune(base, "sv", split(sv), cfg);

  CHECK(en_ft.result.log.size() == 5);
  REQUIRE_FALSE(lrs.empty());
  for (double lr : lrs) CHECK(lr == 0.0001);
  for (const auto& r : en_ft.result.log) {
    CHECK(r.lr == 0.0001);
    CHECK(r.phase == "finetune");
  }
  CHECK(en_ft.model.covers("en"));
  CHECK_FALSE(en_ft.model.covers("sv"));
  CHECK(snapshot(base) == before);
  CHECK(snapshot(sv_first.model) == snapshot(sv_second.model));
  CHECK_THROWS(finetune(base, "de", split(en), cfg));
  CHECK_THROWS(finetune(base, "en", split(sv), cfg));
}

TEST_CASE("a small model overfits 50 sentences") {
  auto data = test::synth(50, 12, "aa", 1, 0, 10);
  Model m = make_model(data, {"aa"}, 24);
  TrainConfig cfg = quick(150);
  cfg.dropout = 0.0;
  cfg.word_drop = 0.0;
  cfg.early_stop_tolerance = 0;
  cfg.lr = 0.005;
  cfg.finetune_lr = 0.0005;
  double acc = 0.0;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    if (r.epoch % 5 != 0) return true;
    acc = dev_accuracy(m, data);
    return acc < 100.0;
  };
  LanguageData ld{data, data};
  train_monolingual(m, ld, cfg, hooks);
  CHECK(dev_accuracy(m, data) >= 98.0);
}

TEST_CASE("epoch records serialise as one JSON object per line") {
  EpochRecord r;
  r.phase = "finetune";
  r.epoch = 3;
  r.lr = 0.0001;
  r.validation_by_language = {{"en", 1.5}};
  const std::string line = to_json_line(r);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(line.find("\"lr\":0.0001") != std::string::npos);
  CHECK(line.find("\"phase\":\"finetune\"") != std::string::npos);
}
