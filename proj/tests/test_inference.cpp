#include <algorithm>
#include <map>

#include "doctest.h"
#include "mrfl/evaluation.hpp"
#include "mrfl/inference.hpp"
#include "test_util.hpp"

using namespace mrfl;

namespace {

SentenceInstance go_went() {
  SentenceInstance s;
  s.language = "en";
  s.tokens = {Token{"yesterday", "yesterday", split_msd("ADV")}, Token{"I", "I", split_msd("PRO;NOM;SG;1")},
              Token{std::nullopt, "go", std::nullopt}, Token{"home", "home", split_msd("N;SG")}};
  s.target_index = 2;
  s.gold_form = "went";
  s.gold_msd = split_msd("V;PST");
  return s;
}

}  // namespace

TEST_CASE("an overfit model reproduces its training pair") {
  std::vector<SentenceInstance> one{go_went()};
  Model m = test::overfit(one, {"en"}, 8, false, 400);
  CHECK(predict_form(m, one[0]) == "went");
  CHECK(predict_form(m, one[0]) == predict_form(m, one[0]));
}

TEST_CASE("top-k selection") {
  std::vector<RankedModel> c;
  for (int i = 0; i < 6; ++i) c.push_back({nullptr, static_cast<std::uint64_t>(100 + i), 10.0 * (i + 1)});
  auto spec = select_top_k(c);
  REQUIRE(spec.members.size() == 5);
  const std::vector<double> want{60, 50, 40, 30, 20};
  for (std::size_t i = 0; i < 5; ++i) CHECK(spec.members[i].dev_accuracy == want[i]);

  std::vector<RankedModel> tied;
  for (std::uint64_t s : {9u, 3u, 7u, 1u, 5u, 2u}) tied.push_back({nullptr, s, 42.0});
  auto t = select_top_k(tied);
  std::vector<std::uint64_t> seeds;
  for (const auto& m : t.members) seeds.push_back(m.seed);
  CHECK(seeds == std::vector<std::uint64_t>{1, 2, 3, 5, 7});

  std::vector<RankedModel> mixed = c;
  mixed.push_back({nullptr, 50, 40.0});
  Rng rng(4);
  auto ref = select_top_k(mixed);
  for (int trial = 0; trial < 50; ++trial) {
    rng.shuffle(std::span<RankedModel>(mixed));
    auto again = select_top_k(mixed);
    for (std::size_t i = 0; i < 5; ++i) CHECK(again.members[i].seed == ref.members[i].seed);
  }
  CHECK_THROWS(select_top_k(std::span<const RankedModel>(c).first(4)));
  tied.push_back({nullptr, 9, 1.0});
  CHECK_THROWS(select_top_k(tied));
}

TEST_CASE("majority vote examples") {
  auto vote = [](std::vector<std::string> v) { return majority_vote(v); };
  CHECK(vote({"made", "made", "make", "mode", "made"}) == "made");
  CHECK(vote({"b", "a", "a", "b", "c"}) == "b");
  CHECK(vote({"x", "x", "x", "x", "x"}) == "x");
  CHECK_THROWS(vote({}));
}

// Every ordered ballot of 5 votes over a 3-symbol alphabet: 243 cases, which
// covers every multiset in every rank order.
TEST_CASE("majority vote over all ballots") {
  const std::string alphabet[] = {"a", "b", "c"};
  std::size_t ballots = 0;
  for (int code = 0; code < 243; ++code) {
    std::vector<std::string> votes;
    int x = code;
    for (int i = 0; i < 5; ++i, x /= 3) votes.push_back(alphabet[x % 3]);
    std::map<std::string, int> count;
    for (const auto& v : votes) ++count[v];
    int best = 0;
    for (const auto& [_, n] : count) best = std::max(best, n);
    // Independent tie-break: the first voter (in rank order) whose choice has
    // the top count.
    std::string expect;
    for (const auto& v : votes) {
      if (count[v] == best) {
        expect = v;
        break;
      }
    }
    const std::string got = majority_vote(votes);
    CHECK(count[got] == best);
    CHECK(got == expect);
    if (best >= 3) CHECK(count[got] >= 3);
    ++ballots;
  }
  CHECK(ballots == 243);
}

TEST_CASE("ensemble is right whenever three of five members are") {
  auto data = test::synth(12, 21, "aa", 1, 0, 6);
  Model good = test::overfit(data, {"aa"}, 16);
  REQUIRE(dev_accuracy(good, data) == 100.0);
  ModelConfig cfg = test::tiny_config({"aa"}, 16);
  Model noise_a(cfg, good.vocabularies(), 1001), noise_b(cfg, good.vocabularies(), 1002);
  REQUIRE(dev_accuracy(noise_a, data) < 50.0);

  // Each item gets its own placement of the two wrong members, including
  // rank 1 and a wrong pair that agrees with itself.
  std::vector<std::string> predictions, golds;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t w1 = i % 5, w2 = (i + 1 + i / 5) % 5;
    const Model* wrong2 = i % 2 ? &noise_a : &noise_b;
    EnsembleSpec spec;
    for (std::size_t r = 0; r < 5; ++r) {
      const Model* m = r == w1 ? &noise_a : r == w2 ? wrong2 : &good;
      spec.members.push_back({m, r, 0.0});
    }
    predictions.push_back(ensemble_predict(spec, data[i]));
    golds.push_back(*data[i].gold_form);
  }
  CHECK(accuracy(predictions, golds) == 100.0);

  EnsembleSpec four;
  for (int r = 0; r < 4; ++r) four.members.push_back({&good, static_cast<std::uint64_t>(r), 0.0});
  CHECK_THROWS(ensemble_predict(four, data[0]));
}

TEST_CASE("accuracy and formatting") {
  std::vector<std::string> a{"made", "plan"}, b{"made", "plans"};
  CHECK(accuracy(a, b) == 50.0);
  CHECK(accuracy(a, a) == 100.0);
  CHECK(format_percentage(49.87) == "49.87");
  CHECK(format_percentage(66.59) == "66.59");
  CHECK(format_percentage(65.35) == "65.35");
  CHECK(format_percentage(100.0) == "100.00");
  CHECK(format_percentage(200.0 / 3.0) == "66.67");
  CHECK_THROWS(accuracy(a, std::vector<std::string>{"x"}));
  CHECK_THROWS(accuracy(std::vector<std::string>{}, std::vector<std::string>{}));
  std::vector<std::string> case_sensitive{"Made", "plan"};
  CHECK(accuracy(case_sensitive, a) == 50.0);
}

TEST_CASE("reposing and content words") {
  CHECK(is_content_word(split_msd("N;SG")));
  CHECK(is_content_word(split_msd("ADJ")));
  CHECK(is_content_word(split_msd("V;PST")));
  CHECK_FALSE(is_content_word(split_msd("PRO;NOM;SG;1")));
  CHECK_FALSE(is_content_word(split_msd("V.PTCP;PST")));

  SentenceInstance s = go_went();
  SentenceInstance r = repose(s, 3);
  CHECK(r.target_index == 3);
  CHECK(r.lemma() == "home");
  CHECK(*r.gold_form == "home");
  CHECK(r.gold_msd->join() == "N;SG");
  CHECK(*r.tokens[2].form == "went");
  CHECK(r.tokens[2].msd->join() == "V;PST");
  validate_instance(r);
  CHECK_THROWS(repose(s, 2));
  std::vector<SentenceInstance> one{s};
  CHECK(count_msd_eligible(one) == 1);
}

TEST_CASE("msd accuracy of a memorising model") {
  // Three sentences; train on every reposed view so each content word's tag
  // is memorised in its own context.
  auto base = test::synth(3, 31, "aa", 1, 0, 3);
  std::vector<SentenceInstance> views = base;
  for (const auto& s : base) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (i != s.target_index && s.tokens[i].msd && is_content_word(*s.tokens[i].msd)) views.push_back(repose(s, i));
    }
  }
  REQUIRE(count_msd_eligible(base) > 0);
  Model m = test::overfit(views, {"aa"}, 16, true, 400);
  CHECK(msd_accuracy(m, base) == 100.0);
  CHECK(target_msd_accuracy(m, base) == 100.0);

  // A one-component difference is a miss.
  auto skewed = base;
  skewed[0].gold_msd = split_msd(skewed[0].gold_msd->join() == "V;PL" ? "V;SG" : "V;PL");
  CHECK(target_msd_accuracy(m, skewed) < 100.0);

  auto no_content = base;
  for (auto& s : no_content) {
    for (auto& t : s.tokens) t.msd = split_msd("DET");
  }
  CHECK_THROWS(msd_accuracy(m, no_content));
}

TEST_CASE("cell statistics") {
  std::vector<double> a{10, 20, 30, 40, 50, 60, 70};
  CellStats s = summarize(a);
  CHECK(s.n_models == 7);
  CHECK(s.mean == doctest::Approx(40.0));
  CHECK(s.top5_mean == doctest::Approx(50.0));
  CHECK(s.std == doctest::Approx(20.0));  // population
  CHECK_THROWS(summarize(std::span<const double>(a).first(4)));
}

TEST_CASE("best partner table") {
  std::vector<MultilingualRun> runs;
  auto add = [&](std::vector<std::string> members, std::uint64_t seed, std::map<std::string, double> acc) {
    runs.push_back({LanguageGroup{std::move(members)}, seed, std::move(acc)});
  };
  add({"en", "sv"}, 1, {{"en", 50}, {"sv", 40}});
  add({"de", "en", "sv"}, 2, {{"en", 70}, {"sv", 30}, {"de", 20}});
  add({"de", "en"}, 3, {{"en", 60}, {"de", 10}});
  add({"en", "sv"}, 4, {{"en", 55}, {"sv", 45}});
  add({"de", "en", "sv"}, 5, {{"en", 52}, {"sv", 5}, {"de", 5}});
  add({"de", "sv"}, 6, {{"sv", 35}, {"de", 15}});
  add({"de", "en"}, 7, {{"en", 10}, {"de", 1}});
  add({"de", "sv"}, 8, {{"sv", 1}, {"de", 30}});
  auto table = best_partner_table(runs);
  REQUIRE(table["en"].size() == 5);
  CHECK(table["en"][0].partners == std::vector<std::string>{"de", "sv"});
  CHECK(table["en"][1].partners == std::vector<std::string>{"de"});
  CHECK(table["en"][2].dev_accuracy == 55.0);
  CHECK(table["en"][4].dev_accuracy == 50.0);
  REQUIRE(table["sv"].size() == 5);
  CHECK(table["sv"][0].partners == std::vector<std::string>{"en"});
  CHECK(table["sv"][0].seed == 4);
  CHECK(table["de"][0].partners == std::vector<std::string>{"sv"});

  runs.pop_back();  // de and sv drop to 5: still fine
  CHECK(best_partner_table(runs)["de"].size() == 5);
  runs.pop_back();  // de drops to 4
  CHECK_THROWS(best_partner_table(runs));
}

TEST_CASE("architecture names") {
  CHECK(ablation_ladder().size() == 5);
  for (Architecture a : ablation_ladder()) CHECK(architecture_from_name(architecture_name(a)) == a);
  CHECK(architecture_name(ablation_ladder().front()) == "window2-baseline");
  CHECK_THROWS(architecture_from_name("nope"));
}
