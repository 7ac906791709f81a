#include "mrfl/synthetic.hpp"

#include <set>
#include <stdexcept>

#include "mrfl/random.hpp"

namespace mrfl {

const std::vector<SyntheticProfile>& synthetic_profiles() {
  static const std::vector<SyntheticProfile> profiles = {
      {{AgreementRule{"ka", "PRO;PL", "en", "V;PL"}, AgreementRule{"mo", "PRO;SG", "t", "V;SG"}},
       {{"la", "DET"}, {"pi", "ADV"}, {"dor", "N;SG"}, {"sel", "ADJ"}, {"ve", "ADP"}, {"tun", "N;PL"}},
       "bdfglmnprst",
       "aeiou",
       "fkmnrst"},
      {{AgreementRule{"zu", "PRO;PL", "ar", "V;PL"}, AgreementRule{"ri", "PRO;SG", "s", "V;SG"}},
       {{"ho", "DET"}, {"ny", "ADV"}, {"gak", "N;SG"}, {"bel", "ADJ"}, {"fa", "ADP"}, {"jom", "N;PL"}},
       "bghjklnvy",
       "aiouy",
       "klnv"},
  };
  return profiles;
}

namespace {

char pick(Rng& rng, const std::string& alphabet) { return alphabet[rng.below(alphabet.size())]; }

std::vector<std::string> make_lemmas(const SyntheticProfile& p, std::size_t n, Rng& rng) {
  std::set<std::string> seen;
  std::vector<std::string> lemmas;
  std::set<std::string> reserved;
  for (const auto& f : p.fillers) reserved.insert(f.form);
  for (const auto& r : p.rules) reserved.insert(r.trigger);
  std::size_t attempts = 0;
  while (lemmas.size() < n) {
    if (++attempts > 1000 * (n + 1)) throw std::invalid_argument("cannot generate enough distinct lemmas");
    std::string lemma;
    lemma += pick(rng, p.onsets);
    lemma += pick(rng, p.vowels);
    if (rng.bernoulli(0.5)) lemma += pick(rng, p.vowels);
    lemma += pick(rng, p.codas);
    if (rng.bernoulli(0.3)) {
      lemma += pick(rng, p.onsets);
      lemma += pick(rng, p.vowels);
      lemma += pick(rng, p.codas);
    }
    if (reserved.count(lemma) || !seen.insert(lemma).second) continue;
    lemmas.push_back(lemma);
  }
  return lemmas;
}

Token word(const std::string& form, const std::string& msd) {
  return Token{form, form, split_msd(msd)};
}

}  // namespace

std::vector<SentenceInstance> generate_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.trigger_distance < 1) throw std::invalid_argument("trigger_distance must be >= 1");
  const auto& profiles = synthetic_profiles();
  if (spec.variant >= profiles.size()) {
    throw std::invalid_argument("unknown synthetic variant " + std::to_string(spec.variant));
  }
  const SyntheticProfile& p = profiles[spec.variant];
  std::vector<SentenceInstance> out;
  if (spec.n_sentences == 0) return out;
  if (spec.n_lemmas == 0) throw std::invalid_argument("n_lemmas must be >= 1");

  Rng rng(spec.seed);
  const auto lemmas = make_lemmas(p, spec.n_lemmas, rng);
  auto filler = [&] {
    const auto& f = p.fillers[rng.below(p.fillers.size())];
    return word(f.form, f.msd);
  };

  out.reserve(spec.n_sentences);
  for (std::size_t s = 0; s < spec.n_sentences; ++s) {
    const AgreementRule& rule = p.rules[rng.below(2)];
    const std::string& lemma = lemmas[rng.below(lemmas.size())];
    SentenceInstance inst;
    inst.language = spec.language_id;
    const std::size_t lead = rng.below(3);
    for (std::size_t i = 0; i < lead; ++i) inst.tokens.push_back(filler());
    inst.tokens.push_back(word(rule.trigger, rule.trigger_msd));
    for (std::size_t i = 1; i < spec.trigger_distance; ++i) inst.tokens.push_back(filler());
    inst.target_index = inst.tokens.size();
    inst.tokens.push_back(Token{std::nullopt, lemma, std::nullopt});
    const std::size_t tail = 1 + rng.below(2);
    for (std::size_t i = 0; i < tail; ++i) inst.tokens.push_back(filler());
    inst.gold_form = lemma + rule.suffix;
    inst.gold_msd = split_msd(rule.target_msd);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace mrfl
