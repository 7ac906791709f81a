#include "mrfl/encoding.hpp"

namespace mrfl {

namespace {

std::vector<int> wrap(const std::vector<std::string>& symbols, const Vocabulary& vocab) {
  std::vector<int> out;
  out.reserve(symbols.size() + 2);
  out.push_back(Vocabulary::kBos);
  for (const auto& s : symbols) out.push_back(vocab.index(s));
  out.push_back(Vocabulary::kEos);
  return out;
}

bool is_special(int index) {
  return index == Vocabulary::kPad || index == Vocabulary::kBos || index == Vocabulary::kEos;
}

}  // namespace

EncodedInstance encode_instance(const SentenceInstance& instance, const Vocabularies& vocabularies,
                                Track track) {
  const LanguageVocabularies& v = vocabularies.at(instance.language);
  EncodedInstance out;
  out.language = instance.language;
  out.target_index = instance.target_index;
  out.tokens.reserve(instance.tokens.size());
  for (std::size_t i = 0; i < instance.tokens.size(); ++i) {
    const Token& t = instance.tokens[i];
    EncodedToken e;
    if (i != instance.target_index) {
      e.form = t.form ? v.words.index(*t.form) : Vocabulary::kUnk;
      if (track == Track::kOne) {
        if (t.lemma) e.lemma = v.lemmas.index(*t.lemma);
        if (t.msd) {
          for (const auto& c : t.msd->components) e.msd.push_back(v.msd_features.index(c));
        }
      }
    }
    out.tokens.push_back(std::move(e));
  }
  out.lemma_chars = wrap(utf8_chars(instance.lemma()), v.chars);
  if (instance.gold_form) out.form_chars = wrap(utf8_chars(*instance.gold_form), v.chars);
  if (instance.gold_msd && track == Track::kOne) {
    out.msd_components = wrap(instance.gold_msd->components, vocabularies.msd_components);
  }
  return out;
}

std::vector<EncodedInstance> encode_all(std::span<const SentenceInstance> instances,
                                        const Vocabularies& vocabularies, Track track) {
  std::vector<EncodedInstance> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(encode_instance(inst, vocabularies, track));
  return out;
}

std::string decode_chars(std::span<const int> indices, const Vocabulary& chars) {
  std::string out;
  for (int i : indices) {
    if (!is_special(i)) out += chars.symbol(i);
  }
  return out;
}

std::vector<std::string> decode_components(std::span<const int> indices, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (int i : indices) {
    if (!is_special(i)) out.push_back(vocab.symbol(i));
  }
  return out;
}

}  // namespace mrfl
