#include "mrfl/vocabulary.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace mrfl {

namespace {
const std::array<std::string, Vocabulary::kNumSpecials> kSpecialNames = {"<pad>", "<s>", "</s>",
                                                                         "<unk>", "<drop>"};
}

std::string_view vocab_kind_name(VocabKind kind) {
  switch (kind) {
    case VocabKind::kChar: return "char";
    case VocabKind::kWord: return "word";
    case VocabKind::kLemma: return "lemma";
    case VocabKind::kMsdComponent: return "msd_component";
  }
  return "unknown";
}

VocabKind vocab_kind_from_name(std::string_view name) {
  for (auto kind : {VocabKind::kChar, VocabKind::kWord, VocabKind::kLemma, VocabKind::kMsdComponent}) {
    if (vocab_kind_name(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown vocabulary kind '" + std::string(name) + "'");
}

Vocabulary::Vocabulary(VocabKind kind, const std::set<std::string>& symbols) : kind_(kind) {
  symbols_.assign(kSpecialNames.begin(), kSpecialNames.end());
  for (const auto& s : symbols) {
    if (index_.count(s) || std::find(kSpecialNames.begin(), kSpecialNames.end(), s) != kSpecialNames.end()) {
      continue;
    }
    symbols_.push_back(s);
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) index_.emplace(symbols_[i], static_cast<int>(i));
}

Vocabulary Vocabulary::from_symbols(VocabKind kind, std::vector<std::string> symbols) {
  if (symbols.size() < kNumSpecials ||
      !std::equal(kSpecialNames.begin(), kSpecialNames.end(), symbols.begin())) {
    throw std::invalid_argument("vocabulary does not start with the reserved specials");
  }
  Vocabulary v(kind);
  v.symbols_ = std::move(symbols);
  v.index_.clear();
  for (std::size_t i = 0; i < v.symbols_.size(); ++i) {
    if (!v.index_.emplace(v.symbols_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary symbol '" + v.symbols_[i] + "'");
    }
  }
  return v;
}

int Vocabulary::index(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view symbol) const {
  return index_.count(std::string(symbol)) > 0;
}

const LanguageVocabularies& Vocabularies::at(const std::string& language) const {
  auto it = languages.find(language);
  if (it == languages.end()) throw std::out_of_range("no vocabularies for language '" + language + "'");
  return it->second;
}

Vocabularies build_vocabularies(std::span<const SentenceInstance> instances, Track track) {
  struct Sets {
    std::set<std::string> chars, words, lemmas, msd;
  };
  std::map<std::string, Sets> per_language;
  std::set<std::string> shared_msd;

  for (const auto& inst : instances) {
    Sets& s = per_language[inst.language];
    for (auto& c : utf8_chars(inst.lemma())) s.chars.insert(std::move(c));
    if (inst.gold_form) {
      for (auto& c : utf8_chars(*inst.gold_form)) s.chars.insert(std::move(c));
    }
    if (track == Track::kOne && inst.gold_msd) {
      shared_msd.insert(inst.gold_msd->components.begin(), inst.gold_msd->components.end());
    }
    for (std::size_t i = 0; i < inst.tokens.size(); ++i) {
      if (i == inst.target_index) continue;
      const Token& t = inst.tokens[i];
      if (t.form) s.words.insert(*t.form);
      if (track == Track::kTwo) continue;
      if (t.lemma) s.lemmas.insert(*t.lemma);
      if (t.msd) {
        s.msd.insert(t.msd->components.begin(), t.msd->components.end());
        shared_msd.insert(t.msd->components.begin(), t.msd->components.end());
      }
    }
  }

  Vocabularies out;
  for (const auto& [lang, s] : per_language) {
    LanguageVocabularies v;
    v.chars = Vocabulary(VocabKind::kChar, s.chars);
    v.words = Vocabulary(VocabKind::kWord, s.words);
    v.lemmas = Vocabulary(VocabKind::kLemma, s.lemmas);
    v.msd_features = Vocabulary(VocabKind::kMsdComponent, s.msd);
    out.languages.emplace(lang, std::move(v));
  }
  out.msd_components = Vocabulary(VocabKind::kMsdComponent, shared_msd);
  return out;
}

}  // namespace mrfl
