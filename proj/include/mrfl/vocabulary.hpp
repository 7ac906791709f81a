#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mrfl/corpus.hpp"

namespace mrfl {

enum class VocabKind { kChar, kWord, kLemma, kMsdComponent };

std::string_view vocab_kind_name(VocabKind kind);
VocabKind vocab_kind_from_name(std::string_view name);

// Bijective symbol <-> index map. Indices 0-4 are reserved specials; real
// symbols follow in lexicographic order.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kDrop = 4;
  static constexpr int kNumSpecials = 5;
  // Index used for features that are absent from the input (e.g. context
  // lemmas in Track 2); it shares the padding row.
  static constexpr int kUnavailable = kPad;

  explicit Vocabulary(VocabKind kind = VocabKind::kChar, const std::set<std::string>& symbols = {});

  // Rebuilds from a full index-ordered symbol list (specials included), as
  // stored in checkpoints.
  static Vocabulary from_symbols(VocabKind kind, std::vector<std::string> symbols);

  VocabKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return symbols_.size(); }
  // UNK for unseen symbols.
  int index(std::string_view symbol) const;
  bool contains(std::string_view symbol) const;
  const std::string& symbol(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

  bool operator==(const Vocabulary& other) const {
    return kind_ == other.kind_ && symbols_ == other.symbols_;
  }

 private:
  VocabKind kind_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

struct LanguageVocabularies {
  Vocabulary chars{VocabKind::kChar};
  Vocabulary words{VocabKind::kWord};
  Vocabulary lemmas{VocabKind::kLemma};
  Vocabulary msd_features{VocabKind::kMsdComponent};
};

struct Vocabularies {
  std::map<std::string, LanguageVocabularies> languages;
  // Output inventory of the auxiliary decoder, shared by all languages.
  Vocabulary msd_components{VocabKind::kMsdComponent};

  const LanguageVocabularies& at(const std::string& language) const;
};

Vocabularies build_vocabularies(std::span<const SentenceInstance> instances, Track track);

}  // namespace mrfl
