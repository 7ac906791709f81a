#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mrfl/corpus.hpp"
#include "mrfl/vocabulary.hpp"

namespace mrfl {

struct EncodedToken {
  int form = Vocabulary::kPad;
  int lemma = Vocabulary::kUnavailable;
  std::vector<int> msd;  // empty: unavailable
};

// Index sequences for one instance. lemma_chars and form_chars are wrapped in
// BOS/EOS; msd_components is BOS, components..., EOS over the shared MSD
// inventory. form_chars / msd_components are empty without gold answers.
struct EncodedInstance {
  std::string language;
  std::size_t target_index = 0;
  std::vector<EncodedToken> tokens;
  std::vector<int> lemma_chars;
  std::vector<int> form_chars;
  std::vector<int> msd_components;
};

EncodedInstance encode_instance(const SentenceInstance& instance, const Vocabularies& vocabularies,
                                Track track);

std::vector<EncodedInstance> encode_all(std::span<const SentenceInstance> instances,
                                        const Vocabularies& vocabularies, Track track);

// Concatenates symbols, skipping BOS/EOS/PAD.
std::string decode_chars(std::span<const int> indices, const Vocabulary& chars);
std::vector<std::string> decode_components(std::span<const int> indices, const Vocabulary& vocab);

}  // namespace mrfl
