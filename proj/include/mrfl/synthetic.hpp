#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mrfl/corpus.hpp"

namespace mrfl {

// One agreement rule of a toy language: a trigger word anywhere before the
// target selects the suffix added to the target lemma and the target's MSD.
struct AgreementRule {
  std::string trigger;
  std::string trigger_msd;
  std::string suffix;
  std::string target_msd;
};

struct FillerWord {
  std::string form;
  std::string msd;
};

// Published rule table of one synthetic language variant. All variants draw
// on the same MSD inventory so they can share an auxiliary decoder.
struct SyntheticProfile {
  std::array<AgreementRule, 2> rules;
  std::vector<FillerWord> fillers;
  std::string onsets;
  std::string vowels;
  std::string codas;
};

const std::vector<SyntheticProfile>& synthetic_profiles();

struct SyntheticSpec {
  std::size_t n_sentences = 100;
  std::size_t trigger_distance = 1;
  std::size_t n_lemmas = 20;
  std::uint64_t seed = 1;
  std::string language_id = "syn";
  std::size_t variant = 0;  // index into synthetic_profiles()
};

// Each sentence: 0-2 fillers, the trigger, trigger_distance-1 fillers, the
// target, then 1-2 fillers. Gold form = lemma + suffix of the trigger's rule.
// Track 1 annotation throughout; deterministic under the seed.
std::vector<SentenceInstance> generate_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace mrfl
