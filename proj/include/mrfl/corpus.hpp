#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mrfl {

enum class Track : int { kOne = 1, kTwo = 2 };

Track track_from_int(int value);

// Ordered morphosyntactic feature components, e.g. V;PST;V.PTCP;PASS.
struct MsdTag {
  std::vector<std::string> components;

  std::string join() const;
  const std::string& part_of_speech() const { return components.front(); }
  bool operator==(const MsdTag&) const = default;
};

// Splits on ';'. Throws std::invalid_argument on an empty tag.
MsdTag split_msd(std::string_view tag);

struct Token {
  std::optional<std::string> form;   // nullopt: the covered target
  std::optional<std::string> lemma;  // nullopt: unavailable
  std::optional<MsdTag> msd;         // nullopt: unavailable

  bool covered() const { return !form.has_value(); }
  bool operator==(const Token&) const = default;
};

struct SentenceInstance {
  std::vector<Token> tokens;
  std::size_t target_index = 0;
  std::optional<std::string> gold_form;
  std::optional<MsdTag> gold_msd;
  std::string language;

  const Token& target() const { return tokens.at(target_index); }
  const std::string& lemma() const { return *target().lemma; }
  bool operator==(const SentenceInstance&) const = default;
};

// Throws std::invalid_argument if the instance breaks the one-covered-token
// or target-lemma invariants.
void validate_instance(const SentenceInstance& instance);

// Gold answers, one per instance, in file order.
struct Answer {
  std::string form;
  std::optional<MsdTag> msd;
};

// Token-per-line TSV: FORM<TAB>LEMMA<TAB>MSD, blank line between sentences,
// "_" for the covered form and for unavailable fields. Under Track 2 the
// lemma and MSD of context tokens are discarded. `source` names the stream
// in FormatError messages.
std::vector<SentenceInstance> parse_sentences(std::istream& in, Track track,
                                              const std::string& language,
                                              const std::string& source = "<stream>");
// One FORM<TAB>MSD line per instance; MSD may be "_".
std::vector<Answer> parse_answers(std::istream& in, const std::string& source = "<stream>");

void attach_answers(std::vector<SentenceInstance>& instances, const std::vector<Answer>& answers,
                    const std::string& source = "<answers>");

std::vector<SentenceInstance> parse_file(const std::string& path, Track track,
                                         const std::string& language,
                                         const std::optional<std::string>& answers_path = std::nullopt);

void write_sentences(std::ostream& out, std::span<const SentenceInstance> instances, Track track);
void write_answers(std::ostream& out, std::span<const SentenceInstance> instances);

// Seeded shuffle, then the first floor(ratio * n) go to training. Needs at
// least 10 instances.
std::pair<std::vector<SentenceInstance>, std::vector<SentenceInstance>> split_train_validation(
    std::vector<SentenceInstance> instances, double ratio, std::uint64_t seed);

// Splits UTF-8 into code points; stray bytes become single-byte symbols.
std::vector<std::string> utf8_chars(std::string_view text);

}  // namespace mrfl
