#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "mrfl/corpus.hpp"
#include "mrfl/errors.hpp"
#include "mrfl/random.hpp"

namespace mrfl {

namespace {

constexpr std::string_view kMissing = "_";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find('\t', start);
    cols.push_back(line.substr(start, end == std::string_view::npos ? end : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return cols;
}

std::optional<std::string> optional_field(std::string_view field) {
  if (field == kMissing) return std::nullopt;
  return std::string(field);
}

std::string field_or_missing(const std::optional<std::string>& value) {
  return value ? *value : std::string(kMissing);
}

}  // namespace

void validate_instance(const SentenceInstance& instance) {
  std::size_t covered = 0;
  for (const auto& t : instance.tokens) covered += t.covered() ? 1 : 0;
  if (covered != 1) {
    throw std::invalid_argument("sentence must contain exactly one covered token, found " +
                                std::to_string(covered));
  }
  if (instance.target_index >= instance.tokens.size() || !instance.target().covered()) {
    throw std::invalid_argument("target_index does not point at the covered token");
  }
  if (!instance.target().lemma) throw std::invalid_argument("target token has no lemma");
}

std::vector<SentenceInstance> parse_sentences(std::istream& in, Track track,
                                              const std::string& language,
                                              const std::string& source) {
  std::vector<SentenceInstance> out;
  SentenceInstance current;
  std::size_t block_start = 0;
  std::optional<std::size_t> covered_line;

  auto finish = [&](std::size_t line_no) {
    if (current.tokens.empty()) return;
    if (!covered_line) throw FormatError(source, block_start, "sentence has no covered token");
    current.language = language;
    out.push_back(std::move(current));
    current = SentenceInstance{};
    covered_line.reset();
    (void)line_no;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      finish(line_no);
      continue;
    }
    if (current.tokens.empty()) block_start = line_no;
    const auto cols = split_tabs(line);
    if (cols.size() != 3) {
      throw FormatError(source, line_no,
                        "expected 3 tab-separated columns, got " + std::to_string(cols.size()));
    }
    Token token;
    token.form = optional_field(cols[0]);
    token.lemma = optional_field(cols[1]);
    if (cols[2] != kMissing) {
      if (cols[2].empty()) throw FormatError(source, line_no, "empty MSD field");
      token.msd = split_msd(cols[2]);
    }
    if (token.covered()) {
      if (covered_line) {
        throw FormatError(source, line_no,
                          "second covered token (first at line " + std::to_string(*covered_line) + ")");
      }
      if (!token.lemma) throw FormatError(source, line_no, "covered token has no lemma");
      if (token.msd) throw FormatError(source, line_no, "covered token must have MSD '_'");
      covered_line = line_no;
      current.target_index = current.tokens.size();
    } else if (track == Track::kTwo) {
      token.lemma.reset();
      token.msd.reset();
    }
    current.tokens.push_back(std::move(token));
  }
  finish(line_no);
  return out;
}

std::vector<Answer> parse_answers(std::istream& in, const std::string& source) {
  std::vector<Answer> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cols = split_tabs(line);
    if (cols.size() != 2) {
      throw FormatError(source, line_no,
                        "expected FORM<TAB>MSD, got " + std::to_string(cols.size()) + " columns");
    }
    if (cols[0].empty()) throw FormatError(source, line_no, "empty answer form");
    Answer a;
    a.form = std::string(cols[0]);
    if (cols[1] != kMissing) {
      if (cols[1].empty()) throw FormatError(source, line_no, "empty MSD field");
      a.msd = split_msd(cols[1]);
    }
    out.push_back(std::move(a));
  }
  return out;
}

void attach_answers(std::vector<SentenceInstance>& instances, const std::vector<Answer>& answers,
                    const std::string& source) {
  if (answers.size() != instances.size()) {
    throw FormatError(source, answers.size(),
                      "answers file has " + std::to_string(answers.size()) + " lines for " +
                          std::to_string(instances.size()) + " sentences");
  }
  for (std::size_t i = 0; i < answers.size(); ++i) {
    instances[i].gold_form = answers[i].form;
    instances[i].gold_msd = answers[i].msd;
  }
}

std::vector<SentenceInstance> parse_file(const std::string& path, Track track,
                                         const std::string& language,
                                         const std::optional<std::string>& answers_path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, 0, "cannot open file");
  auto instances = parse_sentences(in, track, language, path);
  if (answers_path) {
    std::ifstream ans(*answers_path, std::ios::binary);
    if (!ans) throw FormatError(*answers_path, 0, "cannot open file");
    attach_answers(instances, parse_answers(ans, *answers_path), *answers_path);
  }
  return instances;
}

void write_sentences(std::ostream& out, std::span<const SentenceInstance> instances, Track track) {
  for (const auto& inst : instances) {
    for (std::size_t i = 0; i < inst.tokens.size(); ++i) {
      const Token& t = inst.tokens[i];
      const bool context_only = track == Track::kTwo && i != inst.target_index;
      out << field_or_missing(t.form) << '\t'
          << (context_only ? std::string(kMissing) : field_or_missing(t.lemma)) << '\t'
          << (context_only || !t.msd ? std::string(kMissing) : t.msd->join()) << '\n';
    }
    out << '\n';
  }
}

void write_answers(std::ostream& out, std::span<const SentenceInstance> instances) {
  for (const auto& inst : instances) {
    if (!inst.gold_form) throw std::invalid_argument("instance has no gold form to write");
    out << *inst.gold_form << '\t' << (inst.gold_msd ? inst.gold_msd->join() : std::string(kMissing))
        << '\n';
  }
}

std::pair<std::vector<SentenceInstance>, std::vector<SentenceInstance>> split_train_validation(
    std::vector<SentenceInstance> instances, double ratio, std::uint64_t seed) {
  if (instances.size() < 10) {
    throw std::invalid_argument("need at least 10 instances to split, got " +
                                std::to_string(instances.size()));
  }
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(instances.size()) + 1e-9));
  std::pair<std::vector<SentenceInstance>, std::vector<SentenceInstance>> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& dest = k < n_train ? out.first : out.second;
    dest.push_back(std::move(instances[order[k]]));
  }
  return out;
}

}  // namespace mrfl
