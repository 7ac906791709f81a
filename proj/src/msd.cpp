#include <stdexcept>

#include "mrfl/corpus.hpp"

namespace mrfl {

std::string MsdTag::join() const {
  std::string out;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) out += ';';
    out += components[i];
  }
  return out;
}

MsdTag split_msd(std::string_view tag) {
  if (tag.empty()) throw std::invalid_argument("empty MSD tag");
  MsdTag msd;
  std::size_t start = 0;
  while (true) {
    const auto end = tag.find(';', start);
    msd.components.emplace_back(tag.substr(start, end == std::string_view::npos ? end : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return msd;
}

Track track_from_int(int value) {
  if (value == 1) return Track::kOne;
  if (value == 2) return Track::kTwo;
  throw std::invalid_argument("track must be 1 or 2, got " + std::to_string(value));
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) len = 4;
    else if (lead >= 0xE0) len = lead < 0xF0 ? 3 : 1;
    else if (lead >= 0xC0) len = 2;
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace mrfl
