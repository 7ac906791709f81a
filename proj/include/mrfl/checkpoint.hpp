#pragma once

#include <map>
#include <string>
#include <string_view>

#include "mrfl/model.hpp"

namespace mrfl {

// Checkpoint layout:
//
//   "MRFL1\n"
//   decimal byte length of the header, "\n"
//   header: JSON object {config, vocabularies, parameters: [{name, shape,
//           offset}], payload_bytes, metadata}
//   spaces up to the next multiple of 8 bytes
//   payload: every parameter as little-endian float64, manifest order
//
// Offsets are relative to the payload start.
inline constexpr std::string_view kCheckpointMagic = "MRFL1";

using Metadata = std::map<std::string, std::string>;

struct Checkpoint {
  Model model;
  Metadata metadata;
};

std::string serialize_checkpoint(const Model& model, const Metadata& metadata = {});
Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source = "<checkpoint>");

void save_checkpoint(const std::string& path, const Model& model, const Metadata& metadata = {});
Checkpoint load_checkpoint(const std::string& path);

std::string read_file(const std::string& path);
// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view bytes);

}  // namespace mrfl
