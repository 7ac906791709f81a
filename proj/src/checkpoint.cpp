#include "mrfl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mrfl/errors.hpp"

namespace mrfl {

using nlohmann::json;

namespace {

json config_to_json(const ModelConfig& c) {
  return json{{"embed_dim", c.embed_dim},
              {"lstm_dim", c.lstm_dim},
              {"attn_dim", c.attn_dim},
              {"track", static_cast<int>(c.track)},
              {"context_mode", std::string(context_mode_name(c.context_mode))},
              {"aux_msd", c.aux_msd},
              {"languages", c.languages}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.lstm_dim = j.at("lstm_dim").get<std::size_t>();
  c.attn_dim = j.at("attn_dim").get<std::size_t>();
  c.track = track_from_int(j.at("track").get<int>());
  c.context_mode = context_mode_from_name(j.at("context_mode").get<std::string>());
  c.aux_msd = j.at("aux_msd").get<bool>();
  c.languages = j.at("languages").get<std::vector<std::string>>();
  return c;
}

json vocab_to_json(const Vocabulary& v) {
  return json{{"kind", std::string(vocab_kind_name(v.kind()))}, {"symbols", v.symbols()}};
}

Vocabulary vocab_from_json(const json& j) {
  return Vocabulary::from_symbols(vocab_kind_from_name(j.at("kind").get<std::string>()),
                                  j.at("symbols").get<std::vector<std::string>>());
}

void append_le(std::string& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits >>= 8;
  }
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string serialize_checkpoint(const Model& model, const Metadata& metadata) {
  json header;
  header["config"] = config_to_json(model.config());
  json vocab;
  for (const auto& [lang, v] : model.vocabularies().languages) {
    vocab["languages"][lang] = json{{"chars", vocab_to_json(v.chars)},
                                    {"words", vocab_to_json(v.words)},
                                    {"lemmas", vocab_to_json(v.lemmas)},
                                    {"msd_features", vocab_to_json(v.msd_features)}};
  }
  vocab["msd_components"] = vocab_to_json(model.vocabularies().msd_components);
  header["vocabularies"] = vocab;
  json manifest = json::array();
  std::size_t offset = 0;
  for (const Parameter* p : model.parameters()) {
    manifest.push_back(json{{"name", p->name}, {"shape", p->value.shape()}, {"offset", offset}});
    offset += p->value.size() * 8;
  }
  header["parameters"] = manifest;
  header["payload_bytes"] = offset;
  header["metadata"] = metadata;

  const std::string header_text = header.dump();
  std::string out(kCheckpointMagic);
  out += '\n';
  out += std::to_string(header_text.size());
  out += '\n';
  out += header_text;
  while (out.size() % 8 != 0) out += ' ';
  out.reserve(out.size() + offset);
  for (const Parameter* p : model.parameters()) {
    for (double v : p->value.data()) append_le(out, v);
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source) {
  auto fail = [&](const std::string& msg) -> CheckpointError {
    return CheckpointError(source + ": " + msg);
  };
  const std::string magic_line = std::string(kCheckpointMagic) + "\n";
  if (bytes.substr(0, magic_line.size()) != magic_line) throw fail("not a checkpoint (bad magic)");
  std::size_t pos = magic_line.size();
  const auto nl = bytes.find('\n', pos);
  if (nl == std::string_view::npos) throw fail("truncated header length");
  std::size_t header_len = 0;
  try {
    header_len = std::stoull(std::string(bytes.substr(pos, nl - pos)));
  } catch (const std::exception&) {
    throw fail("bad header length");
  }
  pos = nl + 1;
  if (pos + header_len > bytes.size()) throw fail("truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw fail(std::string("header is not valid JSON: ") + e.what());
  }
  pos += header_len;
  const std::size_t payload_start = (pos + 7) / 8 * 8;
  if (payload_start > bytes.size()) throw fail("truncated padding");
  const std::string_view payload = bytes.substr(payload_start);

  try {
    ModelConfig config = config_from_json(header.at("config"));
    Vocabularies vocab;
    const json& vj = header.at("vocabularies");
    for (const auto& [lang, lj] : vj.at("languages").items()) {
      LanguageVocabularies lv;
      lv.chars = vocab_from_json(lj.at("chars"));
      lv.words = vocab_from_json(lj.at("words"));
      lv.lemmas = vocab_from_json(lj.at("lemmas"));
      lv.msd_features = vocab_from_json(lj.at("msd_features"));
      vocab.languages.emplace(lang, std::move(lv));
    }
    vocab.msd_components = vocab_from_json(vj.at("msd_components"));

    const std::size_t payload_bytes = header.at("payload_bytes").get<std::size_t>();
    const json& manifest = header.at("parameters");
    std::size_t expected = 0;
    for (const auto& entry : manifest) {
      const auto shape = entry.at("shape").get<Shape>();
      if (entry.at("offset").get<std::size_t>() != expected) throw fail("parameter offsets are not contiguous");
      expected += shape_size(shape) * 8;
    }
    if (expected != payload_bytes || payload.size() != payload_bytes) {
      throw fail("manifest describes " + std::to_string(expected) + " payload bytes, header says " +
                 std::to_string(payload_bytes) + ", file has " + std::to_string(payload.size()));
    }

    Checkpoint ckpt{Model(config, std::move(vocab), 0), header.at("metadata").get<Metadata>()};
    auto params = ckpt.model.parameters();
    if (params.size() != manifest.size()) {
      throw fail("checkpoint has " + std::to_string(manifest.size()) + " parameters, model expects " +
                 std::to_string(params.size()));
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
      const json& entry = manifest[k];
      Parameter& p = *params[k];
      if (entry.at("name").get<std::string>() != p.name || entry.at("shape").get<Shape>() != p.value.shape()) {
        throw fail("parameter " + std::to_string(k) + " is " + entry.at("name").get<std::string>() +
                   shape_string(entry.at("shape").get<Shape>()) + ", model expects " + p.name +
                   shape_string(p.value.shape()));
      }
      const char* base = payload.data() + entry.at("offset").get<std::size_t>();
      auto values = p.value.data();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = read_le(base + 8 * i);
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw fail(std::string("malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw fail(std::string("invalid model config: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error(tmp + ": write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error(path + ": rename failed: " + ec.message());
  }
}

void save_checkpoint(const std::string& path, const Model& model, const Metadata& metadata) {
  write_file_atomic(path, serialize_checkpoint(model, metadata));
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path), path); }

}  // namespace mrfl
