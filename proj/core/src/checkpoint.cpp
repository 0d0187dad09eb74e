#include "atnatlas/checkpoint.hpp"

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "atnatlas/errors.hpp"
#include "wire.hpp"

namespace atnatlas {

namespace {

using nlohmann::json;

constexpr const char* kCkptMagic = "ATNATLAS-CKPT v1";

json config_to_json(const ModelConfig& c) {
  return json{{"n_layers", c.n_layers},   {"n_heads", c.n_heads},
              {"d_model", c.d_model},     {"d_ff", c.d_ff},
              {"vocab_size", c.vocab_size}, {"max_len", c.max_len},
              {"n_segments", c.n_segments}, {"eps_ln", c.eps_ln}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.n_segments = j.at("n_segments").get<int>();
  c.eps_ln = j.at("eps_ln").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const Parameters& params, const ModelConfig& config,
                     const std::string& path, const std::string& tag) {
  config.validate();
  json manifest = json::array();
  std::size_t offset = 0;
  for_each_param(params, [&](const std::string& name, const Matrix& m) {
    manifest.push_back({{"name", name},
                        {"shape", {m.rows(), m.cols()}},
                        {"offset", offset}});
    offset += 8 * m.size();
  });
  json header{{"config", config_to_json(config)}, {"tag", tag}, {"arrays", manifest}};

  std::string bytes;
  bytes += kCkptMagic;
  bytes += '\n';
  bytes += header.dump();
  bytes += '\n';
  bytes.reserve(bytes.size() + offset);
  for_each_param(params, [&](const std::string&, const Matrix& m) {
    detail::append_f64_le(bytes, m.data(), m.size());
  });
  detail::write_file_bytes(path, bytes);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);

  const std::size_t magic_end = bytes.find('\n');
  if (magic_end == std::string::npos || bytes.substr(0, magic_end) != kCkptMagic) {
    throw DataError("checkpoint " + path + ": bad or unsupported header line");
  }
  const std::size_t header_end = bytes.find('\n', magic_end + 1);
  if (header_end == std::string::npos) {
    throw DataError("checkpoint " + path + ": missing JSON header");
  }

  json header;
  try {
    header = json::parse(bytes.substr(magic_end + 1, header_end - magic_end - 1));
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path + ": malformed JSON header: " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.config = config_from_json(header.at("config"));
    ckpt.tag = header.value("tag", "");
  } catch (const json::exception& e) {
    throw DataError("checkpoint " + path + ": incomplete header: " + e.what());
  }
  ckpt.config.validate();
  ckpt.params = Parameters::zeros(ckpt.config);

  const json& manifest = header.at("arrays");
  std::size_t index = 0;
  std::size_t expected_offset = 0;
  const std::size_t payload_start = header_end + 1;
  const std::size_t payload_size = bytes.size() - payload_start;
  const auto* payload = reinterpret_cast<const unsigned char*>(bytes.data() + payload_start);

  for_each_param(ckpt.params, [&](const std::string& name, Matrix& m) {
    if (index >= manifest.size()) {
      throw DataError("checkpoint " + path + ": manifest missing array " + name);
    }
    const json& entry = manifest[index++];
    const std::string entry_name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    const auto offset = entry.at("offset").get<std::size_t>();
    if (entry_name != name) {
      throw DataError("checkpoint " + path + ": expected array " + name + ", found " +
                      entry_name);
    }
    if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols()) {
      throw DataError("checkpoint " + path + ": array " + name + " has shape inconsistent " +
                      "with the declared config (expected " + m.shape_str() + ")");
    }
    if (offset != expected_offset) {
      throw DataError("checkpoint " + path + ": array " + name + " at unexpected offset");
    }
    const std::size_t nbytes = 8 * m.size();
    if (offset + nbytes > payload_size) {
      throw DataError("checkpoint " + path + ": truncated payload while reading " + name);
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      m.data()[i] = detail::load_f64_le(payload + offset + 8 * i);
    }
    expected_offset = offset + nbytes;
  });

  if (index != manifest.size()) {
    throw DataError("checkpoint " + path + ": manifest has extra arrays");
  }
  if (expected_offset != payload_size) {
    throw DataError("checkpoint " + path + ": payload size mismatch (expected " +
                    std::to_string(expected_offset) + " bytes, file holds " +
                    std::to_string(payload_size) + ")");
  }
  return ckpt;
}

}  // namespace atnatlas
