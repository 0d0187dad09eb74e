#include "atnatlas/attention_io.hpp"

#include <json.hpp>

#include "atnatlas/errors.hpp"
#include "wire.hpp"

namespace atnatlas {

namespace {

using nlohmann::json;

constexpr const char* kAttnMagic = "ATNATLAS-ATTN v1";

std::size_t example_bytes(int n_layers, int n_heads, std::size_t len) {
  return 8 * static_cast<std::size_t>(n_layers) * n_heads * len * len;
}

}  // namespace

void write_attention_dump(const std::string& path,
                          const std::vector<AttentionTensor>& tensors) {
  if (tensors.empty()) throw DataError("attention dump: nothing to write");
  const int n_layers = tensors.front().n_layers;
  const int n_heads = tensors.front().n_heads;

  json lengths = json::array();
  json offsets = json::array();
  std::size_t offset = 0;
  for (const AttentionTensor& t : tensors) {
    if (t.n_layers != n_layers || t.n_heads != n_heads) {
      throw DataError("attention dump: tensors disagree on the layer/head grid");
    }
    lengths.push_back(t.len);
    offsets.push_back(offset);
    offset += example_bytes(n_layers, n_heads, t.len);
  }
  const json header{{"n_layers", n_layers},
                    {"n_heads", n_heads},
                    {"lengths", lengths},
                    {"offsets", offsets}};

  std::string bytes;
  bytes += kAttnMagic;
  bytes += '\n';
  bytes += header.dump();
  bytes += '\n';
  bytes.reserve(bytes.size() + offset);
  for (const AttentionTensor& t : tensors) {
    for (const Matrix& map : t.maps) detail::append_f64_le(bytes, map.data(), map.size());
  }
  detail::write_file_bytes(path, bytes);
}

AttentionDump read_attention_dump(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);

  const std::size_t magic_end = bytes.find('\n');
  if (magic_end == std::string::npos || bytes.substr(0, magic_end) != kAttnMagic) {
    throw DataError("attention dump " + path + ": bad or unsupported header line");
  }
  const std::size_t header_end = bytes.find('\n', magic_end + 1);
  if (header_end == std::string::npos) {
    throw DataError("attention dump " + path + ": missing JSON header");
  }

  json header;
  try {
    header = json::parse(bytes.substr(magic_end + 1, header_end - magic_end - 1));
  } catch (const json::exception& e) {
    throw DataError("attention dump " + path + ": malformed JSON header: " + e.what());
  }

  AttentionDump dump;
  std::vector<std::size_t> lengths, offsets;
  try {
    dump.n_layers = header.at("n_layers").get<int>();
    dump.n_heads = header.at("n_heads").get<int>();
    lengths = header.at("lengths").get<std::vector<std::size_t>>();
    offsets = header.at("offsets").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw DataError("attention dump " + path + ": incomplete header: " + e.what());
  }
  if (dump.n_layers < 1 || dump.n_heads < 1 || lengths.size() != offsets.size() ||
      lengths.empty()) {
    throw DataError("attention dump " + path + ": inconsistent header fields");
  }

  const std::size_t payload_start = header_end + 1;
  const std::size_t payload_size = bytes.size() - payload_start;
  const auto* payload = reinterpret_cast<const unsigned char*>(bytes.data() + payload_start);

  std::size_t expected_offset = 0;
  for (std::size_t e = 0; e < lengths.size(); ++e) {
    if (offsets[e] != expected_offset) {
      throw DataError("attention dump " + path + ": example " + std::to_string(e) +
                      " at unexpected offset");
    }
    const std::size_t len = lengths[e];
    const std::size_t nbytes = example_bytes(dump.n_layers, dump.n_heads, len);
    if (expected_offset + nbytes > payload_size) {
      throw DataError("attention dump " + path + ": payload truncated at example " +
                      std::to_string(e) + " (header length " + std::to_string(len) +
                      " needs more bytes than the file holds)");
    }
    AttentionTensor t(dump.n_layers, dump.n_heads, len);
    std::size_t pos = expected_offset;
    for (Matrix& map : t.maps) {
      for (std::size_t i = 0; i < map.size(); ++i) {
        map.data()[i] = detail::load_f64_le(payload + pos);
        pos += 8;
      }
    }
    dump.examples.push_back(std::move(t));
    expected_offset += nbytes;
  }
  if (expected_offset != payload_size) {
    throw DataError("attention dump " + path + ": payload size mismatch (expected " +
                    std::to_string(expected_offset) + " bytes, file holds " +
                    std::to_string(payload_size) + ")");
  }
  return dump;
}

}  // namespace atnatlas
