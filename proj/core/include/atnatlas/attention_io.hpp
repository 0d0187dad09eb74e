#pragma once

#include <string>
#include <vector>

#include "atnatlas/encoder.hpp"

namespace atnatlas {

struct AttentionDump {
  int n_layers = 0;
  int n_heads = 0;
  std::vector<AttentionTensor> examples;
};

// File layout: one ASCII magic line, one JSON header line (n_layers, n_heads,
// per-example lengths and payload byte offsets), then raw little-endian
// 64-bit floats. Within an example, maps are concatenated layer-major then
// head-major; each map is row-major. Round-trips are bit-exact.
void write_attention_dump(const std::string& path,
                          const std::vector<AttentionTensor>& tensors);

AttentionDump read_attention_dump(const std::string& path);

}  // namespace atnatlas
