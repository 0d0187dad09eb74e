#pragma once

#include <string>

#include "atnatlas/encoder.hpp"

namespace atnatlas {

struct Checkpoint {
  ModelConfig config;
  Parameters params;
  std::string tag;  // e.g. "pretrained" or "finetuned"
};

// File layout: one ASCII magic line, one JSON header line (config, tag, and
// the ordered array manifest with name/shape/offset), then raw little-endian
// 64-bit floats in row-major manifest order. Offsets are relative to the
// start of the payload. Round-trips are bit-exact.
void save_checkpoint(const Parameters& params, const ModelConfig& config,
                     const std::string& path, const std::string& tag = "");

Checkpoint load_checkpoint(const std::string& path);

}  // namespace atnatlas
