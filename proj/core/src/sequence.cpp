#include "atnatlas/sequence.hpp"

#include <algorithm>
#include <string>

#include "atnatlas/errors.hpp"

namespace atnatlas {

int TokenSequence::n_segments() const {
  return segment_ids.empty() ? 0 : 1 + *std::max_element(segment_ids.begin(), segment_ids.end());
}

bool TokenSequence::is_special(int pos) const {
  return std::binary_search(special_positions.begin(), special_positions.end(), pos);
}

void TokenSequence::validate(int vocab_size, int max_len) const {
  const std::size_t len = ids.size();
  if (len < 2) throw DataError("sequence: too short, need at least [CLS] and [SEP]");
  if (len > static_cast<std::size_t>(max_len)) {
    throw DataError("sequence: length " + std::to_string(len) + " exceeds max_len " +
                    std::to_string(max_len));
  }
  if (segment_ids.size() != len) throw DataError("sequence: segment_ids length mismatch");
  if (ids[0] != kClsToken) throw DataError("sequence: must start with [CLS]");
  bool saw_sep = false;
  for (std::size_t i = 0; i < len; ++i) {
    if (ids[i] < 0 || ids[i] >= vocab_size) {
      throw DataError("sequence: unknown token id " + std::to_string(ids[i]) +
                      " at position " + std::to_string(i));
    }
    if (segment_ids[i] != 0 && segment_ids[i] != 1) {
      throw DataError("sequence: segment id out of {0,1} at position " + std::to_string(i));
    }
    if (ids[i] == kSepToken) saw_sep = true;
  }
  if (!saw_sep) throw DataError("sequence: missing [SEP]");
  for (int p : special_positions) {
    if (p < 0 || static_cast<std::size_t>(p) >= len) {
      throw DataError("sequence: special position out of range");
    }
    if (ids[p] != kClsToken && ids[p] != kSepToken) {
      throw DataError("sequence: special position " + std::to_string(p) +
                      " does not hold [CLS] or [SEP]");
    }
  }
  if (!std::is_sorted(special_positions.begin(), special_positions.end())) {
    throw DataError("sequence: special positions must be ascending");
  }
}

TokenSequence make_sequence(const std::vector<int>& segment_a,
                            const std::vector<int>& segment_b) {
  TokenSequence seq;
  seq.ids.reserve(segment_a.size() + segment_b.size() + 3);
  seq.ids.push_back(kClsToken);
  seq.ids.insert(seq.ids.end(), segment_a.begin(), segment_a.end());
  seq.ids.push_back(kSepToken);
  seq.segment_ids.assign(seq.ids.size(), 0);
  seq.special_positions = {0, static_cast<int>(seq.ids.size()) - 1};
  if (!segment_b.empty()) {
    seq.ids.insert(seq.ids.end(), segment_b.begin(), segment_b.end());
    seq.ids.push_back(kSepToken);
    seq.segment_ids.resize(seq.ids.size(), 1);
    seq.special_positions.push_back(static_cast<int>(seq.ids.size()) - 1);
  }
  return seq;
}

}  // namespace atnatlas
