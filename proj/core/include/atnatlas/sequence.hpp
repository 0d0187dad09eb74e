#pragma once

#include <vector>

namespace atnatlas {

// Reserved vocabulary ids. Regular tokens start at kFirstRegularToken.
inline constexpr int kClsToken = 0;
inline constexpr int kSepToken = 1;
inline constexpr int kMaskToken = 2;
inline constexpr int kFirstRegularToken = 3;

// A tokenized input: [CLS] a [SEP] or [CLS] a [SEP] b [SEP]. Sequences are
// processed at their own length; there is no padding.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<int> segment_ids;        // 0 or 1 per position
  std::vector<int> special_positions;  // [CLS] position plus every [SEP], ascending

  std::size_t length() const { return ids.size(); }
  int n_segments() const;
  bool is_special(int pos) const;

  // Throws DataError on any violated invariant: leading [CLS], at least one
  // [SEP], ids within the vocabulary, length within max_len.
  void validate(int vocab_size, int max_len) const;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

// Wraps raw token ids with the special tokens and segment ids. segment_b may
// be empty for single-sentence inputs. The first [SEP] belongs to segment 0.
TokenSequence make_sequence(const std::vector<int>& segment_a,
                            const std::vector<int>& segment_b = {});

}  // namespace atnatlas
