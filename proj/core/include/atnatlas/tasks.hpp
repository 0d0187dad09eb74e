#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atnatlas/encoder.hpp"
#include "atnatlas/rng.hpp"
#include "atnatlas/sequence.hpp"

namespace atnatlas {

enum class TokenRole {
  Noun,
  Verb,
  Pronoun,
  SubjectMark,
  ObjectMark,
  Negation,
  Filler,
  Cls,
  Sep,
};

const char* role_name(TokenRole role);
TokenRole role_from_name(const std::string& name);

// Token span in full-sequence coordinates ([CLS] is position 0).
struct Span {
  int start = 0;
  int len = 1;
  friend bool operator==(const Span&, const Span&) = default;
};

// Ground-truth link between a predicate (verb) span and its subject span.
struct RelationPair {
  Span predicate;
  Span element;
  friend bool operator==(const RelationPair&, const RelationPair&) = default;
};

struct Example {
  TokenSequence seq;
  std::vector<TokenRole> roles;  // one per position, including specials
  int label = 0;
  int n_segments = 1;
  std::vector<RelationPair> relation_pairs;
  friend bool operator==(const Example&, const Example&) = default;
};

using Dataset = std::vector<Example>;

struct RolePool {
  int first = 0;
  int count = 0;
};

// Synthetic corpus generator. The vocabulary after the reserved ids is
// partitioned into disjoint role pools; sentences come from a fixed template
// set whose verb is determined by the subject token, which gives masked-token
// prediction something learnable and gives relation probing a ground truth.
struct SyntheticGrammar {
  int vocab_size = 64;
  double negation_prob = 0.3;   // chance a sentence carries a negation token
  double corruption_rate = 0.5; // chance a pair example gets a corrupted B side
  double shuffle_prob = 0.5;    // chance segment B is order-shuffled (both classes)
  double corrupt_fraction = 0.5;  // fraction of B tokens resampled when corrupted
  std::uint64_t seed = 1;

  RolePool pool(TokenRole role) const;
  void validate() const;
};

// One-segment sentences; label = 1 iff a negation token is present.
Dataset generate_single_task(const SyntheticGrammar& grammar, std::size_t n);

// Two-segment examples; label = 1 iff segment B is a (possibly shuffled)
// copy of segment A, 0 for a corrupted variant.
Dataset generate_pair_task(const SyntheticGrammar& grammar, std::size_t n);

// One-segment sentences that always carry verb-subject relation pairs.
Dataset generate_relation_annotations(const SyntheticGrammar& grammar, std::size_t n);

struct MaskedExample {
  TokenSequence seq;                  // ids with [MASK] substituted
  std::vector<MaskedTarget> targets;  // ascending positions, original ids
};

// Masks non-special positions independently at mask_rate, conditioned on at
// least one mask. The conditioning is exact: the mask count is drawn from the
// binomial distribution restricted to >= 1 (equivalent to resampling empty
// patterns), then positions are a uniform subset of that size.
MaskedExample mask_tokens(const Example& example, double mask_rate, Rng& rng);

enum class MetricKind { Accuracy, F1 };

MetricKind metric_from_name(const std::string& name);
const char* metric_name(MetricKind kind);

// Accuracy, or F1 on the positive class (F1 = 0 when precision + recall = 0).
double metric(MetricKind kind, const std::vector<int>& predictions,
              const std::vector<int>& labels);

// One JSON object per line: ids, segment_ids, roles, label, relation_pairs.
void write_dataset_jsonl(const std::string& path, const Dataset& dataset);
Dataset read_dataset_jsonl(const std::string& path);

// Feature-list file: one token id per line.
std::vector<int> read_token_list(const std::string& path);

}  // namespace atnatlas
