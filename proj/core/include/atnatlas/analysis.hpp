#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "atnatlas/encoder.hpp"
#include "atnatlas/tasks.hpp"

namespace atnatlas {

enum class PatternClass { Vertical, Diagonal, VerticalDiagonal, Block, Heterogeneous };

inline constexpr std::array<PatternClass, 5> kAllPatternClasses = {
    PatternClass::Vertical, PatternClass::Diagonal, PatternClass::VerticalDiagonal,
    PatternClass::Block, PatternClass::Heterogeneous};

const char* pattern_class_name(PatternClass cls);

// Geometric summary of one attention map. Masses are fractions of the total
// attention mass L (each of the L rows sums to 1).
struct PatternStats {
  double diag_mass = 0.0;   // |i-j| <= band
  double vert_mass = 0.0;   // columns of the special positions
  double block_mass = 0.0;  // same-segment fraction minus cross-segment fraction
  std::size_t len = 0;
  bool two_segments = false;
};

struct PatternThresholds {
  double vert_hi = 0.5;
  double diag_hi = 0.5;
  double vert_lo = 0.25;
  double diag_lo = 0.25;
  double block_hi = 0.5;
  int diag_band = 1;  // previous/following token window
};

PatternStats pattern_features(const Matrix& map, const std::vector<int>& special_positions,
                              const std::vector<int>& segment_ids, int diag_band = 1);

// Decision list, evaluated in order: Vertical, Diagonal, Vertical+Diagonal,
// Block (two-segment inputs only), else Heterogeneous. Total by construction.
PatternClass classify_pattern(const PatternStats& stats,
                              const PatternThresholds& thresholds = {});

struct PatternDistribution {
  std::map<PatternClass, double> fractions;  // over all (example, layer, head) maps
  // per (layer, head): counts per class
  std::vector<std::map<PatternClass, std::size_t>> per_head;
  int n_layers = 0;
  int n_heads = 0;
  std::size_t n_maps = 0;

  std::map<PatternClass, std::size_t>& head_counts(int layer, int head) {
    return per_head[static_cast<std::size_t>(layer) * n_heads + head];
  }
  const std::map<PatternClass, std::size_t>& head_counts(int layer, int head) const {
    return per_head[static_cast<std::size_t>(layer) * n_heads + head];
  }
};

// Classifies every (example, layer, head) map over the first
// min(limit, |dataset|) examples.
PatternDistribution pattern_distribution(const ModelConfig& config, const Parameters& params,
                                         const Dataset& dataset, std::size_t limit = 1000,
                                         const PatternThresholds& thresholds = {},
                                         const AblationSpec& ablation = {});

// Keeps only annotations whose sentence body has at most max_sent_tokens
// tokens, whose element spans have at most max_elem_tokens tokens, and whose
// linked spans are at least min_pair_distance apart.
Dataset filter_annotations(const Dataset& annotations, int max_elem_tokens = 3,
                           int max_sent_tokens = 12, int min_pair_distance = 2);

// Span gap in tokens: minimum |a-b| over positions of the two spans.
int span_distance(const Span& a, const Span& b);

// Per-head scores over the model grid, plus how many examples entered the
// average.
struct HeadScoreMap {
  Matrix scores;  // n_layers x n_heads
  std::size_t n_examples = 0;
};

// Per head: max attention weight over the annotated token pairs of one
// example (both directions). Scoring backbone of relation-head detection.
Matrix relation_scores_for_example(const AttentionTensor& attention,
                                   const std::vector<RelationPair>& pairs);

// Mean of relation_scores_for_example over annotated examples.
HeadScoreMap relation_head_scores(const ModelConfig& config, const Parameters& params,
                                  const Dataset& annotations,
                                  const AblationSpec& ablation = {});

// Linear-interpolation percentile of the flattened grid; heads strictly
// above the threshold are returned in (layer, head) order.
std::vector<HeadCoord> detect_relation_heads(const HeadScoreMap& scores,
                                             double percentile = 99.0);

double percentile_linear(std::vector<double> values, double percentile);

// Cosine similarity between the two models' flattened maps, per head,
// averaged over up to `limit` examples (sampled without replacement when the
// dataset is larger; `seed` fixes the sample).
HeadScoreMap head_cosine_similarity(const ModelConfig& config, const Parameters& params_a,
                                    const Parameters& params_b, const Dataset& dataset,
                                    std::size_t limit = 1000, std::uint64_t seed = 1);

double cosine_flat(const Matrix& a, const Matrix& b);

// Mean head score per layer; index = layer.
std::vector<double> layer_means(const HeadScoreMap& scores);

struct FeatureSpec {
  enum class Kind { Role, TokenList, ClsToken, SepToken };
  Kind kind = Kind::Role;
  TokenRole role = TokenRole::Negation;
  std::vector<int> token_ids;  // Kind::TokenList

  static FeatureSpec for_role(TokenRole role);
  static FeatureSpec for_tokens(std::vector<int> ids);
  static FeatureSpec cls();
  static FeatureSpec sep();

  std::string describe() const;
};

// Positions of the feature in one example; empty when absent.
std::vector<int> feature_positions(const FeatureSpec& feature, const Example& example);

// Per head: column mass into the feature position, normalized by sequence
// length, maxed over multiple occurrences.
Matrix feature_scores_for_example(const AttentionTensor& attention,
                                  const std::vector<int>& positions);

// Average of feature_scores_for_example over the examples that contain the
// feature; examples without it are skipped. Rejects when no example has it.
HeadScoreMap feature_attention_map(const ModelConfig& config, const Parameters& params,
                                   const Dataset& dataset, const FeatureSpec& feature,
                                   const AblationSpec& ablation = {});

// Final-layer [CLS]-row profile: per head, the row's attention mass bucketed
// by the target token's role, averaged over examples. Buckets partition the
// row, so shares sum to 1.
struct ClsProfile {
  std::vector<std::map<TokenRole, double>> per_head;  // index = head, last layer
  std::size_t n_examples = 0;
};
ClsProfile cls_attention_profile(const ModelConfig& config, const Parameters& params,
                                 const Dataset& dataset, const AblationSpec& ablation = {});

// Per head: mean attention from source-role positions to target-role
// positions at distance >= min_distance (per example, then averaged).
HeadScoreMap token_to_token_scores(const ModelConfig& config, const Parameters& params,
                                   const Dataset& dataset, TokenRole source_role,
                                   TokenRole target_role, int min_distance = 2,
                                   const AblationSpec& ablation = {});

// CSV writers for the score and distribution outputs.
void write_head_scores_csv(const std::string& path, const HeadScoreMap& scores);
void write_pattern_fractions_csv(const std::string& path, const PatternDistribution& dist);
void write_pattern_per_head_csv(const std::string& path, const PatternDistribution& dist);

// --- synthetic labeled maps -------------------------------------------------
// Generator for classifier evaluation: canonical class geometry blended with
// a per-row random stochastic component at the given noise level.

struct LabeledMap {
  Matrix map;
  PatternClass label;
  std::vector<int> special_positions;
  std::vector<int> segment_ids;
};

LabeledMap make_canonical_map(PatternClass cls, std::size_t len, bool two_segments,
                              double noise, Rng& rng);

// n maps with uniformly chosen classes, lengths in [16, 28], and noise
// levels in [0, max_noise].
std::vector<LabeledMap> make_labeled_maps(std::size_t n, double max_noise, Rng& rng);

// Macro-averaged F1 of the decision-list classifier against the generator's
// labels.
double classifier_macro_f1(const std::vector<LabeledMap>& maps,
                           const PatternThresholds& thresholds = {});

}  // namespace atnatlas
