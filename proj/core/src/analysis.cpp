#include "atnatlas/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "atnatlas/errors.hpp"
#include "atnatlas/rng.hpp"

namespace atnatlas {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

AttentionTensor capture_attention(const ModelConfig& config, const Parameters& params,
                                  const TokenSequence& seq,
                                  const AblationSpec& ablation = {}) {
  ForwardOptions options;
  options.capture_attention = true;
  options.ablation = ablation;
  ForwardResult res = forward(config, params, seq, options);
  return std::move(*res.attention);
}

std::vector<int> span_positions(const Span& s) {
  std::vector<int> out(s.len);
  for (int i = 0; i < s.len; ++i) out[i] = s.start + i;
  return out;
}

}  // namespace

const char* pattern_class_name(PatternClass cls) {
  switch (cls) {
    case PatternClass::Vertical: return "vertical";
    case PatternClass::Diagonal: return "diagonal";
    case PatternClass::VerticalDiagonal: return "vertical_diagonal";
    case PatternClass::Block: return "block";
    case PatternClass::Heterogeneous: return "heterogeneous";
  }
  return "heterogeneous";
}

PatternStats pattern_features(const Matrix& map, const std::vector<int>& special_positions,
                              const std::vector<int>& segment_ids, int diag_band) {
  const std::size_t len = map.rows();
  if (map.cols() != len) {
    throw DataError("pattern_features: map must be square, got " + map.shape_str());
  }
  if (segment_ids.size() != len) {
    throw DataError("pattern_features: segment_ids length " +
                    std::to_string(segment_ids.size()) + " != map size " + std::to_string(len));
  }
  for (int p : special_positions) {
    if (p < 0 || static_cast<std::size_t>(p) >= len) {
      throw DataError("pattern_features: special position out of range");
    }
  }

  PatternStats stats;
  stats.len = len;
  const int max_seg =
      segment_ids.empty() ? 0 : *std::max_element(segment_ids.begin(), segment_ids.end());
  stats.two_segments = max_seg >= 1;

  std::vector<char> is_special(len, 0);
  for (int p : special_positions) is_special[p] = 1;

  double diag = 0.0, vert = 0.0, same = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const auto row = map.row(i);
    for (std::size_t j = 0; j < len; ++j) {
      const double v = row[j];
      const long dist = std::labs(static_cast<long>(i) - static_cast<long>(j));
      if (dist <= diag_band) diag += v;
      if (is_special[j]) vert += v;
      if (segment_ids[i] == segment_ids[j]) {
        same += v;
      } else {
        cross += v;
      }
    }
  }
  const double total = static_cast<double>(len);  // L rows, each summing to 1
  stats.diag_mass = diag / total;
  stats.vert_mass = vert / total;
  stats.block_mass = (same - cross) / total;
  return stats;
}

PatternClass classify_pattern(const PatternStats& stats, const PatternThresholds& th) {
  if (stats.vert_mass >= th.vert_hi && stats.diag_mass < th.diag_lo) {
    return PatternClass::Vertical;
  }
  if (stats.diag_mass >= th.diag_hi && stats.vert_mass < th.vert_lo) {
    return PatternClass::Diagonal;
  }
  if (stats.vert_mass >= th.vert_lo && stats.diag_mass >= th.diag_lo) {
    return PatternClass::VerticalDiagonal;
  }
  if (stats.two_segments && stats.block_mass >= th.block_hi) {
    return PatternClass::Block;
  }
  return PatternClass::Heterogeneous;
}

PatternDistribution pattern_distribution(const ModelConfig& config, const Parameters& params,
                                         const Dataset& dataset, std::size_t limit,
                                         const PatternThresholds& thresholds,
                                         const AblationSpec& ablation) {
  if (dataset.empty()) throw DataError("pattern_distribution: empty dataset");
  PatternDistribution dist;
  dist.n_layers = config.n_layers;
  dist.n_heads = config.n_heads;
  dist.per_head.resize(static_cast<std::size_t>(config.n_layers) * config.n_heads);

  const std::size_t n = std::min(limit, dataset.size());
  for (std::size_t e = 0; e < n; ++e) {
    const Example& ex = dataset[e];
    AttentionTensor attn = capture_attention(config, params, ex.seq, ablation);
    for (int l = 0; l < config.n_layers; ++l) {
      for (int h = 0; h < config.n_heads; ++h) {
        const PatternStats stats =
            pattern_features(attn.at(l, h), ex.seq.special_positions, ex.seq.segment_ids,
                             thresholds.diag_band);
        const PatternClass cls = classify_pattern(stats, thresholds);
        dist.head_counts(l, h)[cls] += 1;
        dist.fractions[cls] += 1.0;
        dist.n_maps += 1;
      }
    }
  }
  for (auto& [cls, count] : dist.fractions) count /= static_cast<double>(dist.n_maps);
  return dist;
}

int span_distance(const Span& a, const Span& b) {
  int best = std::numeric_limits<int>::max();
  for (int i = a.start; i < a.start + a.len; ++i) {
    for (int j = b.start; j < b.start + b.len; ++j) {
      best = std::min(best, std::abs(i - j));
    }
  }
  return best;
}

Dataset filter_annotations(const Dataset& annotations, int max_elem_tokens,
                           int max_sent_tokens, int min_pair_distance) {
  Dataset kept;
  for (const Example& ex : annotations) {
    if (ex.relation_pairs.empty()) continue;  // nothing annotated
    const int body_tokens =
        static_cast<int>(ex.seq.length()) - static_cast<int>(ex.seq.special_positions.size());
    if (body_tokens > max_sent_tokens) continue;
    bool ok = true;
    for (const RelationPair& pair : ex.relation_pairs) {
      if (pair.element.len > max_elem_tokens) ok = false;
      if (span_distance(pair.predicate, pair.element) < min_pair_distance) ok = false;
    }
    if (ok) kept.push_back(ex);
  }
  return kept;
}

Matrix relation_scores_for_example(const AttentionTensor& attention,
                                   const std::vector<RelationPair>& pairs) {
  if (pairs.empty()) throw DataError("relation_scores_for_example: no annotated pairs");
  Matrix scores(attention.n_layers, attention.n_heads);
  for (int l = 0; l < attention.n_layers; ++l) {
    for (int h = 0; h < attention.n_heads; ++h) {
      const Matrix& map = attention.at(l, h);
      double best = 0.0;
      for (const RelationPair& pair : pairs) {
        for (int i : span_positions(pair.predicate)) {
          for (int j : span_positions(pair.element)) {
            if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= attention.len ||
                static_cast<std::size_t>(j) >= attention.len) {
              throw DataError("relation_scores_for_example: span position out of range");
            }
            best = std::max(best, std::max(map(i, j), map(j, i)));
          }
        }
      }
      scores(l, h) = best;
    }
  }
  return scores;
}

HeadScoreMap relation_head_scores(const ModelConfig& config, const Parameters& params,
                                  const Dataset& annotations, const AblationSpec& ablation) {
  if (annotations.empty()) throw DataError("relation_head_scores: empty annotation set");
  HeadScoreMap result;
  result.scores = Matrix(config.n_layers, config.n_heads);
  for (const Example& ex : annotations) {
    AttentionTensor attn = capture_attention(config, params, ex.seq, ablation);
    const Matrix scores = relation_scores_for_example(attn, ex.relation_pairs);
    for (std::size_t i = 0; i < scores.size(); ++i) result.scores.data()[i] += scores.data()[i];
    result.n_examples += 1;
  }
  const double inv = 1.0 / static_cast<double>(result.n_examples);
  for (std::size_t i = 0; i < result.scores.size(); ++i) result.scores.data()[i] *= inv;
  return result;
}

double percentile_linear(std::vector<double> values, double percentile) {
  if (values.empty()) throw DataError("percentile_linear: empty input");
  if (percentile < 0.0 || percentile > 100.0) {
    throw DataError("percentile_linear: percentile must lie in [0,100]");
  }
  std::sort(values.begin(), values.end());
  const double pos = percentile / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::vector<HeadCoord> detect_relation_heads(const HeadScoreMap& scores, double percentile) {
  const Matrix& grid = scores.scores;
  if (grid.empty()) throw DataError("detect_relation_heads: empty score map");
  std::vector<double> flat(grid.data(), grid.data() + grid.size());
  const double threshold = percentile_linear(flat, percentile);
  std::vector<HeadCoord> heads;
  for (std::size_t l = 0; l < grid.rows(); ++l) {
    for (std::size_t h = 0; h < grid.cols(); ++h) {
      if (grid(l, h) > threshold) heads.push_back({static_cast<int>(l), static_cast<int>(h)});
    }
  }
  return heads;
}

double cosine_flat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DataError("cosine_flat: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a.data()[i] * b.data()[i];
    na += a.data()[i] * a.data()[i];
    nb += b.data()[i] * b.data()[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

HeadScoreMap head_cosine_similarity(const ModelConfig& config, const Parameters& params_a,
                                    const Parameters& params_b, const Dataset& dataset,
                                    std::size_t limit, std::uint64_t seed) {
  if (dataset.empty()) throw DataError("head_cosine_similarity: empty dataset");
  std::vector<std::size_t> indices(dataset.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  if (dataset.size() > limit) {
    Rng rng(seed);
    for (std::size_t i = 0; i < limit; ++i) {
      const std::size_t j = i + rng.below(indices.size() - i);
      std::swap(indices[i], indices[j]);
    }
    indices.resize(limit);
    std::sort(indices.begin(), indices.end());
  }

  HeadScoreMap result;
  result.scores = Matrix(config.n_layers, config.n_heads);
  for (std::size_t idx : indices) {
    const TokenSequence& seq = dataset[idx].seq;
    AttentionTensor attn_a = capture_attention(config, params_a, seq);
    AttentionTensor attn_b = capture_attention(config, params_b, seq);
    for (int l = 0; l < config.n_layers; ++l) {
      for (int h = 0; h < config.n_heads; ++h) {
        result.scores(l, h) += cosine_flat(attn_a.at(l, h), attn_b.at(l, h));
      }
    }
    result.n_examples += 1;
  }
  const double inv = 1.0 / static_cast<double>(result.n_examples);
  for (std::size_t i = 0; i < result.scores.size(); ++i) result.scores.data()[i] *= inv;
  return result;
}

std::vector<double> layer_means(const HeadScoreMap& scores) {
  std::vector<double> means(scores.scores.rows());
  for (std::size_t l = 0; l < scores.scores.rows(); ++l) {
    double sum = 0.0;
    for (std::size_t h = 0; h < scores.scores.cols(); ++h) sum += scores.scores(l, h);
    means[l] = sum / static_cast<double>(scores.scores.cols());
  }
  return means;
}

FeatureSpec FeatureSpec::for_role(TokenRole role) {
  FeatureSpec f;
  f.kind = Kind::Role;
  f.role = role;
  return f;
}

FeatureSpec FeatureSpec::for_tokens(std::vector<int> ids) {
  if (ids.empty()) throw DataError("feature: empty token list");
  FeatureSpec f;
  f.kind = Kind::TokenList;
  f.token_ids = std::move(ids);
  return f;
}

FeatureSpec FeatureSpec::cls() {
  FeatureSpec f;
  f.kind = Kind::ClsToken;
  return f;
}

FeatureSpec FeatureSpec::sep() {
  FeatureSpec f;
  f.kind = Kind::SepToken;
  return f;
}

std::string FeatureSpec::describe() const {
  switch (kind) {
    case Kind::Role: return std::string("role:") + role_name(role);
    case Kind::TokenList: return "tokens(" + std::to_string(token_ids.size()) + ")";
    case Kind::ClsToken: return "[CLS]";
    case Kind::SepToken: return "[SEP]";
  }
  return "?";
}

std::vector<int> feature_positions(const FeatureSpec& feature, const Example& example) {
  std::vector<int> positions;
  const std::size_t len = example.seq.length();
  for (std::size_t i = 0; i < len; ++i) {
    bool match = false;
    switch (feature.kind) {
      case FeatureSpec::Kind::Role:
        match = i < example.roles.size() && example.roles[i] == feature.role;
        break;
      case FeatureSpec::Kind::TokenList:
        match = std::find(feature.token_ids.begin(), feature.token_ids.end(),
                          example.seq.ids[i]) != feature.token_ids.end();
        break;
      case FeatureSpec::Kind::ClsToken:
        match = example.seq.ids[i] == kClsToken;
        break;
      case FeatureSpec::Kind::SepToken:
        match = example.seq.ids[i] == kSepToken;
        break;
    }
    if (match) positions.push_back(static_cast<int>(i));
  }
  return positions;
}

Matrix feature_scores_for_example(const AttentionTensor& attention,
                                  const std::vector<int>& positions) {
  if (positions.empty()) throw DataError("feature_scores_for_example: no feature positions");
  Matrix scores(attention.n_layers, attention.n_heads);
  const double inv_len = 1.0 / static_cast<double>(attention.len);
  for (int l = 0; l < attention.n_layers; ++l) {
    for (int h = 0; h < attention.n_heads; ++h) {
      const Matrix& map = attention.at(l, h);
      double best = 0.0;
      for (int k : positions) {
        if (k < 0 || static_cast<std::size_t>(k) >= attention.len) {
          throw DataError("feature_scores_for_example: position out of range");
        }
        double colsum = 0.0;
        for (std::size_t i = 0; i < attention.len; ++i) colsum += map(i, k);
        best = std::max(best, colsum * inv_len);
      }
      scores(l, h) = best;
    }
  }
  return scores;
}

HeadScoreMap feature_attention_map(const ModelConfig& config, const Parameters& params,
                                   const Dataset& dataset, const FeatureSpec& feature,
                                   const AblationSpec& ablation) {
  HeadScoreMap result;
  result.scores = Matrix(config.n_layers, config.n_heads);
  for (const Example& ex : dataset) {
    const std::vector<int> positions = feature_positions(feature, ex);
    if (positions.empty()) continue;  // sentences without the feature are disregarded
    AttentionTensor attn = capture_attention(config, params, ex.seq, ablation);
    const Matrix scores = feature_scores_for_example(attn, positions);
    for (std::size_t i = 0; i < scores.size(); ++i) result.scores.data()[i] += scores.data()[i];
    result.n_examples += 1;
  }
  if (result.n_examples == 0) {
    throw DataError("feature_attention_map: feature " + feature.describe() +
                    " matched 0 examples");
  }
  const double inv = 1.0 / static_cast<double>(result.n_examples);
  for (std::size_t i = 0; i < result.scores.size(); ++i) result.scores.data()[i] *= inv;
  return result;
}

ClsProfile cls_attention_profile(const ModelConfig& config, const Parameters& params,
                                 const Dataset& dataset, const AblationSpec& ablation) {
  if (dataset.empty()) throw DataError("cls_attention_profile: empty dataset");
  ClsProfile profile;
  profile.per_head.resize(config.n_heads);
  const int last = config.n_layers - 1;
  for (const Example& ex : dataset) {
    AttentionTensor attn = capture_attention(config, params, ex.seq, ablation);
    for (int h = 0; h < config.n_heads; ++h) {
      const Matrix& map = attn.at(last, h);
      auto& shares = profile.per_head[h];
      for (std::size_t j = 0; j < ex.seq.length(); ++j) {
        shares[ex.roles[j]] += map(0, j);
      }
    }
    profile.n_examples += 1;
  }
  const double inv = 1.0 / static_cast<double>(profile.n_examples);
  for (auto& shares : profile.per_head) {
    for (auto& [role, share] : shares) share *= inv;
  }
  return profile;
}

HeadScoreMap token_to_token_scores(const ModelConfig& config, const Parameters& params,
                                   const Dataset& dataset, TokenRole source_role,
                                   TokenRole target_role, int min_distance,
                                   const AblationSpec& ablation) {
  if (dataset.empty()) throw DataError("token_to_token_scores: empty dataset");
  if (min_distance < 0) throw DataError("token_to_token_scores: negative min_distance");
  HeadScoreMap result;
  result.scores = Matrix(config.n_layers, config.n_heads);
  bool saw_source = false, saw_target = false;
  for (const Example& ex : dataset) {
    std::vector<int> sources, targets;
    for (std::size_t i = 0; i < ex.roles.size(); ++i) {
      if (ex.roles[i] == source_role) sources.push_back(static_cast<int>(i));
      if (ex.roles[i] == target_role) targets.push_back(static_cast<int>(i));
    }
    saw_source = saw_source || !sources.empty();
    saw_target = saw_target || !targets.empty();
    std::vector<std::pair<int, int>> pairs;
    for (int s : sources) {
      for (int t : targets) {
        if (std::abs(s - t) >= min_distance) pairs.emplace_back(s, t);
      }
    }
    if (pairs.empty()) continue;
    AttentionTensor attn = capture_attention(config, params, ex.seq, ablation);
    const double inv_pairs = 1.0 / static_cast<double>(pairs.size());
    for (int l = 0; l < config.n_layers; ++l) {
      for (int h = 0; h < config.n_heads; ++h) {
        const Matrix& map = attn.at(l, h);
        double sum = 0.0;
        for (const auto& [s, t] : pairs) sum += map(s, t);
        result.scores(l, h) += sum * inv_pairs;
      }
    }
    result.n_examples += 1;
  }
  if (!saw_source || !saw_target) {
    throw DataError(std::string("token_to_token_scores: role ") +
                    (!saw_source ? role_name(source_role) : role_name(target_role)) +
                    " absent from dataset");
  }
  if (result.n_examples == 0) {
    throw DataError("token_to_token_scores: no source/target pairs at distance >= " +
                    std::to_string(min_distance));
  }
  const double inv = 1.0 / static_cast<double>(result.n_examples);
  for (std::size_t i = 0; i < result.scores.size(); ++i) result.scores.data()[i] *= inv;
  return result;
}

void write_head_scores_csv(const std::string& path, const HeadScoreMap& scores) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << "layer,head,score\n";
  for (std::size_t l = 0; l < scores.scores.rows(); ++l) {
    for (std::size_t h = 0; h < scores.scores.cols(); ++h) {
      out << l << ',' << h << ',' << fmt_double(scores.scores(l, h)) << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_pattern_fractions_csv(const std::string& path, const PatternDistribution& dist) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << "class,fraction\n";
  for (PatternClass cls : kAllPatternClasses) {
    const auto it = dist.fractions.find(cls);
    const double f = it == dist.fractions.end() ? 0.0 : it->second;
    out << pattern_class_name(cls) << ',' << fmt_double(f) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

void write_pattern_per_head_csv(const std::string& path, const PatternDistribution& dist) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << "layer,head,class,count\n";
  for (int l = 0; l < dist.n_layers; ++l) {
    for (int h = 0; h < dist.n_heads; ++h) {
      for (PatternClass cls : kAllPatternClasses) {
        const auto& counts = dist.head_counts(l, h);
        const auto it = counts.find(cls);
        const std::size_t c = it == counts.end() ? 0 : it->second;
        out << l << ',' << h << ',' << pattern_class_name(cls) << ',' << c << '\n';
      }
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace atnatlas
