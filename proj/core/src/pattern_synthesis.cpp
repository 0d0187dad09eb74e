#include <algorithm>
#include <map>

#include "atnatlas/analysis.hpp"
#include "atnatlas/errors.hpp"
#include "atnatlas/rng.hpp"

namespace atnatlas {

namespace {

std::vector<double> random_stochastic_row(std::size_t len, Rng& rng) {
  std::vector<double> row(len);
  double sum = 0.0;
  for (double& v : row) {
    v = rng.uniform() + 1e-9;
    sum += v;
  }
  for (double& v : row) v /= sum;
  return row;
}

void base_row(PatternClass cls, std::size_t i, std::size_t len,
              const std::vector<int>& specials, const std::vector<int>& segments,
              std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  switch (cls) {
    case PatternClass::Vertical: {
      const double w = 1.0 / static_cast<double>(specials.size());
      for (int p : specials) out[p] += w;
      break;
    }
    case PatternClass::Diagonal: {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = std::min(len - 1, i + 1);
      const double w = 1.0 / static_cast<double>(hi - lo + 1);
      for (std::size_t j = lo; j <= hi; ++j) out[j] = w;
      break;
    }
    case PatternClass::VerticalDiagonal: {
      std::vector<double> v(len), d(len);
      base_row(PatternClass::Vertical, i, len, specials, segments, v);
      base_row(PatternClass::Diagonal, i, len, specials, segments, d);
      for (std::size_t j = 0; j < len; ++j) out[j] = 0.5 * v[j] + 0.5 * d[j];
      break;
    }
    case PatternClass::Block: {
      std::size_t same = 0;
      for (std::size_t j = 0; j < len; ++j) {
        if (segments[j] == segments[i]) ++same;
      }
      const double w = 1.0 / static_cast<double>(same);
      for (std::size_t j = 0; j < len; ++j) {
        if (segments[j] == segments[i]) out[j] = w;
      }
      break;
    }
    case PatternClass::Heterogeneous:
      break;  // handled by the caller, fully random
  }
}

}  // namespace

LabeledMap make_canonical_map(PatternClass cls, std::size_t len, bool two_segments,
                              double noise, Rng& rng) {
  if (len < 4) throw DataError("make_canonical_map: len must be at least 4");
  if (noise < 0.0 || noise > 1.0) throw DataError("make_canonical_map: noise must lie in [0,1]");
  if (cls == PatternClass::Block) two_segments = true;

  LabeledMap out;
  out.label = cls;
  out.segment_ids.assign(len, 0);
  if (two_segments) {
    const auto mid = static_cast<int>(len / 2);  // first [SEP]
    out.special_positions = {0, mid, static_cast<int>(len) - 1};
    for (std::size_t j = mid + 1; j < len; ++j) out.segment_ids[j] = 1;
  } else {
    out.special_positions = {0, static_cast<int>(len) - 1};
  }

  out.map = Matrix(len, len);
  std::vector<double> base(len);
  for (std::size_t i = 0; i < len; ++i) {
    auto row = out.map.row(i);
    if (cls == PatternClass::Heterogeneous) {
      const std::vector<double> rand = random_stochastic_row(len, rng);
      std::copy(rand.begin(), rand.end(), row.begin());
      continue;
    }
    base_row(cls, i, len, out.special_positions, out.segment_ids, base);
    const std::vector<double> rand = random_stochastic_row(len, rng);
    for (std::size_t j = 0; j < len; ++j) {
      row[j] = (1.0 - noise) * base[j] + noise * rand[j];
    }
  }
  return out;
}

std::vector<LabeledMap> make_labeled_maps(std::size_t n, double max_noise, Rng& rng) {
  std::vector<LabeledMap> maps;
  maps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PatternClass cls = kAllPatternClasses[rng.below(kAllPatternClasses.size())];
    const std::size_t len = 16 + rng.below(13);  // 16..28
    const bool two_segments = cls == PatternClass::Block || rng.below(2) == 1;
    const double noise = rng.uniform() * max_noise;
    maps.push_back(make_canonical_map(cls, len, two_segments, noise, rng));
  }
  return maps;
}

double classifier_macro_f1(const std::vector<LabeledMap>& maps,
                           const PatternThresholds& thresholds) {
  if (maps.empty()) throw DataError("classifier_macro_f1: empty map set");
  std::map<PatternClass, std::size_t> tp, fp, fn;
  for (const LabeledMap& lm : maps) {
    const PatternStats stats = pattern_features(lm.map, lm.special_positions, lm.segment_ids,
                                                thresholds.diag_band);
    const PatternClass pred = classify_pattern(stats, thresholds);
    if (pred == lm.label) {
      tp[lm.label] += 1;
    } else {
      fp[pred] += 1;
      fn[lm.label] += 1;
    }
  }
  double sum_f1 = 0.0;
  std::size_t n_classes = 0;
  for (PatternClass cls : kAllPatternClasses) {
    const double t = static_cast<double>(tp[cls]);
    const double p_den = t + static_cast<double>(fp[cls]);
    const double r_den = t + static_cast<double>(fn[cls]);
    if (p_den == 0.0 && r_den == 0.0) continue;  // class absent entirely
    const double precision = p_den == 0.0 ? 0.0 : t / p_den;
    const double recall = r_den == 0.0 ? 0.0 : t / r_den;
    sum_f1 += precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    n_classes += 1;
  }
  return sum_f1 / static_cast<double>(n_classes);
}

}  // namespace atnatlas
