#include "atnatlas/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "atnatlas/errors.hpp"
#include "atnatlas/rng.hpp"
#include "encoder_internal.hpp"

namespace atnatlas {

namespace {
constexpr double kInitStd = 0.02;
}

void ModelConfig::validate() const {
  if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_ff < 1 || vocab_size < 1 ||
      max_len < 1 || n_segments < 1) {
    throw DataError("config: all dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw DataError("config: d_model " + std::to_string(d_model) +
                    " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (max_len < 3) throw DataError("config: max_len must be at least 3");
  if (n_segments > 2) throw DataError("config: at most two segments supported");
  if (vocab_size <= kFirstRegularToken) {
    throw DataError("config: vocab_size must exceed the reserved token ids");
  }
  if (!(eps_ln > 0.0)) throw DataError("config: eps_ln must be positive");
}

AblationSpec AblationSpec::single(int layer, int head) {
  AblationSpec s;
  s.add({layer, head});
  return s;
}

AblationSpec AblationSpec::whole_layer(int layer, int n_heads) {
  AblationSpec s;
  for (int h = 0; h < n_heads; ++h) s.add({layer, h});
  return s;
}

AblationSpec AblationSpec::all_heads(const ModelConfig& config) {
  AblationSpec s;
  for (int l = 0; l < config.n_layers; ++l)
    for (int h = 0; h < config.n_heads; ++h) s.add({l, h});
  return s;
}

void AblationSpec::validate(const ModelConfig& config) const {
  for (const auto& c : disabled_) {
    if (c.layer < 0 || c.layer >= config.n_layers || c.head < 0 || c.head >= config.n_heads) {
      throw DataError("ablation: head (" + std::to_string(c.layer) + "," +
                      std::to_string(c.head) + ") outside " + std::to_string(config.n_layers) +
                      "x" + std::to_string(config.n_heads) + " grid");
    }
  }
}

Parameters Parameters::zeros(const ModelConfig& config) {
  config.validate();
  Parameters p;
  const std::size_t d = config.d_model;
  const std::size_t ff = config.d_ff;
  p.tok_embed = Matrix(config.vocab_size, d);
  p.pos_embed = Matrix(config.max_len, d);
  p.seg_embed = Matrix(config.n_segments, d);
  p.layers.resize(config.n_layers);
  for (auto& l : p.layers) {
    l.wq = Matrix(d, d);
    l.bq = Matrix(1, d);
    l.wk = Matrix(d, d);
    l.bk = Matrix(1, d);
    l.wv = Matrix(d, d);
    l.bv = Matrix(1, d);
    l.wo = Matrix(d, d);
    l.bo = Matrix(1, d);
    l.ln1_gain = Matrix(1, d);
    l.ln1_bias = Matrix(1, d);
    l.ffn_w1 = Matrix(d, ff);
    l.ffn_b1 = Matrix(1, ff);
    l.ffn_w2 = Matrix(ff, d);
    l.ffn_b2 = Matrix(1, d);
    l.ln2_gain = Matrix(1, d);
    l.ln2_bias = Matrix(1, d);
  }
  p.pooler_w = Matrix(d, d);
  p.pooler_b = Matrix(1, d);
  p.task_w = Matrix(d, kTaskClasses);
  p.task_b = Matrix(1, kTaskClasses);
  p.mlm_w = Matrix(d, config.vocab_size);
  p.mlm_b = Matrix(1, config.vocab_size);
  return p;
}

bool Parameters::all_finite() const {
  bool ok = true;
  for_each_param(*this, [&](const std::string&, const Matrix& m) { ok = ok && m.all_finite(); });
  return ok;
}

Parameters init_params(const ModelConfig& config, std::uint64_t seed) {
  Parameters p = Parameters::zeros(config);
  Rng rng(seed);
  for_each_param(p, [&](const std::string& name, Matrix& m) {
    const std::string leaf = name.substr(name.rfind('.') + 1);
    if (leaf.find("gain") != std::string::npos) {
      std::fill(m.data(), m.data() + m.size(), 1.0);
    } else if (leaf[0] == 'b' || leaf.find("_b") != std::string::npos) {
      // biases stay zero
    } else {
      for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = kInitStd * rng.normal();
    }
  });
  return p;
}

AttentionHeadResult attention_head(const Matrix& q, const Matrix& k, const Matrix& v,
                                   std::size_t len, bool ablated) {
  if (q.rows() != len || k.rows() != len || v.rows() != len || q.cols() != k.cols() ||
      q.cols() != v.cols()) {
    throw DataError("attention_head: expected three " + std::to_string(len) +
                    "-row matrices of equal width, got q=" + q.shape_str() +
                    " k=" + k.shape_str() + " v=" + v.shape_str());
  }
  AttentionHeadResult out;
  if (ablated) {
    out.map = Matrix(len, len, 1.0 / static_cast<double>(len));
  } else {
    Matrix scores = matmul_nt(q, k);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    for (std::size_t i = 0; i < scores.size(); ++i) scores.data()[i] *= inv_sqrt;
    out.map = softmax_rows(scores);
  }
  out.context = matmul(out.map, v);
  return out;
}

namespace detail {

Matrix linear(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix out = matmul(x, w);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    const auto bias = b.row(0);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
  return out;
}

Matrix slice_cols(const Matrix& m, std::size_t c0, std::size_t c1) {
  Matrix out(m.rows(), c1 - c0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto src = m.row(i);
    auto dst = out.row(i);
    std::copy(src.begin() + c0, src.begin() + c1, dst.begin());
  }
  return out;
}

void set_cols(Matrix& dst, std::size_t c0, const Matrix& src) {
  for (std::size_t i = 0; i < src.rows(); ++i) {
    const auto s = src.row(i);
    auto d = dst.row(i);
    std::copy(s.begin(), s.end(), d.begin() + c0);
  }
}

Matrix colsum(const Matrix& m) {
  Matrix out(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out(0, j) += r[j];
  }
  return out;
}

void layer_norm_rows(const Matrix& in, const Matrix& gain, const Matrix& bias, double eps,
                     Matrix& out, LayerNormCache& cache) {
  const std::size_t n = in.cols();
  out = Matrix(in.rows(), n);
  cache.normalized = Matrix(in.rows(), n);
  cache.inv_std.assign(in.rows(), 0.0);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto x = in.row(r);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    cache.inv_std[r] = inv_std;
    auto y = cache.normalized.row(r);
    auto o = out.row(r);
    const auto g = gain.row(0);
    const auto b = bias.row(0);
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = (x[j] - mean) * inv_std;
      o[j] = g[j] * y[j] + b[j];
    }
  }
}

void run_forward_cached(const ModelConfig& config, const Parameters& params,
                        const TokenSequence& seq, const AblationSpec& ablation,
                        ForwardCache& cache) {
  const std::size_t len = seq.length();
  const std::size_t d = config.d_model;
  const std::size_t dh = config.d_head();

  cache.embeddings = Matrix(len, d);
  for (std::size_t i = 0; i < len; ++i) {
    auto dst = cache.embeddings.row(i);
    const auto tok = params.tok_embed.row(seq.ids[i]);
    const auto pos = params.pos_embed.row(i);
    const auto seg = params.seg_embed.row(seq.segment_ids[i]);
    for (std::size_t j = 0; j < d; ++j) dst[j] = tok[j] + pos[j] + seg[j];
  }

  cache.layers.assign(config.n_layers, {});
  const Matrix* x = &cache.embeddings;
  for (int l = 0; l < config.n_layers; ++l) {
    LayerCache& lc = cache.layers[l];
    const LayerParams& lp = params.layers[l];
    lc.x_in = *x;
    lc.q = linear(lc.x_in, lp.wq, lp.bq);
    lc.k = linear(lc.x_in, lp.wk, lp.bk);
    lc.v = linear(lc.x_in, lp.wv, lp.bv);
    lc.probs.resize(config.n_heads);
    lc.heads = Matrix(len, d);
    for (int h = 0; h < config.n_heads; ++h) {
      const std::size_t c0 = h * dh;
      auto res = attention_head(slice_cols(lc.q, c0, c0 + dh), slice_cols(lc.k, c0, c0 + dh),
                                slice_cols(lc.v, c0, c0 + dh), len, ablation.contains(l, h));
      lc.probs[h] = std::move(res.map);
      set_cols(lc.heads, c0, res.context);
    }
    Matrix attn_out = linear(lc.heads, lp.wo, lp.bo);
    lc.r1 = lc.x_in;
    for (std::size_t i = 0; i < lc.r1.size(); ++i) lc.r1.data()[i] += attn_out.data()[i];
    layer_norm_rows(lc.r1, lp.ln1_gain, lp.ln1_bias, config.eps_ln, lc.x_mid, lc.ln1);

    lc.ffn_pre = linear(lc.x_mid, lp.ffn_w1, lp.ffn_b1);
    lc.ffn_act = Matrix(len, config.d_ff);
    for (std::size_t i = 0; i < lc.ffn_pre.size(); ++i) {
      lc.ffn_act.data()[i] = gelu(lc.ffn_pre.data()[i]);
    }
    Matrix ffn_out = linear(lc.ffn_act, lp.ffn_w2, lp.ffn_b2);
    lc.r2 = lc.x_mid;
    for (std::size_t i = 0; i < lc.r2.size(); ++i) lc.r2.data()[i] += ffn_out.data()[i];
    layer_norm_rows(lc.r2, lp.ln2_gain, lp.ln2_bias, config.eps_ln, lc.x_out, lc.ln2);
    x = &lc.x_out;
  }

  // Task head reads the final-layer [CLS] position through a tanh pooler.
  Matrix cls_row(1, d);
  std::copy(x->row(0).begin(), x->row(0).end(), cls_row.row(0).begin());
  cache.pooled_pre = linear(cls_row, params.pooler_w, params.pooler_b);
  cache.pooled = Matrix(1, d);
  for (std::size_t j = 0; j < d; ++j) cache.pooled(0, j) = std::tanh(cache.pooled_pre(0, j));
  Matrix logits = linear(cache.pooled, params.task_w, params.task_b);
  cache.task_logits.assign(logits.row(0).begin(), logits.row(0).end());
}

}  // namespace detail

ForwardResult forward(const ModelConfig& config, const Parameters& params,
                      const TokenSequence& seq, const ForwardOptions& options) {
  config.validate();
  seq.validate(config.vocab_size, config.max_len);
  options.ablation.validate(config);

  detail::ForwardCache cache;
  detail::run_forward_cached(config, params, seq, options.ablation, cache);

  ForwardResult res;
  res.task_logits = cache.task_logits;
  if (options.compute_mlm) {
    res.mlm_logits = detail::linear(cache.final_x(), params.mlm_w, params.mlm_b);
  }
  if (options.capture_attention) {
    AttentionTensor attn(config.n_layers, config.n_heads, seq.length());
    for (int l = 0; l < config.n_layers; ++l)
      for (int h = 0; h < config.n_heads; ++h) attn.at(l, h) = cache.layers[l].probs[h];
    res.attention = std::move(attn);
  }
  return res;
}

double cross_entropy(std::span<const double> logits, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw DataError("cross_entropy: target " + std::to_string(target) + " out of range");
  }
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  return std::log(sum) - (logits[target] - mx);
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace atnatlas
