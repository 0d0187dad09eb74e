#include <cmath>
#include <string>
#include <vector>

#include "atnatlas/encoder.hpp"
#include "atnatlas/errors.hpp"
#include "encoder_internal.hpp"

namespace atnatlas {

namespace {

using detail::colsum;
using detail::LayerNormCache;
using detail::linear;
using detail::set_cols;
using detail::slice_cols;

// d(loss)/d(softmax input), given the softmax output p and d(loss)/dp.
Matrix softmax_backward_rows(const Matrix& p, const Matrix& dp) {
  Matrix ds(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto pr = p.row(i);
    const auto dr = dp.row(i);
    auto out = ds.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < pr.size(); ++j) dot += pr[j] * dr[j];
    for (std::size_t j = 0; j < pr.size(); ++j) out[j] = pr[j] * (dr[j] - dot);
  }
  return ds;
}

// Backward through y = gain * normalized + bias with biased row variance.
// Accumulates dgain/dbias and returns d(loss)/d(row input).
Matrix layer_norm_backward(const Matrix& dout, const LayerNormCache& cache, const Matrix& gain,
                           Matrix& dgain, Matrix& dbias) {
  const std::size_t n = dout.cols();
  Matrix dx(dout.rows(), n);
  for (std::size_t r = 0; r < dout.rows(); ++r) {
    const auto do_ = dout.row(r);
    const auto y = cache.normalized.row(r);
    const auto g = gain.row(0);
    const double s = cache.inv_std[r];
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dgain(0, j) += do_[j] * y[j];
      dbias(0, j) += do_[j];
      const double dy = do_[j] * g[j];
      m1 += dy;
      m2 += dy * y[j];
    }
    m1 /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    auto out = dx.row(r);
    for (std::size_t j = 0; j < n; ++j) {
      const double dy = do_[j] * g[j];
      out[j] = s * (dy - m1 - y[j] * m2);
    }
  }
  return dx;
}

void add_inplace(Matrix& acc, const Matrix& m) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += m.data()[i];
}

}  // namespace

BackwardResult backward(const ModelConfig& config, const Parameters& params,
                        const TokenSequence& seq, const LossSpec& loss) {
  config.validate();
  seq.validate(config.vocab_size, config.max_len);

  detail::ForwardCache cache;
  detail::run_forward_cached(config, params, seq, AblationSpec{}, cache);

  const std::size_t len = seq.length();
  const std::size_t d = config.d_model;
  const std::size_t dh = config.d_head();

  BackwardResult res;
  res.grads = Parameters::zeros(config);
  Parameters& g = res.grads;

  const Matrix& final_x = cache.final_x();
  Matrix d_final(len, d);

  if (loss.kind == LossKind::TaskCrossEntropy) {
    if (loss.label < 0 || loss.label >= kTaskClasses) {
      throw DataError("backward: task label " + std::to_string(loss.label) + " out of range");
    }
    res.loss = loss.scale * cross_entropy(cache.task_logits, loss.label);
    res.n_pred = 1;
    res.n_correct = argmax(cache.task_logits) == loss.label ? 1 : 0;

    Matrix logits_row(1, kTaskClasses);
    std::copy(cache.task_logits.begin(), cache.task_logits.end(), logits_row.row(0).begin());
    Matrix dlogits = softmax_rows(logits_row);
    dlogits(0, loss.label) -= 1.0;
    for (std::size_t i = 0; i < dlogits.size(); ++i) dlogits.data()[i] *= loss.scale;

    g.task_w = matmul_tn(cache.pooled, dlogits);
    g.task_b = dlogits;
    Matrix dpooled = matmul_nt(dlogits, params.task_w);
    // through tanh
    for (std::size_t j = 0; j < d; ++j) {
      const double t = cache.pooled(0, j);
      dpooled(0, j) *= 1.0 - t * t;
    }
    Matrix cls_row(1, d);
    std::copy(final_x.row(0).begin(), final_x.row(0).end(), cls_row.row(0).begin());
    g.pooler_w = matmul_tn(cls_row, dpooled);
    g.pooler_b = dpooled;
    Matrix dcls = matmul_nt(dpooled, params.pooler_w);
    for (std::size_t j = 0; j < d; ++j) d_final(0, j) += dcls(0, j);
  } else {
    if (loss.masked.empty()) throw DataError("backward: mlm loss needs masked targets");
    for (const auto& t : loss.masked) {
      if (t.position < 0 || static_cast<std::size_t>(t.position) >= len) {
        throw DataError("backward: masked position " + std::to_string(t.position) +
                        " out of range");
      }
      if (t.token_id < 0 || t.token_id >= config.vocab_size) {
        throw DataError("backward: masked target id " + std::to_string(t.token_id) +
                        " out of range");
      }
    }
    Matrix mlm_logits = linear(final_x, params.mlm_w, params.mlm_b);
    const double inv_m = 1.0 / static_cast<double>(loss.masked.size());
    Matrix dlogits(len, config.vocab_size);
    double total = 0.0;
    for (const auto& t : loss.masked) {
      const auto row = mlm_logits.row(t.position);
      total += cross_entropy(row, t.token_id);
      res.n_pred += 1;
      res.n_correct += argmax(row) == t.token_id ? 1 : 0;
      // softmax of this row, scaled into the mean
      double mx = row[0];
      for (double v : row) mx = std::max(mx, v);
      double sum = 0.0;
      for (double v : row) sum += std::exp(v - mx);
      auto dst = dlogits.row(t.position);
      for (std::size_t j = 0; j < dst.size(); ++j) {
        dst[j] += loss.scale * inv_m * std::exp(row[j] - mx) / sum;
      }
      dst[t.token_id] -= loss.scale * inv_m;
    }
    res.loss = loss.scale * inv_m * total;
    g.mlm_w = matmul_tn(final_x, dlogits);
    g.mlm_b = colsum(dlogits);
    d_final = matmul_nt(dlogits, params.mlm_w);
  }

  // Walk the encoder stack top-down.
  Matrix dx = std::move(d_final);
  for (int l = config.n_layers - 1; l >= 0; --l) {
    const detail::LayerCache& lc = cache.layers[l];
    const LayerParams& lp = params.layers[l];
    LayerParams& gl = g.layers[l];

    Matrix dr2 = layer_norm_backward(dx, lc.ln2, lp.ln2_gain, gl.ln2_gain, gl.ln2_bias);
    // r2 = x_mid + ffn_out
    Matrix dx_mid = dr2;
    gl.ffn_w2 = matmul_tn(lc.ffn_act, dr2);
    gl.ffn_b2 = colsum(dr2);
    Matrix dact = matmul_nt(dr2, lp.ffn_w2);
    Matrix dpre(len, config.d_ff);
    for (std::size_t i = 0; i < dpre.size(); ++i) {
      dpre.data()[i] = dact.data()[i] * gelu_grad(lc.ffn_pre.data()[i]);
    }
    gl.ffn_w1 = matmul_tn(lc.x_mid, dpre);
    gl.ffn_b1 = colsum(dpre);
    add_inplace(dx_mid, matmul_nt(dpre, lp.ffn_w1));

    Matrix dr1 = layer_norm_backward(dx_mid, lc.ln1, lp.ln1_gain, gl.ln1_gain, gl.ln1_bias);
    // r1 = x_in + attn_out
    Matrix dx_in = dr1;
    gl.wo = matmul_tn(lc.heads, dr1);
    gl.bo = colsum(dr1);
    Matrix dheads = matmul_nt(dr1, lp.wo);

    Matrix dq(len, d), dk(len, d), dv(len, d);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int h = 0; h < config.n_heads; ++h) {
      const std::size_t c0 = h * dh;
      Matrix dctx = slice_cols(dheads, c0, c0 + dh);
      Matrix vh = slice_cols(lc.v, c0, c0 + dh);
      Matrix qh = slice_cols(lc.q, c0, c0 + dh);
      Matrix kh = slice_cols(lc.k, c0, c0 + dh);
      const Matrix& p = lc.probs[h];
      Matrix dprob = matmul_nt(dctx, vh);
      Matrix dvh = matmul_tn(p, dctx);
      Matrix dscore = softmax_backward_rows(p, dprob);
      for (std::size_t i = 0; i < dscore.size(); ++i) dscore.data()[i] *= inv_sqrt;
      Matrix dqh = matmul(dscore, kh);
      Matrix dkh = matmul_tn(dscore, qh);
      set_cols(dq, c0, dqh);
      set_cols(dk, c0, dkh);
      set_cols(dv, c0, dvh);
    }

    gl.wq = matmul_tn(lc.x_in, dq);
    gl.bq = colsum(dq);
    add_inplace(dx_in, matmul_nt(dq, lp.wq));
    gl.wk = matmul_tn(lc.x_in, dk);
    gl.bk = colsum(dk);
    add_inplace(dx_in, matmul_nt(dk, lp.wk));
    gl.wv = matmul_tn(lc.x_in, dv);
    gl.bv = colsum(dv);
    add_inplace(dx_in, matmul_nt(dv, lp.wv));

    dx = std::move(dx_in);
  }

  // Embedding table scatter.
  for (std::size_t i = 0; i < len; ++i) {
    const auto src = dx.row(i);
    auto tok = g.tok_embed.row(seq.ids[i]);
    auto pos = g.pos_embed.row(i);
    auto seg = g.seg_embed.row(seq.segment_ids[i]);
    for (std::size_t j = 0; j < d; ++j) {
      tok[j] += src[j];
      pos[j] += src[j];
      seg[j] += src[j];
    }
  }

  return res;
}

}  // namespace atnatlas
