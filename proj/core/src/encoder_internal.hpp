#pragma once

#include <vector>

#include "atnatlas/encoder.hpp"
#include "atnatlas/matrix.hpp"

namespace atnatlas::detail {

struct LayerNormCache {
  Matrix normalized;            // the (x - mean) * inv_std rows
  std::vector<double> inv_std;  // one per row
};

struct LayerCache {
  Matrix x_in;
  Matrix q, k, v;             // L x d_model, all heads side by side
  std::vector<Matrix> probs;  // per head, L x L
  Matrix heads;               // concatenated head contexts, L x d_model
  Matrix r1;                  // x_in + attention output
  LayerNormCache ln1;
  Matrix x_mid;
  Matrix ffn_pre;  // L x d_ff
  Matrix ffn_act;
  Matrix r2;  // x_mid + FFN output
  LayerNormCache ln2;
  Matrix x_out;
};

struct ForwardCache {
  Matrix embeddings;
  std::vector<LayerCache> layers;
  Matrix pooled_pre;  // 1 x d_model
  Matrix pooled;      // tanh of pooled_pre
  std::vector<double> task_logits;

  const Matrix& final_x() const { return layers.empty() ? embeddings : layers.back().x_out; }
};

// y = x * w + b with b broadcast over rows.
Matrix linear(const Matrix& x, const Matrix& w, const Matrix& b);

Matrix slice_cols(const Matrix& m, std::size_t c0, std::size_t c1);
void set_cols(Matrix& dst, std::size_t c0, const Matrix& src);
Matrix colsum(const Matrix& m);

void layer_norm_rows(const Matrix& in, const Matrix& gain, const Matrix& bias, double eps,
                     Matrix& out, LayerNormCache& cache);

// Full encoder pass with every intermediate retained. Inputs are assumed
// validated by the caller.
void run_forward_cached(const ModelConfig& config, const Parameters& params,
                        const TokenSequence& seq, const AblationSpec& ablation,
                        ForwardCache& cache);

}  // namespace atnatlas::detail
