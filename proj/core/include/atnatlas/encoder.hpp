#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "atnatlas/matrix.hpp"
#include "atnatlas/sequence.hpp"

namespace atnatlas {

// Both synthetic tasks are two-class; the task head is sized accordingly.
inline constexpr int kTaskClasses = 2;

struct ModelConfig {
  int n_layers = 4;
  int n_heads = 4;
  int d_model = 64;
  int d_ff = 128;
  int vocab_size = 64;
  int max_len = 32;
  int n_segments = 2;
  double eps_ln = 1e-12;

  int d_head() const { return d_model / n_heads; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct HeadCoord {
  int layer = 0;
  int head = 0;
  friend auto operator<=>(const HeadCoord&, const HeadCoord&) = default;
};

// The set of heads whose attention map is overridden with the constant 1/L,
// so every token receives the same attention while information still flows.
class AblationSpec {
 public:
  AblationSpec() = default;

  static AblationSpec single(int layer, int head);
  static AblationSpec whole_layer(int layer, int n_heads);
  static AblationSpec all_heads(const ModelConfig& config);

  void add(HeadCoord c) { disabled_.insert(c); }
  bool contains(int layer, int head) const {
    return disabled_.contains(HeadCoord{layer, head});
  }
  bool empty() const { return disabled_.empty(); }
  std::size_t size() const { return disabled_.size(); }
  const std::set<HeadCoord>& coords() const { return disabled_; }
  void validate(const ModelConfig& config) const;

 private:
  std::set<HeadCoord> disabled_;
};

// Captured attention maps: one row-stochastic L x L matrix per (layer, head).
struct AttentionTensor {
  int n_layers = 0;
  int n_heads = 0;
  std::size_t len = 0;
  std::vector<Matrix> maps;  // layer-major, then head

  AttentionTensor() = default;
  AttentionTensor(int n_layers_, int n_heads_, std::size_t len_)
      : n_layers(n_layers_),
        n_heads(n_heads_),
        len(len_),
        maps(static_cast<std::size_t>(n_layers_) * n_heads_, Matrix(len_, len_)) {}

  Matrix& at(int layer, int head) { return maps[static_cast<std::size_t>(layer) * n_heads + head]; }
  const Matrix& at(int layer, int head) const {
    return maps[static_cast<std::size_t>(layer) * n_heads + head];
  }
};

struct LayerParams {
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix ln1_gain, ln1_bias;
  Matrix ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Matrix ln2_gain, ln2_bias;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

// Every learnable array of the model. Weight matrices are stored
// input-dim x output-dim and applied as y = x * W + b; biases are 1 x n.
struct Parameters {
  Matrix tok_embed, pos_embed, seg_embed;
  std::vector<LayerParams> layers;
  Matrix pooler_w, pooler_b;
  Matrix task_w, task_b;
  Matrix mlm_w, mlm_b;

  static Parameters zeros(const ModelConfig& config);
  bool all_finite() const;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

// Visits every array in the fixed manifest order shared by checkpoints,
// Adam state, and gradient accumulation.
template <typename Params, typename Fn>
void for_each_param(Params& p, Fn&& fn) {
  fn("tok_embed", p.tok_embed);
  fn("pos_embed", p.pos_embed);
  fn("seg_embed", p.seg_embed);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string prefix = "layer" + std::to_string(i) + ".";
    fn(prefix + "wq", l.wq);
    fn(prefix + "bq", l.bq);
    fn(prefix + "wk", l.wk);
    fn(prefix + "bk", l.bk);
    fn(prefix + "wv", l.wv);
    fn(prefix + "bv", l.bv);
    fn(prefix + "wo", l.wo);
    fn(prefix + "bo", l.bo);
    fn(prefix + "ln1_gain", l.ln1_gain);
    fn(prefix + "ln1_bias", l.ln1_bias);
    fn(prefix + "ffn_w1", l.ffn_w1);
    fn(prefix + "ffn_b1", l.ffn_b1);
    fn(prefix + "ffn_w2", l.ffn_w2);
    fn(prefix + "ffn_b2", l.ffn_b2);
    fn(prefix + "ln2_gain", l.ln2_gain);
    fn(prefix + "ln2_bias", l.ln2_bias);
  }
  fn("pooler_w", p.pooler_w);
  fn("pooler_b", p.pooler_b);
  fn("task_w", p.task_w);
  fn("task_b", p.task_b);
  fn("mlm_w", p.mlm_w);
  fn("mlm_b", p.mlm_b);
}

// Weights ~ Normal(0, 0.02), biases 0, layer-norm gains 1. Draws happen in
// manifest order, so the result is fully determined by (config, seed).
Parameters init_params(const ModelConfig& config, std::uint64_t seed);

struct AttentionHeadResult {
  Matrix context;  // L x d_head
  Matrix map;      // L x L, row-stochastic
};

// One scaled dot-product head. When ablated, the map is the constant 1/L in
// every cell and the context is that uniform mixture of values.
AttentionHeadResult attention_head(const Matrix& q, const Matrix& k, const Matrix& v,
                                   std::size_t len, bool ablated);

struct ForwardOptions {
  AblationSpec ablation;
  bool capture_attention = false;
  bool compute_mlm = false;
};

struct ForwardResult {
  std::vector<double> task_logits;           // kTaskClasses entries
  std::optional<Matrix> mlm_logits;          // L x vocab_size
  std::optional<AttentionTensor> attention;  // maps actually used, ablated rows uniform
};

// Post-layer-norm encoder: embed, then per layer [attention + residual + LN;
// FFN + residual + LN]. Task logits come from the final-layer [CLS] position
// through a tanh pooler.
ForwardResult forward(const ModelConfig& config, const Parameters& params,
                      const TokenSequence& seq, const ForwardOptions& options = {});

enum class LossKind { TaskCrossEntropy, MlmCrossEntropy };

struct MaskedTarget {
  int position = 0;
  int token_id = 0;
};

struct LossSpec {
  LossKind kind = LossKind::TaskCrossEntropy;
  int label = 0;                      // TaskCrossEntropy
  std::vector<MaskedTarget> masked;   // MlmCrossEntropy; loss is the mean over positions
  double scale = 1.0;                 // multiplies the loss (and so every gradient)
};

struct BackwardResult {
  double loss = 0.0;
  Parameters grads;
  std::size_t n_correct = 0;  // argmax predictions matching targets
  std::size_t n_pred = 0;
};

// Analytic gradients of the scalar loss with respect to every parameter.
// Ablation is an evaluation-time device and never applies here.
BackwardResult backward(const ModelConfig& config, const Parameters& params,
                        const TokenSequence& seq, const LossSpec& loss);

// -log softmax(logits)[target]
double cross_entropy(std::span<const double> logits, int target);
int argmax(std::span<const double> v);

}  // namespace atnatlas
