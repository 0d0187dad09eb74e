#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atnatlas/encoder.hpp"
#include "atnatlas/tasks.hpp"

namespace atnatlas {

struct Hyperparams {
  int batch_size = 32;
  int epochs = 3;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  void validate() const;
};

struct AdamState {
  Parameters m;
  Parameters v;
  long step = 0;

  static AdamState init(const ModelConfig& config);
};

// Standard Adam with bias correction, applied in place. Rejects non-finite
// gradients, naming the offending array.
void adam_step(Parameters& params, const Parameters& grads, AdamState& state,
               const Hyperparams& hyper);

struct TrainLogRow {
  long step = 0;
  double loss = 0.0;
  double metric = 0.0;  // batch accuracy
};

// Writes `step,loss,metric` rows; the stream is flushed at every epoch end.
void write_training_log(const std::string& path, const std::vector<TrainLogRow>& rows);

struct PretrainOptions {
  std::size_t n_train = 2048;
  std::size_t n_heldout = 256;
  double mask_rate = 0.15;
  double pair_fraction = 0.5;  // of the corpus, two-segment copy examples
};

struct PretrainResult {
  Parameters params;
  double heldout_loss_initial = 0.0;
  double heldout_loss_final = 0.0;
  double heldout_accuracy = 0.0;  // masked-token top-1
  std::vector<TrainLogRow> log;
};

// Masked-token pretraining on a generated corpus. Deterministic per
// (config, grammar, hyper); aborts with the step index if the loss leaves
// the finite range.
PretrainResult pretrain(const ModelConfig& config, const SyntheticGrammar& grammar,
                        const Hyperparams& hyper, const PretrainOptions& options = {},
                        const std::string& log_path = "");

struct FineTuneResult {
  Parameters params;
  double score = 0.0;  // held-out metric
  std::vector<TrainLogRow> log;
};

// Trains the task head and encoder end to end from the given initial
// parameters (a loaded checkpoint or a fresh random init). epochs = 0
// returns the initial parameters untouched.
FineTuneResult fine_tune(const ModelConfig& config, Parameters init, const Dataset& train,
                         const Dataset& heldout, const Hyperparams& hyper, MetricKind kind,
                         const std::string& log_path = "");

// Mean metric over the dataset with the ablation applied at inference.
double evaluate(const ModelConfig& config, const Parameters& params, const Dataset& dataset,
                MetricKind kind, const AblationSpec& ablation = {});

// Masked-token loss and accuracy on a fixed masking of the given examples.
struct MlmEval {
  double loss = 0.0;
  double accuracy = 0.0;
};
MlmEval evaluate_mlm(const ModelConfig& config, const Parameters& params,
                     const std::vector<MaskedExample>& masked);

}  // namespace atnatlas
