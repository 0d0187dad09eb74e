#include "atnatlas/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "atnatlas/errors.hpp"
#include "atnatlas/rng.hpp"

namespace atnatlas {

namespace {

struct ParamRef {
  std::string name;
  Matrix* m;
};

std::vector<ParamRef> param_refs(Parameters& p) {
  std::vector<ParamRef> refs;
  for_each_param(p, [&](const std::string& name, Matrix& m) { refs.push_back({name, &m}); });
  return refs;
}

std::vector<const Matrix*> const_param_ptrs(const Parameters& p) {
  std::vector<const Matrix*> ptrs;
  for_each_param(p, [&](const std::string&, const Matrix& m) { ptrs.push_back(&m); });
  return ptrs;
}

void accumulate(Parameters& acc, const Parameters& delta) {
  auto a = param_refs(acc);
  auto d = const_param_ptrs(delta);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double* dst = a[i].m->data();
    const double* src = d[i]->data();
    for (std::size_t j = 0; j < a[i].m->size(); ++j) dst[j] += src[j];
  }
}

void scale(Parameters& p, double factor) {
  for_each_param(p, [&](const std::string&, Matrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] *= factor;
  });
}

std::string format_csv_row(const TrainLogRow& row) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g", row.step, row.loss, row.metric);
  return buf;
}

// Shared epoch loop: shuffled batches, summed-then-averaged gradients, one
// Adam step per batch. `make_loss` builds the per-example LossSpec and may
// rewrite the sequence (masking).
template <typename MakeStep>
std::vector<TrainLogRow> run_epochs(const ModelConfig& config, Parameters& params,
                                    std::size_t n_examples, const Hyperparams& hyper,
                                    std::ofstream* log_stream, MakeStep&& make_step) {
  AdamState state = AdamState::init(config);
  Rng order_rng(hyper.seed);
  std::vector<TrainLogRow> log;
  long step = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::vector<std::size_t> order(n_examples);
    for (std::size_t i = 0; i < n_examples; ++i) order[i] = i;
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < n_examples; start += hyper.batch_size) {
      const std::size_t end = std::min(n_examples, start + hyper.batch_size);
      Parameters batch_grads = Parameters::zeros(config);
      double batch_loss = 0.0;
      std::size_t correct = 0, total = 0;
      for (std::size_t i = start; i < end; ++i) {
        BackwardResult res = make_step(order[i]);
        batch_loss += res.loss;
        correct += res.n_correct;
        total += res.n_pred;
        accumulate(batch_grads, res.grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      scale(batch_grads, inv);
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("training diverged: non-finite loss at step " +
                             std::to_string(step));
      }
      adam_step(params, batch_grads, state, hyper);
      ++step;
      TrainLogRow row{step, batch_loss,
                      total == 0 ? 0.0 : static_cast<double>(correct) / total};
      log.push_back(row);
      if (log_stream) *log_stream << format_csv_row(row) << '\n';
    }
    if (log_stream) log_stream->flush();
  }
  return log;
}

std::ofstream open_log(const std::string& path) {
  std::ofstream out;
  if (!path.empty()) {
    out.open(path, std::ios::trunc);
    if (!out) throw DataError("cannot open training log: " + path);
    out << "step,loss,metric\n";
  }
  return out;
}

}  // namespace

void Hyperparams::validate() const {
  if (batch_size < 1 || epochs < 0 || learning_rate <= 0.0 || adam_eps <= 0.0) {
    throw DataError("hyperparams: batch_size/learning_rate/adam_eps must be positive");
  }
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
    throw DataError("hyperparams: betas must lie strictly inside (0,1)");
  }
}

AdamState AdamState::init(const ModelConfig& config) {
  return {Parameters::zeros(config), Parameters::zeros(config), 0};
}

void adam_step(Parameters& params, const Parameters& grads, AdamState& state,
               const Hyperparams& hyper) {
  hyper.validate();
  auto p = param_refs(params);
  auto g = const_param_ptrs(grads);
  auto m = param_refs(state.m);
  auto v = param_refs(state.v);

  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!g[i]->all_finite()) {
      throw NumericalError("adam_step: non-finite gradient in array " + p[i].name);
    }
    if (g[i]->rows() != p[i].m->rows() || g[i]->cols() != p[i].m->cols()) {
      throw DataError("adam_step: gradient shape mismatch for " + p[i].name);
    }
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    double* pd = p[i].m->data();
    const double* gd = g[i]->data();
    double* md = m[i].m->data();
    double* vd = v[i].m->data();
    for (std::size_t j = 0; j < p[i].m->size(); ++j) {
      md[j] = hyper.beta1 * md[j] + (1.0 - hyper.beta1) * gd[j];
      vd[j] = hyper.beta2 * vd[j] + (1.0 - hyper.beta2) * gd[j] * gd[j];
      const double mhat = md[j] / bc1;
      const double vhat = vd[j] / bc2;
      pd[j] -= hyper.learning_rate * mhat / (std::sqrt(vhat) + hyper.adam_eps);
    }
  }
}

void write_training_log(const std::string& path, const std::vector<TrainLogRow>& rows) {
  std::ofstream out = open_log(path);
  for (const auto& row : rows) out << format_csv_row(row) << '\n';
  out.flush();
}

PretrainResult pretrain(const ModelConfig& config, const SyntheticGrammar& grammar,
                        const Hyperparams& hyper, const PretrainOptions& options,
                        const std::string& log_path) {
  config.validate();
  hyper.validate();
  grammar.validate();
  if (options.n_train < 1 || options.n_heldout < 1) {
    throw DataError("pretrain: need at least one training and one held-out example");
  }
  if (options.pair_fraction < 0.0 || options.pair_fraction > 1.0) {
    throw DataError("pretrain: pair_fraction must lie in [0,1]");
  }

  // Corpus: copy-style pair examples (cross-segment context makes masked
  // tokens recoverable) plus single sentences.
  const std::size_t total = options.n_train + options.n_heldout;
  const auto n_pair = static_cast<std::size_t>(
      std::llround(options.pair_fraction * static_cast<double>(total)));
  SyntheticGrammar pair_grammar = grammar;
  pair_grammar.corruption_rate = 0.0;
  Dataset corpus;
  if (n_pair > 0) corpus = generate_pair_task(pair_grammar, n_pair);
  if (total - n_pair > 0) {
    SyntheticGrammar single_grammar = grammar;
    single_grammar.seed = grammar.seed ^ 0x9e3779b97f4a7c15ull;
    Dataset singles = generate_single_task(single_grammar, total - n_pair);
    corpus.insert(corpus.end(), singles.begin(), singles.end());
  }
  Rng split_rng(grammar.seed ^ 0x517cc1b727220a95ull);
  split_rng.shuffle(corpus);
  Dataset heldout(corpus.begin() + options.n_train, corpus.end());
  corpus.resize(options.n_train);

  // Fixed heldout masking so epochs are comparable.
  Rng heldout_rng(hyper.seed ^ 0x2545f4914f6cdd1dull);
  std::vector<MaskedExample> heldout_masked;
  heldout_masked.reserve(heldout.size());
  for (const Example& ex : heldout) {
    heldout_masked.push_back(mask_tokens(ex, options.mask_rate, heldout_rng));
  }

  PretrainResult result;
  result.params = init_params(config, hyper.seed);
  result.heldout_loss_initial = evaluate_mlm(config, result.params, heldout_masked).loss;

  Rng mask_rng(hyper.seed ^ 0x6c62272e07bb0142ull);
  std::ofstream log_stream = open_log(log_path);
  result.log = run_epochs(config, result.params, corpus.size(), hyper,
                          log_path.empty() ? nullptr : &log_stream, [&](std::size_t idx) {
                            MaskedExample masked =
                                mask_tokens(corpus[idx], options.mask_rate, mask_rng);
                            LossSpec loss;
                            loss.kind = LossKind::MlmCrossEntropy;
                            loss.masked = masked.targets;
                            return backward(config, result.params, masked.seq, loss);
                          });

  const MlmEval final_eval = evaluate_mlm(config, result.params, heldout_masked);
  result.heldout_loss_final = final_eval.loss;
  result.heldout_accuracy = final_eval.accuracy;
  return result;
}

FineTuneResult fine_tune(const ModelConfig& config, Parameters init, const Dataset& train,
                         const Dataset& heldout, const Hyperparams& hyper, MetricKind kind,
                         const std::string& log_path) {
  config.validate();
  hyper.validate();
  if (train.empty()) throw DataError("fine_tune: empty training set");

  FineTuneResult result;
  result.params = std::move(init);
  std::ofstream log_stream = open_log(log_path);
  result.log = run_epochs(config, result.params, train.size(), hyper,
                          log_path.empty() ? nullptr : &log_stream, [&](std::size_t idx) {
                            LossSpec loss;
                            loss.kind = LossKind::TaskCrossEntropy;
                            loss.label = train[idx].label;
                            return backward(config, result.params, train[idx].seq, loss);
                          });
  result.score = evaluate(config, result.params, heldout, kind);
  return result;
}

double evaluate(const ModelConfig& config, const Parameters& params, const Dataset& dataset,
                MetricKind kind, const AblationSpec& ablation) {
  if (dataset.empty()) throw DataError("evaluate: empty dataset");
  std::vector<int> predictions, labels;
  predictions.reserve(dataset.size());
  labels.reserve(dataset.size());
  ForwardOptions options;
  options.ablation = ablation;
  for (const Example& ex : dataset) {
    ForwardResult res = forward(config, params, ex.seq, options);
    predictions.push_back(argmax(res.task_logits));
    labels.push_back(ex.label);
  }
  return metric(kind, predictions, labels);
}

MlmEval evaluate_mlm(const ModelConfig& config, const Parameters& params,
                     const std::vector<MaskedExample>& masked) {
  if (masked.empty()) throw DataError("evaluate_mlm: empty input");
  double total_loss = 0.0;
  std::size_t correct = 0, total = 0;
  ForwardOptions options;
  options.compute_mlm = true;
  for (const MaskedExample& ex : masked) {
    ForwardResult res = forward(config, params, ex.seq, options);
    const Matrix& logits = *res.mlm_logits;
    double example_loss = 0.0;
    for (const MaskedTarget& t : ex.targets) {
      const auto row = logits.row(t.position);
      example_loss += cross_entropy(row, t.token_id);
      correct += argmax(row) == t.token_id ? 1 : 0;
      total += 1;
    }
    total_loss += example_loss / static_cast<double>(ex.targets.size());
  }
  return {total_loss / static_cast<double>(masked.size()),
          static_cast<double>(correct) / static_cast<double>(total)};
}

}  // namespace atnatlas
