#include <benchmark/benchmark.h>

#include "atnatlas/encoder.hpp"
#include "atnatlas/matrix.hpp"
#include "atnatlas/rng.hpp"
#include "atnatlas/tasks.hpp"
#include "atnatlas/training.hpp"

namespace {

using namespace atnatlas;

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Matrix a = random_matrix(n, n, rng);
  const Matrix b = random_matrix(n, n, rng);
  for (auto _ : state) {
    Matrix c = matmul(a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_SoftmaxRows(benchmark::State& state) {
  Rng rng(2);
  const Matrix m = random_matrix(32, 32, rng);
  for (auto _ : state) {
    Matrix s = softmax_rows(m);
    benchmark::DoNotOptimize(s.data());
  }
}
BENCHMARK(BM_SoftmaxRows);

ModelConfig bench_config() {
  ModelConfig c;
  c.n_layers = 4;
  c.n_heads = 4;
  c.d_model = 64;
  c.d_ff = 128;
  return c;
}

void BM_Forward(benchmark::State& state) {
  const ModelConfig cfg = bench_config();
  const Parameters params = init_params(cfg, 1);
  SyntheticGrammar g;
  const Example ex = generate_pair_task(g, 1).front();
  ForwardOptions opts;
  opts.capture_attention = state.range(0) != 0;
  for (auto _ : state) {
    ForwardResult res = forward(cfg, params, ex.seq, opts);
    benchmark::DoNotOptimize(res.task_logits.data());
  }
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1);

void BM_Backward(benchmark::State& state) {
  const ModelConfig cfg = bench_config();
  const Parameters params = init_params(cfg, 1);
  SyntheticGrammar g;
  const Example ex = generate_pair_task(g, 1).front();
  LossSpec loss;
  loss.label = ex.label;
  for (auto _ : state) {
    BackwardResult res = backward(cfg, params, ex.seq, loss);
    benchmark::DoNotOptimize(res.loss);
  }
}
BENCHMARK(BM_Backward);

void BM_EvaluateAblated(benchmark::State& state) {
  const ModelConfig cfg = bench_config();
  const Parameters params = init_params(cfg, 1);
  SyntheticGrammar g;
  const Dataset data = generate_pair_task(g, 32);
  const AblationSpec spec = AblationSpec::single(1, 2);
  for (auto _ : state) {
    const double score = evaluate(cfg, params, data, MetricKind::Accuracy, spec);
    benchmark::DoNotOptimize(score);
  }
}
BENCHMARK(BM_EvaluateAblated);

}  // namespace

BENCHMARK_MAIN();
