#include <benchmark/benchmark.h>

#include "chanlab/estimators.hpp"
#include "chanlab/piecewise.hpp"
#include "chanlab/relu_net.hpp"

namespace {

using namespace chanlab;

void BM_GaussianDraws(benchmark::State& state) {
  Rng rng(42, 0);
  for (auto _ : state) {
    double acc = 0.0;
    for (int i = 0; i < 1024; ++i) acc += rng.gaussian();
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_GaussianDraws);

void BM_ForwardBatch(benchmark::State& state) {
  const MlpSpec spec = MlpSpec::equal_width(2, 4, static_cast<int>(state.range(0)));
  const MlpParams params = init_params(spec, 1);
  Mat x(2, 128);
  Rng rng(7, 0);
  for (int i = 0; i < x.size(); ++i) x(i) = rng.gaussian();
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_batch(params, x));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_ForwardBatch)->Arg(16)->Arg(40)->Arg(64);

void BM_LossGradient(benchmark::State& state) {
  const MlpSpec spec = MlpSpec::equal_width(2, 4, static_cast<int>(state.range(0)));
  const MlpParams params = init_params(spec, 1);
  SampleSet batch;
  batch.x.resize(2, 128);
  batch.h.resize(2, 128);
  Rng rng(7, 0);
  for (int i = 0; i < batch.x.size(); ++i) batch.x(i) = rng.gaussian();
  for (int i = 0; i < batch.h.size(); ++i) batch.h(i) = rng.gaussian();
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradient(params, batch));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_LossGradient)->Arg(40);

void BM_LmmseEstimate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Rng rng(3, 0);
  Mat a(d, d);
  for (int i = 0; i < a.size(); ++i) a(i) = rng.gaussian();
  const CovarianceSpec cov = CovarianceSpec::full(a * a.transpose() / d);
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = rng.gaussian();
  for (auto _ : state) {
    benchmark::DoNotOptimize(lmmse_estimate(x, cov, 0.1, 1.0));
  }
}
BENCHMARK(BM_LmmseEstimate)->Arg(4)->Arg(16)->Arg(64);

void BM_ActivationPattern(benchmark::State& state) {
  const MlpSpec spec = MlpSpec::equal_width(2, 4, 40);
  const MlpParams params = init_params(spec, 1);
  Rng rng(9, 0);
  Vec x(2);
  x << rng.gaussian(), rng.gaussian();
  for (auto _ : state) {
    benchmark::DoNotOptimize(activation_pattern(params, x));
  }
}
BENCHMARK(BM_ActivationPattern);

void BM_RappInvert(benchmark::State& state) {
  const RappParams p{1.5, 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(rapp_invert(1.2, p));
  }
}
BENCHMARK(BM_RappInvert);

}  // namespace

BENCHMARK_MAIN();
