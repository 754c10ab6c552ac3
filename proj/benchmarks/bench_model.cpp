// Whole-network latency: inference, training step pieces, optimizer update.

#include <benchmark/benchmark.h>

#include "demnet/loss_metrics.hpp"
#include "demnet/model.hpp"
#include "demnet/optimizer.hpp"
#include "demnet/rng.hpp"

namespace {

using namespace demnet;

Tensor random_input(std::uint64_t seed) {
  Tensor t({kInputSize, kInputSize, kInputChannels});
  Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

void bm_forward_infer(benchmark::State& state) {
  ModelParams model = demnet_model(7);
  Tensor input = random_input(41);
  for (auto _ : state) {
    Tensor out = forward(model, input, RunMode::INFER);
    benchmark::DoNotOptimize(out.data());
  }
}

void bm_forward_backward(benchmark::State& state) {
  ModelParams model = demnet_model(7);
  Tensor input = random_input(41);
  Tensor target({kInputSize, kInputSize, 1});
  Rng rng(42);
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = rng.normal();
  for (auto _ : state) {
    ForwardCache cache;
    Tensor pred = forward(model, input, RunMode::TRAIN, &cache);
    Tensor grad_dem = mse_grad(pred, target);
    ParamGrads grads = backward(model, cache, grad_dem, 0.01);
    benchmark::DoNotOptimize(grads.layers.data());
  }
}

void bm_adam_step(benchmark::State& state) {
  ModelParams model = demnet_model(7);
  std::vector<Tensor*> params = trainable_tensors(model);
  std::vector<std::string> names = trainable_names(model);
  AdamState adam = make_adam_state(trainable_tensors(std::as_const(model)), {});
  ParamGrads grads = make_zero_grads(model);
  Rng rng(43);
  for (auto& layer : grads.layers) {
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
      layer.weights[i] = rng.normal() * 1e-3;
    }
  }
  std::vector<const Tensor*> grad_list = grad_tensors(grads, model);
  for (auto _ : state) {
    adam_step(params, grad_list, adam, names);
    benchmark::DoNotOptimize(adam.t);
  }
}

}  // namespace

BENCHMARK(bm_forward_infer)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_forward_backward)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_adam_step)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
