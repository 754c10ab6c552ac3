// Primitive-level throughput on the network's hottest shapes.

#include <benchmark/benchmark.h>

#include "demnet/rng.hpp"
#include "demnet/tensor_ops.hpp"

namespace {

using namespace demnet;

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

struct ConvCase {
  const char* name;
  int h, w;
  ConvSpec spec;
};

// Conv1, Conv2, Conv4 and the stride-4 expansion cover the cost spectrum.
const ConvCase kConvCases[] = {
    {"conv_3x3_2to64_same_140", 140, 140,
     {3, 3, 2, 64, 1, 1, Padding::SAME, 0}},
    {"conv_5x5_64to64_same_140", 140, 140,
     {5, 5, 64, 64, 1, 1, Padding::SAME, 0}},
    {"conv_3x3_128to128_valid_33", 33, 33,
     {3, 3, 128, 128, 1, 1, Padding::VALID, 0}},
};

double conv_flops(const ConvCase& c) {
  int oh = conv_out_dim(c.h, c.spec.kernel_h, c.spec.stride_h, c.spec.padding);
  int ow = conv_out_dim(c.w, c.spec.kernel_w, c.spec.stride_w, c.spec.padding);
  return 2.0 * oh * ow * c.spec.kernel_h * c.spec.kernel_w *
         c.spec.in_channels * c.spec.out_channels;
}

void bm_conv_forward(benchmark::State& state, const ConvCase& c) {
  Tensor input = random_tensor({c.h, c.w, c.spec.in_channels}, 11);
  Tensor weights = random_tensor(
      {c.spec.kernel_h, c.spec.kernel_w, c.spec.in_channels,
       c.spec.out_channels},
      12);
  Tensor bias = random_tensor({c.spec.out_channels}, 13);
  for (auto _ : state) {
    Tensor out = conv2d_forward(input, weights, bias, c.spec);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["flops"] =
      benchmark::Counter(conv_flops(c), benchmark::Counter::kIsIterationInvariantRate);
}

void bm_conv_backward(benchmark::State& state, const ConvCase& c) {
  Tensor input = random_tensor({c.h, c.w, c.spec.in_channels}, 11);
  Tensor weights = random_tensor(
      {c.spec.kernel_h, c.spec.kernel_w, c.spec.in_channels,
       c.spec.out_channels},
      12);
  int oh = conv_out_dim(c.h, c.spec.kernel_h, c.spec.stride_h, c.spec.padding);
  int ow = conv_out_dim(c.w, c.spec.kernel_w, c.spec.stride_w, c.spec.padding);
  Tensor grad_out = random_tensor({oh, ow, c.spec.out_channels}, 14);
  for (auto _ : state) {
    ConvGrads g = conv2d_backward(input, weights, grad_out, c.spec);
    benchmark::DoNotOptimize(g.grad_input.data());
  }
  state.counters["flops"] = benchmark::Counter(
      2.0 * conv_flops(c), benchmark::Counter::kIsIterationInvariantRate);
}

void bm_tconv_forward(benchmark::State& state) {
  ConvSpec spec{3, 3, 32, 32, 4, 4, Padding::VALID, 1};
  Tensor input = random_tensor({35, 35, 32}, 21);
  Tensor weights = random_tensor({3, 3, 32, 32}, 22);
  Tensor bias = random_tensor({32}, 23);
  for (auto _ : state) {
    Tensor out = tconv2d_forward(input, weights, bias, spec);
    benchmark::DoNotOptimize(out.data());
  }
}

void bm_maxpool_forward(benchmark::State& state) {
  Tensor input = random_tensor({140, 140, 64}, 31);
  for (auto _ : state) {
    MaxPoolResult r = maxpool_forward(input, 4, 4);
    benchmark::DoNotOptimize(r.output.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(bm_conv_forward, conv_3x3_2to64_same_140, kConvCases[0])
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_conv_forward, conv_5x5_64to64_same_140, kConvCases[1])
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_conv_forward, conv_3x3_128to128_valid_33, kConvCases[2])
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_conv_backward, conv_3x3_2to64_same_140, kConvCases[0])
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_conv_backward, conv_5x5_64to64_same_140, kConvCases[1])
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bm_conv_backward, conv_3x3_128to128_valid_33, kConvCases[2])
    ->Unit(benchmark::kMillisecond);
BENCHMARK(bm_tconv_forward)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_maxpool_forward)->Unit(benchmark::kMillisecond);
