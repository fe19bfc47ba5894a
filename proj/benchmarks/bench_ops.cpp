#include <benchmark/benchmark.h>

#include <random>

#include "adablur/gauss_kernel.hpp"
#include "adablur/ops.hpp"

namespace {

using adablur::Tensor;

Tensor random_tensor(adablur::Shape shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(adablur::shape_numel(shape));
  for (double& x : v) x = u(rng);
  return Tensor::from_data(std::move(shape), std::move(v), grad);
}

void BM_Conv3x3Forward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  Tensor x = random_tensor({8, c, hw, hw}, 1);
  adablur::Conv2dParams p{random_tensor({c, c, 3, 3}, 2), random_tensor({c}, 3), 1,
                          adablur::Padding::symmetric(1, adablur::PadMode::kReflect)};
  for (auto _ : state) benchmark::DoNotOptimize(adablur::conv2d(x, p));
}
BENCHMARK(BM_Conv3x3Forward)->Args({16, 32})->Args({16, 64});

void BM_Conv3x3ForwardBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  Tensor x = random_tensor({8, c, hw, hw}, 1, true);
  adablur::Conv2dParams p{random_tensor({c, c, 3, 3}, 2, true), random_tensor({c}, 3, true), 1,
                          adablur::Padding::symmetric(1, adablur::PadMode::kReflect)};
  for (auto _ : state) adablur::backward(adablur::sum(adablur::conv2d(x, p)));
}
BENCHMARK(BM_Conv3x3ForwardBackward)->Args({16, 32})->Args({16, 64});

void BM_DepthwiseForwardBackward(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  Tensor x = random_tensor({8, 16, hw, hw}, 1, true);
  Tensor k = random_tensor({16, 16, 16}, 2, true);
  const auto pad = adablur::Padding::same(16, 16, adablur::PadMode::kReflect);
  for (auto _ : state) adablur::backward(adablur::sum(adablur::depthwise_conv2d(x, k, pad)));
}
BENCHMARK(BM_DepthwiseForwardBackward)->Arg(32)->Arg(64);

void BM_BuildDefaultBank(benchmark::State& state) {
  const auto spec = adablur::BankSpec::with_factors({1.0, 1.2});
  for (auto _ : state) benchmark::DoNotOptimize(adablur::build_bank(spec));
}
BENCHMARK(BM_BuildDefaultBank);

}  // namespace
