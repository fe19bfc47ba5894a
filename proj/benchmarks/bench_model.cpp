#include <benchmark/benchmark.h>

#include <random>

#include "adablur/adam.hpp"
#include "adablur/degnet.hpp"

namespace {

using adablur::Tensor;

Tensor random_batch(int n, int hw) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n) * hw * hw);
  for (double& x : v) x = u(rng);
  return Tensor::from_data({n, 1, hw, hw}, std::move(v));
}

// One optimizer step of the desk configuration (batch 8).
void BM_TrainStep(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  auto model = adablur::DegradationModel::create(adablur::NetConfig{}, 1);
  adablur::Adam opt(model.parameters(), {1e-3});
  Tensor hr = random_batch(8, hw);
  Tensor lr = Tensor::zeros({8, 1, hw / 4, hw / 4});
  for (auto _ : state) {
    opt.zero_grad();
    adablur::backward(adablur::l1_loss(model.forward(hr), lr));
    opt.step();
  }
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Inference(benchmark::State& state) {
  auto model = adablur::DegradationModel::create(adablur::NetConfig{}, 1);
  Tensor hr = random_batch(1, 64);
  adablur::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(hr));
}
BENCHMARK(BM_Inference)->Unit(benchmark::kMillisecond);

}  // namespace
