#include <benchmark/benchmark.h>

#include <random>

#include "s3d/conv.hpp"
#include "s3d/network.hpp"

using namespace s3d;

namespace {

Tensor random_tensor(std::mt19937_64& rng, const Shape& shape) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(shape);
  for (double& v : t.data()) v = u(rng);
  return t;
}

// Feature volume at the network's input scale: F channels, S x S x S.
void BM_Conv3dForward(benchmark::State& state) {
  const std::size_t f = 8, s = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(rng, {f, s, s, s});
  const ConvKernel k(random_tensor(rng, {f, f, 3, 3, 3}), Tensor({f}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv3d_forward(x, k, 1, Padding3::uniform(1)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(x.size()));
}
BENCHMARK(BM_Conv3dForward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Conv3dBackward(benchmark::State& state) {
  const std::size_t f = 8, s = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(rng, {f, s, s, s});
  const ConvKernel k(random_tensor(rng, {f, f, 3, 3, 3}), Tensor({f}));
  const Tensor g = random_tensor(rng, {f, s, s, s});
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv3d_backward(g, x, k, 1, Padding3::uniform(1)));
  }
}
BENCHMARK(BM_Conv3dBackward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

// Stride-2 upsampling from S/2 to S, as in the top-down path.
void BM_Deconv3dForward(benchmark::State& state) {
  const std::size_t f = 8, s = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  const Tensor y = random_tensor(rng, {f, s / 2, s / 2, s / 2});
  const ConvKernel k(random_tensor(rng, {f, f, 3, 3, 3}), Tensor({f}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        deconv3d_forward(y, k, 2, Padding3::uniform(1), {s, s, s}));
  }
}
BENCHMARK(BM_Deconv3dForward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ModelForward(benchmark::State& state) {
  ResTdmConfig c;
  c.num_scales = 2;
  c.features = 8;
  c.num_classes = 4;
  c.height = c.width = 32;
  c.levels = 15;
  const ResTdmModel m = build_model(c, 0);
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor(rng, c.input_shape());
  for (auto _ : state) benchmark::DoNotOptimize(forward(m, x));
}
BENCHMARK(BM_ModelForward)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
