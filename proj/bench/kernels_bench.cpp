// Serial reference loops against the OpenMP kernels on layer shapes taken
// from the reference networks. Run with --benchmark_filter to pick a kernel;
// the thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "videokit/kernels/conv.hpp"
#include "videokit/kernels/ops.hpp"

using namespace videokit;
using namespace videokit::kernels;

namespace {

Tensor noise(const Shape& s, std::uint64_t seed) {
  Tensor t(s);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

struct ConvCase {
  Shape input;
  Shape weight;
  ConvGeometry geometry;
};

// 0: res3 temporal 3x1x1 of a Slow R50 clip, 1: res2 spatial 1x3x3,
// 2: X3D depthwise 3x3x3, 3: stem 1x7x7 stride 2.
ConvCase conv_case(std::int64_t id) {
  switch (id) {
    case 0: return {{1, 128, 8, 28, 28}, {128, 128, 3, 1, 1}, same_padded({3, 1, 1})};
    case 1: return {{1, 64, 8, 56, 56}, {64, 64, 1, 3, 3}, same_padded({1, 3, 3})};
    case 2: return {{1, 108, 4, 40, 40}, {108, 1, 3, 3, 3}, same_padded({3, 3, 3}, {1, 1, 1}, {1, 1, 1}, 108)};
    default: return {{1, 3, 8, 112, 112}, {64, 3, 1, 7, 7}, same_padded({1, 7, 7}, {1, 2, 2})};
  }
}

void set_conv_counters(benchmark::State& state, const ConvCase& c) {
  const auto out = conv3d_output_shape(c.input, c.weight[0], c.geometry);
  std::int64_t macs = 1;
  for (auto d : out) macs *= d;
  for (std::size_t i = 1; i < c.weight.size(); ++i) macs *= c.weight[i];
  state.counters["GMAC/s"] = benchmark::Counter(static_cast<double>(macs) * 1e-9, benchmark::Counter::kIsIterationInvariantRate);
  state.counters["threads"] = omp_get_max_threads();
}

void BM_conv3d_serial(benchmark::State& state) {
  const auto c = conv_case(state.range(0));
  const auto x = noise(c.input, 1), w = noise(c.weight, 2);
  for (auto _ : state) benchmark::DoNotOptimize(serial::conv3d<float>(x, w, {}, c.geometry));
  set_conv_counters(state, c);
}

void BM_conv3d_openmp(benchmark::State& state) {
  const auto c = conv_case(state.range(0));
  const auto x = noise(c.input, 1), w = noise(c.weight, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv3d<float>(x, w, {}, c.geometry));
  set_conv_counters(state, c);
}

const PoolGeometry kStemPool{{1, 3, 3}, {1, 2, 2}, {0, 1, 1}};

void BM_max_pool_serial(benchmark::State& state) {
  const auto x = noise({1, 64, 8, 112, 112}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(serial::max_pool3d<float>(x, kStemPool));
}

void BM_max_pool_openmp(benchmark::State& state) {
  const auto x = noise({1, 64, 8, 112, 112}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(max_pool3d<float>(x, kStemPool));
}

template <bool Parallel>
void BM_batch_norm(benchmark::State& state) {
  const auto x = noise({1, 256, 8, 56, 56}, 4);
  const std::vector<float> gamma(256, 1.1f), beta(256, 0.1f), mean(256, 0.05f), var(256, 0.9f);
  for (auto _ : state) {
    if constexpr (Parallel) {
      benchmark::DoNotOptimize(batch_norm<float>(x, gamma, beta, mean, var, 1e-5));
    } else {
      benchmark::DoNotOptimize(serial::batch_norm<float>(x, gamma, beta, mean, var, 1e-5));
    }
  }
}

}  // namespace

BENCHMARK(BM_conv3d_serial)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv3d_openmp)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_max_pool_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_max_pool_openmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_norm<false>)->Name("BM_batch_norm_serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_norm<true>)->Name("BM_batch_norm_openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
