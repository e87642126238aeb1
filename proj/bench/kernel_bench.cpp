// Compares the OpenMP production kernels against the serial reference
// implementations on training-shaped workloads.
//
//   ./kernel_bench                       # all benchmarks
//   OMP_NUM_THREADS=8 ./kernel_bench --benchmark_filter=conv2d

#include <benchmark/benchmark.h>

#include <vector>

#include "heatcast/kernels.hpp"
#include "heatcast/kernels_ref.hpp"
#include "heatcast/rng.hpp"

using namespace heatcast;

namespace {

std::vector<float> random_vec(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = float(rng.uniform(-1.0, 1.0));
  return v;
}

kern::ConvDims stem_dims() {
  // the U-Net stem on a batched 64x64 stack
  return kern::conv_dims(8, 39, 64, 64, 32, 3, 3, 2, 1, 1);
}

kern::ConvDims stage_dims() {
  // a mid-stage 3x3 conv
  return kern::conv_dims(8, 32, 32, 32, 32, 3, 3, 1, 1, 1);
}

void conv_forward_serial(benchmark::State& state, const kern::ConvDims& d) {
  const auto x = random_vec(size_t(d.batch * d.c_in * d.h_in * d.w_in), 1);
  const auto w =
      random_vec(size_t(d.c_out * (d.c_in / d.groups) * d.kh * d.kw), 2);
  const auto b = random_vec(size_t(d.c_out), 3);
  std::vector<float> out(size_t(d.batch * d.c_out * d.h_out * d.w_out));
  for (auto _ : state) {
    kern_ref::conv2d_forward(x.data(), w.data(), b.data(), out.data(), d);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
}

void conv_forward_omp(benchmark::State& state, const kern::ConvDims& d) {
  const auto x = random_vec(size_t(d.batch * d.c_in * d.h_in * d.w_in), 1);
  const auto w =
      random_vec(size_t(d.c_out * (d.c_in / d.groups) * d.kh * d.kw), 2);
  const auto b = random_vec(size_t(d.c_out), 3);
  std::vector<float> out(size_t(d.batch * d.c_out * d.h_out * d.w_out));
  for (auto _ : state) {
    kern::conv2d_forward(x.data(), w.data(), b.data(), out.data(), d);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
}

void conv_backward_weight_serial(benchmark::State& state,
                                 const kern::ConvDims& d) {
  const auto x = random_vec(size_t(d.batch * d.c_in * d.h_in * d.w_in), 1);
  const auto g = random_vec(size_t(d.batch * d.c_out * d.h_out * d.w_out), 2);
  std::vector<float> gw(size_t(d.c_out * (d.c_in / d.groups) * d.kh * d.kw));
  for (auto _ : state) {
    std::fill(gw.begin(), gw.end(), 0.0f);
    kern_ref::conv2d_backward_weight(g.data(), x.data(), gw.data(), d);
    benchmark::DoNotOptimize(gw.data());
  }
}

void conv_backward_weight_omp(benchmark::State& state,
                              const kern::ConvDims& d) {
  const auto x = random_vec(size_t(d.batch * d.c_in * d.h_in * d.w_in), 1);
  const auto g = random_vec(size_t(d.batch * d.c_out * d.h_out * d.w_out), 2);
  std::vector<float> gw(size_t(d.c_out * (d.c_in / d.groups) * d.kh * d.kw));
  for (auto _ : state) {
    std::fill(gw.begin(), gw.end(), 0.0f);
    kern::conv2d_backward_weight(g.data(), x.data(), gw.data(), d);
    benchmark::DoNotOptimize(gw.data());
  }
}

void group_norm_stats_serial(benchmark::State& state) {
  const auto x = random_vec(size_t(8 * 32 * 64 * 64), 1);
  std::vector<float> mean(8 * 8), istd(8 * 8);
  for (auto _ : state) {
    kern_ref::group_norm_stats(x.data(), 8, 32, 64 * 64, 8, 1e-5f,
                               mean.data(), istd.data());
    benchmark::DoNotOptimize(mean.data());
  }
}

void group_norm_stats_omp(benchmark::State& state) {
  const auto x = random_vec(size_t(8 * 32 * 64 * 64), 1);
  std::vector<float> mean(8 * 8), istd(8 * 8);
  for (auto _ : state) {
    kern::group_norm_stats(x.data(), 8, 32, 64 * 64, 8, 1e-5f, mean.data(),
                           istd.data());
    benchmark::DoNotOptimize(mean.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(conv_forward_serial, stem, stem_dims());
BENCHMARK_CAPTURE(conv_forward_omp, stem, stem_dims());
BENCHMARK_CAPTURE(conv_forward_serial, stage, stage_dims());
BENCHMARK_CAPTURE(conv_forward_omp, stage, stage_dims());
BENCHMARK_CAPTURE(conv_backward_weight_serial, stage, stage_dims());
BENCHMARK_CAPTURE(conv_backward_weight_omp, stage, stage_dims());
BENCHMARK(group_norm_stats_serial);
BENCHMARK(group_norm_stats_omp);

BENCHMARK_MAIN();
