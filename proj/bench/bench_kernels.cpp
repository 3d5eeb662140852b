// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "csi/kernels.hpp"
#include "csi/random.hpp"

namespace k = csi::kernels;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  csi::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<double> mask(std::size_t n, std::uint64_t seed) {
  csi::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return v;
}

k::ConvShape conv_shape(const benchmark::State& st) {
  const auto side = static_cast<std::size_t>(st.range(0));
  return {side, side, 8, 8, 3};
}

template <auto Kernel>
void conv_forward(benchmark::State& st) {
  const auto s = conv_shape(st);
  const std::size_t plane = s.rows * s.cols;
  const auto in = noise(plane * s.in_channels, 1), w = noise(s.out_channels * s.in_channels * 9, 2);
  const auto b = noise(s.out_channels, 3);
  std::vector<double> out(plane * s.out_channels);
  for (auto _ : st) {
    Kernel(s, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * plane * s.out_channels);
}

template <auto Kernel>
void conv_backward_input(benchmark::State& st) {
  const auto s = conv_shape(st);
  const std::size_t plane = s.rows * s.cols;
  const auto go = noise(plane * s.out_channels, 4), w = noise(s.out_channels * s.in_channels * 9, 5);
  std::vector<double> gi(plane * s.in_channels);
  for (auto _ : st) {
    Kernel(s, go, w, gi);
    benchmark::DoNotOptimize(gi.data());
  }
  st.SetItemsProcessed(st.iterations() * plane * s.in_channels);
}

template <auto Kernel>
void conv_backward_params(benchmark::State& st) {
  const auto s = conv_shape(st);
  const std::size_t plane = s.rows * s.cols;
  const auto in = noise(plane * s.in_channels, 6), go = noise(plane * s.out_channels, 7);
  std::vector<double> gw(s.out_channels * s.in_channels * 9), gb(s.out_channels);
  for (auto _ : st) {
    Kernel(s, in, go, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
  st.SetItemsProcessed(st.iterations() * gw.size());
}

k::ShotShape shot_shape(const benchmark::State& st) {
  const auto side = static_cast<std::size_t>(st.range(0));
  return {side, side, 10, static_cast<std::size_t>(st.range(1))};
}

template <auto Kernel>
void cassi_forward(benchmark::State& st) {
  const auto s = shot_shape(st);
  const std::size_t plane = s.rows * s.cols;
  const auto x = noise(plane * s.bands, 8), c = mask(plane * s.code_planes, 9);
  std::vector<double> y(s.rows * s.det_cols());
  for (auto _ : st) {
    Kernel(s, x, c, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * plane * s.bands);
}

template <auto Kernel>
void cassi_adjoint(benchmark::State& st) {
  const auto s = shot_shape(st);
  const std::size_t plane = s.rows * s.cols;
  const auto y = noise(s.rows * s.det_cols(), 10), c = mask(plane * s.code_planes, 11);
  std::vector<double> x(plane * s.bands);
  for (auto _ : st) {
    std::fill(x.begin(), x.end(), 0.0);
    Kernel(s, y, c, x);
    benchmark::DoNotOptimize(x.data());
  }
  st.SetItemsProcessed(st.iterations() * plane * s.bands);
}

}  // namespace

BENCHMARK(conv_forward<k::serial::conv2d_forward>)->Name("conv_forward/serial")->Arg(32)->Arg(128);
BENCHMARK(conv_forward<k::parallel::conv2d_forward>)->Name("conv_forward/parallel")->Arg(32)->Arg(128);
BENCHMARK(conv_backward_input<k::serial::conv2d_backward_input>)->Name("conv_backward_input/serial")->Arg(32)->Arg(128);
BENCHMARK(conv_backward_input<k::parallel::conv2d_backward_input>)->Name("conv_backward_input/parallel")->Arg(32)->Arg(128);
BENCHMARK(conv_backward_params<k::serial::conv2d_backward_params>)->Name("conv_backward_params/serial")->Arg(32)->Arg(128);
BENCHMARK(conv_backward_params<k::parallel::conv2d_backward_params>)->Name("conv_backward_params/parallel")->Arg(32)->Arg(128);
BENCHMARK(cassi_forward<k::serial::cassi_forward>)->Name("cassi_forward/serial")->Args({256, 1})->Args({256, 10});
BENCHMARK(cassi_forward<k::parallel::cassi_forward>)->Name("cassi_forward/parallel")->Args({256, 1})->Args({256, 10});
BENCHMARK(cassi_adjoint<k::serial::cassi_adjoint_accumulate>)->Name("cassi_adjoint/serial")->Args({256, 1})->Args({256, 10});
BENCHMARK(cassi_adjoint<k::parallel::cassi_adjoint_accumulate>)->Name("cassi_adjoint/parallel")->Args({256, 1})->Args({256, 10});

BENCHMARK_MAIN();
