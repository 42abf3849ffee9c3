// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "mintood/kernels.hpp"
#include "mintood/random.hpp"

using namespace mintood;
namespace k = mintood::kernels;

namespace {

Tensor2 random(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Tensor2 t(r, c);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

template <Tensor2 (*F)(const Tensor2&, const Tensor2&)>
void bm_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor2 a = random(n, n, 1);
  const Tensor2 b = random(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <Tensor2 (*F)(const Tensor2&)>
void bm_covariance(benchmark::State& state) {
  const Tensor2 rows = random(static_cast<std::size_t>(state.range(0)), 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(F(rows));
}

template <Vector (*F)(const Tensor2&, std::span<const double>, const Tensor2&)>
void bm_quadratic(benchmark::State& state) {
  const Tensor2 pts = random(static_cast<std::size_t>(state.range(0)), 64, 4);
  const Tensor2 m = random(64, 64, 5);
  const Vector center(64, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(F(pts, center, m));
}

}  // namespace

BENCHMARK(bm_matmul<k::serial::matmul>)->Name("matmul/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(bm_matmul<k::parallel::matmul>)->Name("matmul/parallel")->RangeMultiplier(2)->Range(32, 256)->UseRealTime();
BENCHMARK(bm_matmul<k::serial::matmul_tn>)->Name("matmul_tn/serial")->Arg(256);
BENCHMARK(bm_matmul<k::parallel::matmul_tn>)->Name("matmul_tn/parallel")->Arg(256)->UseRealTime();
BENCHMARK(bm_matmul<k::serial::matmul_nt>)->Name("matmul_nt/serial")->Arg(256);
BENCHMARK(bm_matmul<k::parallel::matmul_nt>)->Name("matmul_nt/parallel")->Arg(256)->UseRealTime();
BENCHMARK(bm_covariance<k::serial::covariance>)->Name("covariance/serial")->Arg(600)->Arg(4800);
BENCHMARK(bm_covariance<k::parallel::covariance>)->Name("covariance/parallel")->Arg(600)->Arg(4800)->UseRealTime();
BENCHMARK(bm_quadratic<k::serial::quadratic_forms>)->Name("quadratic_forms/serial")->Arg(300)->Arg(3000);
BENCHMARK(bm_quadratic<k::parallel::quadratic_forms>)->Name("quadratic_forms/parallel")->Arg(300)->Arg(3000)->UseRealTime();

BENCHMARK_MAIN();
