// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "flexembed/baselines.hpp"
#include "flexembed/kernels.hpp"
#include "flexembed/rng.hpp"

using namespace flexembed;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.normal();
  return m;
}

template <auto Gemm>
void gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  Matrix c(n, n);
  for (auto _ : state) {
    Gemm(n, n, n, a.values(), b.values(), c.values());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n * n * n));
}

template <auto Cosine>
void cosine(benchmark::State& state) {
  const Matrix x = random_matrix(static_cast<std::size_t>(state.range(0)), 8, 3);
  Matrix out;
  for (auto _ : state) {
    Cosine(x, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Dtw>
void dtw(benchmark::State& state) {
  baselines::RawSeriesSet set;
  set.series = random_matrix(static_cast<std::size_t>(state.range(0)), 365, 4);
  for (std::size_t i = 0; i < set.size(); ++i) set.unit_ids.push_back(std::to_string(i));
  for (auto _ : state) {
    auto d = Dtw(set);
    benchmark::DoNotOptimize(d.data());
  }
}

}  // namespace

BENCHMARK(gemm<kernels::serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(64)->Arg(256);
BENCHMARK(gemm<kernels::parallel::gemm_nn>)->Name("gemm_nn/parallel")->Arg(64)->Arg(256);
BENCHMARK(gemm<kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(64)->Arg(256);
BENCHMARK(gemm<kernels::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(64)->Arg(256);
BENCHMARK(gemm<kernels::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(64)->Arg(256);
BENCHMARK(gemm<kernels::parallel::gemm_tn>)->Name("gemm_tn/parallel")->Arg(64)->Arg(256);
BENCHMARK(cosine<kernels::serial::row_cosine>)->Name("row_cosine/serial")->Arg(40)->Arg(1000);
BENCHMARK(cosine<kernels::parallel::row_cosine>)->Name("row_cosine/parallel")->Arg(40)->Arg(1000);
BENCHMARK(dtw<baselines::dtw_matrix_serial>)->Name("dtw_matrix/serial")->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(dtw<baselines::dtw_matrix>)->Name("dtw_matrix/parallel")->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
