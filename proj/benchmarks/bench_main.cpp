#include <benchmark/benchmark.h>

#include "conelab/operator_core.hpp"
#include "conelab/random_ops.hpp"

using namespace conelab;

static void BM_PartialTrace(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  Rng rng(1);
  Matrix x = random_hermitian(rng, d * d);
  for (auto _ : state) {
    Matrix y = partial_trace_m(x, {d, d}, {0});
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_PartialTrace)->Arg(4)->Arg(9)->Arg(16);

static void BM_PartialTranspose(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  Rng rng(2);
  Matrix x = random_hermitian(rng, d * d);
  for (auto _ : state) {
    Matrix y = partial_transpose_m(x, {d, d}, {1});
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_PartialTranspose)->Arg(4)->Arg(9)->Arg(16);

static void BM_ChoiKraus(benchmark::State& state) {
  int d = static_cast<int>(state.range(0));
  Rng rng(3);
  ChoiOperator j = random_cptp_choi(rng, d, d);
  for (auto _ : state) {
    KrausSet k = choi_kraus(j);
    benchmark::DoNotOptimize(k.left.data());
  }
}
BENCHMARK(BM_ChoiKraus)->Arg(2)->Arg(4)->Arg(8);

BENCHMARK_MAIN();
