#include <benchmark/benchmark.h>

#include "swlab/crossing.hpp"
#include "swlab/oracle.hpp"
#include "swlab/propagate.hpp"

using namespace swlab;

namespace {

FourierPotential cos_pot(double lambda) {
  return FourierPotential::from_positive_coeffs(
      {{1, cplx(lambda * kSqrt2Pi, 0.0)}});
}

void BM_propagate_unit(benchmark::State& state) {
  const FourierPotential pot = cos_pot(0.25);
  const int N = static_cast<int>(state.range(0));
  PropagatorConfig cfg;
  cfg.half_width = N;
  cfg.tol = 1e-8;
  const FiberState s = FiberState::unit(0.2, N, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagate(s, 4.0, pot, cfg));
  }
}
BENCHMARK(BM_propagate_unit)->Arg(64)->Arg(128)->Arg(256);

void BM_propagator_row(benchmark::State& state) {
  const FourierPotential pot = cos_pot(0.25);
  const int n = static_cast<int>(state.range(0));
  const PropagatorConfig cfg = default_config(n, 8.0, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagator_row(n, 8.0, pot, cfg, 0.3));
  }
}
BENCHMARK(BM_propagator_row)->Arg(8)->Arg(32);

void BM_dense_oracle(benchmark::State& state) {
  const FourierPotential pot = cos_pot(0.25);
  const int N = static_cast<int>(state.range(0));
  DenseConfig dc;
  dc.half_width = N;
  dc.step = 1e-2;
  const FiberState s = FiberState::unit(0.2, N, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dense_propagate(s, 1.0, pot, dc));
  }
}
BENCHMARK(BM_dense_oracle)->Arg(32)->Arg(64);

void BM_ibp_residual(benchmark::State& state) {
  const FourierPotential pot = cos_pot(0.1);
  PropagatorConfig cfg;
  cfg.half_width = 32;
  cfg.tol = 1e-8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ibp_residual(6, 2, pot, cfg, 1e-8, 4));
  }
}
BENCHMARK(BM_ibp_residual);

}  // namespace

BENCHMARK_MAIN();
