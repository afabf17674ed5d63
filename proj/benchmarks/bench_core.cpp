#include <benchmark/benchmark.h>

#include <vector>

#include "fbq/eig_distribution.hpp"
#include "fbq/quantizer.hpp"
#include "fbq/random_matrix.hpp"
#include "fbq/simulation.hpp"

using namespace fbq;

static void BM_EigenDraw(benchmark::State& state) {
  const AntennaConfig cfg(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  EigenSampler sampler(cfg);
  Rng rng(1);
  std::vector<double> lam(cfg.m());
  for (auto _ : state) {
    sampler.draw(rng, lam);
    benchmark::DoNotOptimize(lam.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EigenDraw)->Args({1, 1})->Args({2, 3})->Args({4, 4});

static void BM_DesignKkt(benchmark::State& state) {
  const auto dist = EigDistribution::smallest_analytic(AntennaConfig(1, 1));
  const int bins = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(design_kkt(dist, bins, 1e3, 3.0));
}
BENCHMARK(BM_DesignKkt)->Arg(2)->Arg(4)->Arg(8);

static void BM_DesignEquiPower(benchmark::State& state) {
  const auto dist = EigDistribution::smallest_analytic(AntennaConfig(1, 1));
  const int bins = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(design_equi_power(dist, bins, 1e3, 3.0));
}
BENCHMARK(BM_DesignEquiPower)->Arg(2)->Arg(4)->Arg(8);

// One Monte Carlo chunk of a 2x2 no-CSIT sweep point on a single thread.
static void BM_SweepChunk(benchmark::State& state) {
  SweepConfig c;
  c.cfg = AntennaConfig(2, 2);
  c.scheme = SchemeKind::NoCsit;
  c.rate_bits = 2.0;
  c.snr_db = {10.0};
  c.trials = kSweepChunk;
  c.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep(c));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kSweepChunk));
}
BENCHMARK(BM_SweepChunk)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
