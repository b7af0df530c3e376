#include <benchmark/benchmark.h>

#include <random>

#include "hydroqkd/montecarlo.hpp"
#include "hydroqkd/postproc.hpp"

using namespace hydroqkd;

namespace {

montecarlo::RunInputs bench_inputs(std::int64_t pulses) {
  montecarlo::RunInputs in;
  in.config.pulse_count = static_cast<std::uint64_t>(pulses);
  in.environment = channel::EnvironmentProfile::hydropower_default();
  return in;
}

BitString random_bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  BitString b(n);
  for (std::size_t i = 0; i < n; ++i) b.set(i, gen() & 1);
  return b;
}

void BM_MonteCarloParallel(benchmark::State& state) {
  const auto in = bench_inputs(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(montecarlo::run(in));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MonteCarloSerial(benchmark::State& state) {
  const auto in = bench_inputs(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(montecarlo::run_serial(in));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ToeplitzPacked(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const BitString key = random_bits(n, 1), seed = random_bits(2 * n - 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(postproc::privacy_amplify(key, n, seed));
  state.SetComplexityN(state.range(0));
}

void BM_ToeplitzReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const BitString key = random_bits(n, 1), seed = random_bits(2 * n - 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(postproc::toeplitz_reference(key, n, seed));
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_MonteCarloParallel)->Arg(1'000'000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MonteCarloSerial)->Arg(1'000'000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ToeplitzPacked)->RangeMultiplier(4)->Range(256, 16384)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_ToeplitzReference)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
