#include <benchmark/benchmark.h>

#include "demecoal/consistency.hpp"
#include "demecoal/exact.hpp"
#include "demecoal/rates.hpp"
#include "demecoal/sampling.hpp"
#include "demecoal/simulate.hpp"

using namespace demecoal;

namespace {

ModelParams model() {
  ModelParams p;
  p.deme_size = 3;
  p.source_demes = 2;
  p.migration_rate = 0.5;
  p.extinction_rate = 1.0;
  p.reproduction_law = UnitIntervalMeasure::beta(2, 2);
  p.extinction_law = UnitIntervalMeasure::dirac(0.5);
  return p;
}

void BM_SlowRates(benchmark::State& state) {
  const auto p = model();
  const auto start = StructuredPartition::scattered_singletons(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(slow_rates(p, start));
}
BENCHMARK(BM_SlowRates)->DenseRange(3, 7);

void BM_LimitProcessTables(benchmark::State& state) {
  const auto p = model();
  for (auto _ : state) benchmark::DoNotOptimize(LimitProcess(p, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_LimitProcessTables)->DenseRange(4, 10, 2);

void BM_LimitGenealogy(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LimitProcess lp(model(), n);
  const auto start = StructuredPartition::scattered_singletons(n);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(lp.simulate(start, {}, rng));
}
BENCHMARK(BM_LimitGenealogy)->Arg(4)->Arg(8)->Arg(12);

void BM_FiniteDGenealogy(benchmark::State& state) {
  const auto p = model();
  FiniteDConfig config;
  config.demes = state.range(0);
  const auto start = StructuredPartition::scattered_singletons(4);
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_finite_d(start, p, config, {}, rng));
}
BENCHMARK(BM_FiniteDGenealogy)->Arg(30)->Arg(300)->Arg(3000);

void BM_FastAbsorption(benchmark::State& state) {
  const auto p = model();
  const auto start = StructuredPartition::single_deme_singletons(static_cast<int>(state.range(0)));
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(run_fast_to_absorption(start, p, rng));
}
BENCHMARK(BM_FastAbsorption)->Arg(5)->Arg(20);

void BM_SamplingRecursion(benchmark::State& state) {
  const auto law = UnitIntervalMeasure::beta(2, 2);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    SamplingRecursion rec(law, 0.5);
    double total = 0.0;
    for (const auto& c : allele_configs(n)) total += rec.configuration_probability(c);
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_SamplingRecursion)->Arg(6)->Arg(10)->Arg(14);

void BM_TransientOracle(benchmark::State& state) {
  const ProcessModel m{ProcessKind::kSlow, model()};
  const auto start = StructuredPartition::scattered_singletons(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(transient_distribution_exact(m, start, 1.0));
}
BENCHMARK(BM_TransientOracle)->Arg(3)->Arg(4)->Arg(5);

void BM_Consistency(benchmark::State& state) {
  const auto p = model();
  for (auto _ : state) benchmark::DoNotOptimize(check_lambda_g_consistency(p, 5));
}
BENCHMARK(BM_Consistency);

}  // namespace

BENCHMARK_MAIN();
