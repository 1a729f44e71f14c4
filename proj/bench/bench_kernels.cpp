#include <benchmark/benchmark.h>

#include <random>

#include "flowrace/entity.hpp"
#include "flowrace/kernels.hpp"
#include "flowrace/sim/engine.hpp"
#include "flowrace/sim/random_scenario.hpp"

using namespace flowrace;

namespace {

std::vector<std::vector<std::size_t>> random_dag(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> succ(n);
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (int k = 0; k < 3; ++k) succ[i].push_back(i + 1 + rng() % (n - i - 1));
  return succ;
}

void BM_ClosureParallel(benchmark::State& st) {
  const auto g = random_dag(static_cast<std::size_t>(st.range(0)), 7);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::transitive_closure(g));
}

void BM_ClosureSerial(benchmark::State& st) {
  const auto g = random_dag(static_cast<std::size_t>(st.range(0)), 7);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::transitive_closure_serial(g));
}

std::vector<std::uint32_t> keys(std::size_t n) {
  std::mt19937_64 rng(11);
  std::vector<std::uint32_t> out(n);
  for (auto& k : out) k = static_cast<std::uint32_t>(rng() % 64);
  return out;
}

void BM_PairsParallel(benchmark::State& st) {
  const auto k = keys(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(kernels::conflicting_pairs(k.size(), [&](std::size_t i, std::size_t j) { return k[i] == k[j]; }));
}

void BM_PairsSerial(benchmark::State& st) {
  const auto k = keys(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(
        kernels::conflicting_pairs_serial(k.size(), [&](std::size_t i, std::size_t j) { return k[i] == k[j]; }));
}

TraceSet big_trace() {
  TraceSet all;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto run = sim::run_scenario(sim::random_scenario(s), s);
    all.data_spans.insert(all.data_spans.end(), run.trace.data_spans.begin(), run.trace.data_spans.end());
  }
  return all;
}

void BM_ExtractParallel(benchmark::State& st) {
  static const auto ts = big_trace();
  const auto rules = PkRules::defaults();
  for (auto _ : st) benchmark::DoNotOptimize(extract_all(ts, rules));
}

void BM_ExtractSerial(benchmark::State& st) {
  static const auto ts = big_trace();
  const auto rules = PkRules::defaults();
  for (auto _ : st) benchmark::DoNotOptimize(extract_all_serial(ts, rules));
}

}  // namespace

BENCHMARK(BM_ClosureParallel)->Arg(256)->Arg(1024);
BENCHMARK(BM_ClosureSerial)->Arg(256)->Arg(1024);
BENCHMARK(BM_PairsParallel)->Arg(1000)->Arg(4000);
BENCHMARK(BM_PairsSerial)->Arg(1000)->Arg(4000);
BENCHMARK(BM_ExtractParallel);
BENCHMARK(BM_ExtractSerial);

BENCHMARK_MAIN();
