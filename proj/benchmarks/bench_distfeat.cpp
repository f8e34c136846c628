#include <benchmark/benchmark.h>

#include "rugwatch/distfeat.hpp"
#include "rugwatch/random.hpp"

using namespace rugwatch;

namespace {

void BM_MaxDrop(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (auto& v : s) v = rng.uniform(0.0, 1e6);
  for (auto _ : state) {
    const auto st = distfeat::max_drop(std::span<const double>(s));
    benchmark::DoNotOptimize(distfeat::recovery(std::span<const double>(s), st));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MaxDrop)->RangeMultiplier(10)->Range(100, 1'000'000)->Complexity();

void BM_HhiExact(benchmark::State& state) {
  Rng rng(4);
  distfeat::BalanceMap m;
  for (int i = 0; i < state.range(0); ++i) {
    Address::Bytes b{};
    b[16] = static_cast<std::uint8_t>(i >> 24);
    b[17] = static_cast<std::uint8_t>(i >> 16);
    b[18] = static_cast<std::uint8_t>(i >> 8);
    b[19] = static_cast<std::uint8_t>(i);
    m.set(Address(b), Amount(rng.uniform_int(1, 1'000'000'000'000)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(distfeat::hhi_exact(m, {}));
}
BENCHMARK(BM_HhiExact)->Arg(100)->Arg(10'000);

}  // namespace
