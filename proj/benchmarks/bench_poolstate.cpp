#include <benchmark/benchmark.h>

#include "rugwatch/poolstate.hpp"
#include "rugwatch/random.hpp"

using namespace rugwatch;

namespace {

Amount big(Rng& rng, int digits) {
  BigInt v = rng.uniform_int(1, 9);
  for (int i = 1; i < digits; ++i) v = v * 10 + rng.uniform_int(0, 9);
  return Amount(v);
}

void BM_SwapInForExactOut(benchmark::State& state) {
  Rng rng(1);
  const Amount x = big(rng, 30), y = big(rng, 30), dy = y / 7;
  const Rational fee = poolstate::default_fee();
  for (auto _ : state) benchmark::DoNotOptimize(poolstate::swap_in_for_exact_out(x, y, dy, fee));
}
BENCHMARK(BM_SwapInForExactOut);

void BM_SwapOutForExactIn(benchmark::State& state) {
  Rng rng(2);
  const Amount x = big(rng, 30), y = big(rng, 30), dx = x / 3;
  const Rational fee = poolstate::default_fee();
  for (auto _ : state) benchmark::DoNotOptimize(poolstate::swap_out_for_exact_in(x, y, dx, fee));
}
BENCHMARK(BM_SwapOutForExactIn);

}  // namespace
