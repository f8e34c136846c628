#include <benchmark/benchmark.h>

#include "rugwatch/random.hpp"
#include "rugwatch/txgraph.hpp"

using namespace rugwatch;

namespace {

Address node(int u) {
  Address::Bytes b{};
  b[17] = static_cast<std::uint8_t>(u >> 16);
  b[18] = static_cast<std::uint8_t>(u >> 8);
  b[19] = static_cast<std::uint8_t>(u);
  return Address(b);
}

// A few hubs plus uniform background edges.
std::vector<evdecode::EventRecord> transfers(std::int64_t n_edges, int n_nodes) {
  Rng rng(5);
  const Address token = node(0xffffff);
  std::vector<evdecode::EventRecord> events;
  for (std::int64_t i = 0; i < n_edges; ++i) {
    const int u = rng.bernoulli(0.3) ? static_cast<int>(rng.uniform_int(0, 49))
                                     : static_cast<int>(rng.uniform_int(0, n_nodes - 1));
    const int v = static_cast<int>(rng.uniform_int(0, n_nodes - 1));
    events.push_back({1, i, token, evdecode::Transfer{node(u), node(v), Amount(rng.uniform_int(1, 1000))},
                      std::nullopt});
  }
  return events;
}

void BM_BuildPeriods(benchmark::State& state) {
  const auto events = transfers(state.range(0), 10'000);
  for (auto _ : state) benchmark::DoNotOptimize(txgraph::build_periods(events, 6500));
}
BENCHMARK(BM_BuildPeriods)->Arg(50'000)->Unit(benchmark::kMillisecond);

void BM_AverageClustering(benchmark::State& state) {
  const auto g = txgraph::build_periods(transfers(state.range(0), 10'000), 6500).front();
  for (auto _ : state) benchmark::DoNotOptimize(txgraph::average_clustering_coefficient(g));
  state.counters["edges"] = static_cast<double>(g.edges.size());
}
BENCHMARK(BM_AverageClustering)->Arg(5'000)->Arg(50'000)->Unit(benchmark::kMillisecond);

}  // namespace
