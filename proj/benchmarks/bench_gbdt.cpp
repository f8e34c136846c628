#include <benchmark/benchmark.h>

#include "rugwatch/gbdt.hpp"
#include "rugwatch/random.hpp"

using namespace rugwatch;

namespace {

struct Data {
  gbdt::Matrix x;
  std::vector<int> y;
};

Data make(std::size_t rows) {
  Rng rng(6);
  Data d{gbdt::Matrix(rows, 16), {}};
  for (std::size_t r = 0; r < rows; ++r) {
    const int label = rng.bernoulli(0.25);
    for (std::size_t f = 0; f < 16; ++f) {
      d.x.at(r, f) = rng.uniform(-1, 1) + (f < 4 ? label * 0.8 : 0.0);
    }
    d.y.push_back(label);
  }
  return d;
}

void BM_Train(benchmark::State& state) {
  const auto d = make(static_cast<std::size_t>(state.range(0)));
  gbdt::Hyperparams hp;
  hp.n_rounds = 50;
  hp.max_depth = 6;
  for (auto _ : state) benchmark::DoNotOptimize(gbdt::train(d.x, d.y, hp, 1));
}
BENCHMARK(BM_Train)->Arg(1'000)->Arg(10'000)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state) {
  const auto d = make(10'000);
  gbdt::Hyperparams hp;
  hp.n_rounds = 50;
  const auto model = gbdt::train(d.x, d.y, hp, 1).model;
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(d.x));
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMillisecond);

}  // namespace
