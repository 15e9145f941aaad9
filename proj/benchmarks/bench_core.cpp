#include <benchmark/benchmark.h>

#include "cgnn/commute.hpp"
#include "cgnn/io.hpp"
#include "cgnn/model.hpp"
#include "cgnn/rewiring.hpp"
#include "cgnn/spectral.hpp"

using namespace cgnn;

namespace {

struct Fixture {
  io::Dataset data;
  DiGraph walk;
  StochasticMatrix p;
  PerronVector pi;
  DiLapMatrix t;
};

Fixture make(std::size_t n) {
  io::SyntheticParams sp;
  // keep the expected degree near 20 as n grows
  sp.p_in = std::min(1.0, 40.0 / static_cast<double>(n));
  sp.p_out = sp.p_in / 15.0;
  Fixture f{io::generate_synthetic(io::SyntheticKind::two_block, n, sp, 1), {}, {}, {}, {}};
  f.walk = rewire(f.data.graph, f.data.features).rewired;
  f.p = transition_matrix(f.walk);
  f.pi = perron_vector(f.p);
  f.t = dilap(f.walk, f.p);
  return f;
}

void BM_DilapAssembly(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dilap(f.walk, f.p));
  state.counters["edges"] = static_cast<double>(f.walk.num_edges());
}
BENCHMARK(BM_DilapAssembly)->Arg(500)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_PerronVector(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(perron_vector(f.p));
}
BENCHMARK(BM_PerronVector)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_RandomizedSvd(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)));
  const auto q = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(pseudoinverse_factors(f.t, q, 0));
}
BENCHMARK(BM_RandomizedSvd)->Args({2000, 5})->Args({2000, 20})->Args({8000, 5})->Unit(benchmark::kMillisecond);

void BM_EdgeCommuteTimes(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)));
  const auto factors = pseudoinverse_factors(f.t, 5, 0);
  for (auto _ : state) benchmark::DoNotOptimize(edge_commute_times(factors, f.pi, f.data.graph.edges()));
}
BENCHMARK(BM_EdgeCommuteTimes)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)));
  const auto params = ModelParams::init(f.data.features.cols(), 32, 2, 2, 0);
  const auto w = ProximityWeights::uniform(f.data.graph.num_edges());
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, f.data.graph, f.data.features, w));
}
BENCHMARK(BM_Forward)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
