#include <benchmark/benchmark.h>

#include "cglab/experiment.hpp"
#include "cglab/rng.hpp"
#include "cglab/transport.hpp"
#include "cglab/welfare.hpp"

using namespace cglab;

namespace {

const PreparedExperiment& prepared() {
  static const PreparedExperiment prep = [] {
    ExperimentConfig c;
    c.source.synthetic.drivers = 240;
    c.source.synthetic.days = 30;
    c.simulation.frames = 200;
    return prepare(c);
  }();
  return prep;
}

}  // namespace

static void BM_Emd(benchmark::State& state) {
  const auto metric = GroundMetric::from_action_set();
  Rng rng = make_rng(7);
  std::vector<std::pair<FlowDistribution, FlowDistribution>> pairs;
  for (int i = 0; i < 256; ++i) {
    PerDistrict a{}, b{};
    for (std::size_t d = 0; d < kDistricts; ++d) {
      a[d] = 50.0 * uniform01(rng);
      b[d] = 50.0 * uniform01(rng);
    }
    const FlowDistribution fa(a), fb(b);
    pairs.emplace_back(fa, fb.rescaled(fa.total()));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ % pairs.size()];
    benchmark::DoNotOptimize(emd(a, b, metric));
  }
}
BENCHMARK(BM_Emd);

static void BM_HopsSimulation(benchmark::State& state) {
  const auto& prep = prepared();
  SimulationOptions opts;
  opts.frames = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto set = simulate_hypothetical_outcomes(prep.scenarios[1], prep.model, opts, ++seed);
    benchmark::DoNotOptimize(set.frames.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HopsSimulation)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_MaxWelfare(benchmark::State& state) {
  const auto& prep = prepared();
  AugmentedLagrangianOptions opts;
  opts.restarts = static_cast<int>(state.range(0));
  const double n = static_cast<double>(prep.drivers(1));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(max_welfare(n, prep.model, opts, ++seed).max_pickups);
  }
}
BENCHMARK(BM_MaxWelfare)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
