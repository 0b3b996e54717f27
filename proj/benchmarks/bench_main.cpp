#include <benchmark/benchmark.h>

#include <cmath>

#include "bdgeom/process.hpp"
#include "bdgeom/statistics.hpp"
#include "bdgeom/theory.hpp"

using namespace bdgeom;

namespace {

SimulationConfig bench_config(double n, double gamma) {
  SimulationConfig cfg;
  cfg.n = n;
  cfg.horizon = 1e6;
  cfg.seed = 42;
  cfg.gamma = gamma;
  return cfg;
}

}  // namespace

static void BM_GridQuery(benchmark::State& state) {
  const double n = static_cast<double>(state.range(0));
  const SimulationConfig cfg = bench_config(n, 1.0);
  const double r = cfg.interaction_radius();
  CounterRng rng(1, 0);
  const Configuration points = sample_stationary(cfg, rng, r);
  std::size_t found = 0;
  for (auto _ : state) {
    const Position x{rng.uniform(), rng.uniform()};
    points.index().for_each_within(x, r, [&](PointId, const Position&) { ++found; });
  }
  benchmark::DoNotOptimize(found);
}
BENCHMARK(BM_GridQuery)->Arg(1000)->Arg(100000);

static void BM_EngineEvent(benchmark::State& state) {
  const SimulationConfig cfg = bench_config(static_cast<double>(state.range(0)), 1.0);
  CounterRng rng(2, 0);
  BirthDeathEngine engine(cfg, sample_stationary(cfg, rng, cfg.interaction_radius()), CounterRng(2, 1));
  for (auto _ : state) {
    const auto e = engine.propose();
    engine.commit(*e);
  }
}
BENCHMARK(BM_EngineEvent)->Arg(1000)->Arg(100000);

static void BM_TrackerEvent(benchmark::State& state) {
  static const char* const selectors[] = {"clique:2", "clique:3", "clique:3:balls", "morse:3:circumball"};
  const char* selector = selectors[state.range(0)];
  const SimulationConfig cfg = bench_config(1000.0, 2.0);
  const FunctionalSelection sel = parse_functional(selector, cfg.interaction_radius());
  CounterRng rng(3, 0);
  Configuration initial = sample_stationary(cfg, rng, tracker_cell_size(sel.functional, sel.neighborhood));
  StatisticTracker tracker(initial, sel.functional, sel.neighborhood);
  BirthDeathEngine engine(cfg, std::move(initial), CounterRng(3, 1));
  for (auto _ : state) {
    const auto e = engine.propose();
    tracker.apply_event(*e, engine.configuration());
    engine.commit(*e);
  }
  benchmark::DoNotOptimize(tracker.value());
  state.SetLabel(selector);
}
BENCHMARK(BM_TrackerEvent)->DenseRange(0, 3);

static void BM_ExclusiveKappa(benchmark::State& state) {
  const LocalFunctional f = make_clique(3, 1.0);
  const NeighborhoodMap balls = make_neighborhood(NeighborhoodKind::balls, f);
  const McBudget budget{1000, static_cast<std::size_t>(state.range(0))};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kappa_kjl_series(f, balls, Density::uniform(2), 1.0, 1, 20, budget, ++seed));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ExclusiveKappa)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
