#include <benchmark/benchmark.h>

#include "pipelayout/planner.hpp"
#include "pipelayout/rng.hpp"
#include "pipelayout/scene.hpp"

namespace {

using namespace pipelayout;

ConstraintSet set_for(int index) {
  switch (index) {
    case 0: return ConstraintSet::length_only();
    case 1: return ConstraintSet::length_elbow();
    default: return ConstraintSet::all();
  }
}

void BM_Dijkstra(benchmark::State& state) {
  Scene scene = generate_scene(11, SceneConfig::desk({20, 20, 15}));
  const ConstraintSet cs = set_for(static_cast<int>(state.range(0)));
  std::int64_t expanded = 0;
  for (auto _ : state) {
    PlanResult r = plan_dijkstra(scene, cs);
    expanded += r.expanded_nodes;
    benchmark::DoNotOptimize(r);
  }
  state.counters["expanded"] =
      benchmark::Counter(static_cast<double>(expanded), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_Dijkstra)->Arg(0)->Arg(1)->Arg(2);

void BM_AStar(benchmark::State& state) {
  Scene scene = generate_scene(11, SceneConfig::desk({20, 20, 15}));
  const ConstraintSet cs = set_for(static_cast<int>(state.range(0)));
  std::int64_t expanded = 0;
  for (auto _ : state) {
    PlanResult r = plan_astar(scene, cs);
    expanded += r.expanded_nodes;
    benchmark::DoNotOptimize(r);
  }
  state.counters["expanded"] =
      benchmark::Counter(static_cast<double>(expanded), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_AStar)->Arg(0)->Arg(1)->Arg(2);

void BM_ClearanceField(benchmark::State& state) {
  Scene scene = generate_scene(11, SceneConfig::desk({20, 20, 15}));
  OccupancyGrid grid(scene);
  for (auto _ : state) {
    ClearanceField field(grid);
    benchmark::DoNotOptimize(field);
  }
}
BENCHMARK(BM_ClearanceField);

}  // namespace

BENCHMARK_MAIN();
