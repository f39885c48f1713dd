#include <benchmark/benchmark.h>

#include "pipelayout/mdp.hpp"
#include "pipelayout/observe.hpp"
#include "pipelayout/rng.hpp"
#include "pipelayout/scene.hpp"

namespace {

using namespace pipelayout;

void BM_Encode(benchmark::State& state) {
  Scene scene = generate_scene(7, SceneConfig::desk({20, 20, 15}));
  ObservationEncoder encoder(scene);
  RngStream rng(1);
  std::vector<Cell> cells;
  for (int x = 0; x < scene.dims.x; ++x) {
    for (int y = 0; y < scene.dims.y; ++y) {
      for (int z = 0; z < scene.dims.z; ++z) {
        Cell c{x, y, z};
        if (!is_blocked(scene, c)) cells.push_back(c);
      }
    }
  }
  Observation obs;
  std::size_t i = 0;
  for (auto _ : state) {
    const Cell& cur = cells[i++ % cells.size()];
    encoder.encode(cur, static_cast<Dir>(i % kNumDirs), obs);
    benchmark::DoNotOptimize(obs);
  }
}
BENCHMARK(BM_Encode);

void BM_EncodeNoPrecompute(benchmark::State& state) {
  Scene scene = generate_scene(7, SceneConfig::desk({20, 20, 15}));
  AgentState agent;
  agent.cur = scene.start;
  agent.path = {scene.start};
  Observation obs;
  for (auto _ : state) {
    obs = observe(scene, agent);
    benchmark::DoNotOptimize(obs);
  }
}
BENCHMARK(BM_EncodeNoPrecompute);

void BM_EnvStep(benchmark::State& state) {
  PipeEnv env;
  RngStream rng(3);
  std::uint64_t episode = 0;
  env.reset(episode, SceneConfig::desk({20, 20, 15}));
  for (auto _ : state) {
    if (!env.running()) env.reset(++episode, SceneConfig::desk({20, 20, 15}));
    auto mask = env.action_mask();
    int legal[kNumDirs], n = 0;
    for (int d = 0; d < kNumDirs; ++d) {
      if (mask[d]) legal[n++] = d;
    }
    auto result = env.step(legal[rng.bounded(n)]);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_EnvStep);

}  // namespace

BENCHMARK_MAIN();
