#include <benchmark/benchmark.h>

#include <array>
#include <vector>

#include "pipelayout/policy.hpp"
#include "pipelayout/rng.hpp"

namespace {

using namespace pipelayout;

std::vector<double> random_obs(RngStream& rng, int n) {
  std::vector<double> obs(n);
  for (double& v : obs) v = rng.unit();
  return obs;
}

void BM_Forward(benchmark::State& state) {
  PolicyNet net(kObservationSize, static_cast<int>(state.range(0)), 4);
  net.init_params(1);
  RngStream rng(2);
  std::vector<double> obs = random_obs(rng, kObservationSize);
  for (auto _ : state) {
    PolicyOutput out = net.forward(obs);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_Forward)->Arg(128)->Arg(512);

void BM_ForwardBackward(benchmark::State& state) {
  PolicyNet net(kObservationSize, static_cast<int>(state.range(0)), 4);
  net.init_params(1);
  RngStream rng(2);
  std::vector<double> obs = random_obs(rng, kObservationSize);
  std::vector<double> grad(net.param_count());
  PolicyNet::Cache cache;
  std::array<double, kNumActions> dlogits{0.1, -0.2, 0.3, -0.1, 0.05, -0.15};
  for (auto _ : state) {
    PolicyOutput out = net.forward_cached(obs, cache);
    benchmark::DoNotOptimize(out);
    net.backward(cache, dlogits, 0.5, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(128)->Arg(512);

void BM_Act(benchmark::State& state) {
  PolicyNet net(kObservationSize, static_cast<int>(state.range(0)), 4);
  net.init_params(1);
  RngStream rng(2);
  std::vector<double> obs = random_obs(rng, kObservationSize);
  std::array<bool, kNumActions> mask{true, true, false, true, true, true};
  for (auto _ : state) {
    ActResult r = act(net, obs, mask, ActMode::Sample, rng);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Act)->Arg(128)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
