#include <benchmark/benchmark.h>

#include <vector>

#include "bootdqn/agents.hpp"
#include "bootdqn/envs.hpp"
#include "bootdqn/heads.hpp"
#include "bootdqn/nn.hpp"
#include "bootdqn/replay.hpp"
#include "bootdqn/tabular.hpp"

using namespace bootdqn;

static void BM_MlpForwardBackward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const std::size_t hidden[] = {width, width};
  const auto layout = nn::mlp_layout(32, hidden, 2);
  const auto params = nn::init_params(layout, 7);
  auto grads = nn::zero_gradients(layout);
  std::vector<double> x(32, 0.5);
  const std::vector<double> g{1.0, -1.0};
  nn::Trace trace;
  for (auto _ : state) {
    nn::forward_into(params, layout, x, trace);
    nn::backward_accumulate(params, layout, trace, g, grads);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(16)->Arg(64)->Arg(256);

static void BM_MaskedTrainStep(benchmark::State& state) {
  const int n = 30;
  const auto chain = envs::calibrate_chain(n);
  NetShape shape{static_cast<std::size_t>(n), {}, {16}, 2, static_cast<std::size_t>(state.range(0))};
  MultiHeadNet net(shape, 1);
  auto target = make_target(net);
  auto opt = make_optimizer(net, {});
  Rng rng = make_rng(3);
  std::vector<Transition> batch;
  for (int i = 0; i < 32; ++i) {
    const int s = 1 + i % n;
    batch.push_back({envs::encode(chain, s), i % 2, 0.0, envs::encode(chain, std::min(n, s + 1)), false,
                     sample_mask(MaskDistribution::bernoulli(0.5), shape.num_heads, rng)});
  }
  for (auto _ : state) {
    auto stats = masked_train_step(net, target, opt, std::span<const Transition>(batch), {});
    benchmark::DoNotOptimize(stats);
  }
}
BENCHMARK(BM_MaskedTrainStep)->Arg(1)->Arg(10)->Arg(20);

static void BM_SolveFiniteHorizon(benchmark::State& state) {
  const auto chain = envs::calibrate_chain(static_cast<int>(state.range(0)));
  const auto mdp = envs::to_tabular(chain);
  for (auto _ : state) {
    auto sol = tabular::solve_finite_horizon(mdp);
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(BM_SolveFiniteHorizon)->Arg(10)->Arg(50);

static void BM_Ucrl2Plan(benchmark::State& state) {
  const auto chain = envs::slip_chain(6);
  auto conf = tabular::ConfidenceSet::empty(6, 2, 0.05);
  Rng rng = make_rng(5);
  int s = chain.start_state;
  for (int t = 0; t < 500; ++t) {
    const int a = static_cast<int>(rng() % 2);
    const auto r = envs::chain_step(chain, s, t % chain.horizon, a, rng);
    conf.record({static_cast<std::size_t>(s - 1), static_cast<std::size_t>(a),
                 static_cast<std::size_t>(r.next_state - 1), r.reward});
    s = r.next_state;
  }
  for (auto _ : state) {
    auto sol = tabular::ucrl2_plan(conf, static_cast<std::size_t>(chain.horizon));
    benchmark::DoNotOptimize(sol);
  }
}
BENCHMARK(BM_Ucrl2Plan);
BENCHMARK_MAIN();
