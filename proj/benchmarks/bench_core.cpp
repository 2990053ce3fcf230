#include "duel/agents.hpp"
#include "duel/corridor.hpp"
#include "duel/dueling.hpp"
#include "duel/replay.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace duel;

namespace {

DenseNet corridor_net(bool dueling, std::size_t n_actions) {
    return dueling ? build_dueling(kCorridorCells, n_actions, 1) : build_single_stream(kCorridorCells, n_actions, 1);
}

void BM_Forward(benchmark::State& state) {
    const DenseNet net = corridor_net(state.range(0) != 0, static_cast<std::size_t>(state.range(1)));
    const CorridorSpec spec = build_corridor(static_cast<std::size_t>(state.range(1)));
    const Vector x = encode_state(spec, 17);
    for (auto _ : state) benchmark::DoNotOptimize(predict(net, x));
}
BENCHMARK(BM_Forward)->ArgsProduct({{0, 1}, {5, 20}})->ArgNames({"duel", "actions"});

void BM_ForwardBackward(benchmark::State& state) {
    const DenseNet net = corridor_net(state.range(0) != 0, static_cast<std::size_t>(state.range(1)));
    const CorridorSpec spec = build_corridor(static_cast<std::size_t>(state.range(1)));
    const Vector x = encode_state(spec, 17);
    const JunctionGrad junction = training_junction(net);
    for (auto _ : state) benchmark::DoNotOptimize(td_gradient(net, x, 2, 0.5, junction));
}
BENCHMARK(BM_ForwardBackward)->ArgsProduct({{0, 1}, {5, 20}})->ArgNames({"duel", "actions"});

void BM_PolicyEvalUpdates(benchmark::State& state) {
    const CorridorSpec spec = build_corridor(5);
    const ExactQ qs = solve_q_star(spec, 1e-10);
    const PolicyTable pi = epsilon_greedy_policy(qs, 0.001);
    const ExactQ qp = solve_q_pi(spec, pi, 1e-10);
    TrainConfig cfg;
    cfg.updates = 1000;
    cfg.learning_rate = 5e-3;
    for (auto _ : state) {
        DenseNet net = corridor_net(state.range(0) != 0, 5);
        benchmark::DoNotOptimize(train_policy_eval(spec, pi, net, cfg, qp));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.updates));
}
BENCHMARK(BM_PolicyEvalUpdates)->Arg(0)->Arg(1)->ArgName("duel")->Unit(benchmark::kMillisecond);

void BM_PrioritizedSample(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    PrioritizedBuffer buf(n, 0.7);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        buf.push({i, 0, 0.0, kTerminalState, true});
        buf.set_priority(i, u(rng));
    }
    for (auto _ : state) benchmark::DoNotOptimize(buf.sample(32, 0.5, rng));
}
BENCHMARK(BM_PrioritizedSample)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_UniformSample(benchmark::State& state) {
    UniformBuffer buf(10000);
    for (std::size_t i = 0; i < 10000; ++i) buf.push({i, 0, 0.0, kTerminalState, true});
    std::mt19937_64 rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(buf.sample(32, rng));
}
BENCHMARK(BM_UniformSample);

void BM_SolveQStar(benchmark::State& state) {
    const CorridorSpec spec = build_corridor(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(solve_q_star(spec, 1e-10));
}
BENCHMARK(BM_SolveQStar)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SolveQPi(benchmark::State& state) {
    const CorridorSpec spec = build_corridor(static_cast<std::size_t>(state.range(0)));
    const PolicyTable pi = epsilon_greedy_policy(solve_q_star(spec, 1e-10), 0.001);
    for (auto _ : state) benchmark::DoNotOptimize(solve_q_pi(spec, pi, 1e-10));
}
BENCHMARK(BM_SolveQPi)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
