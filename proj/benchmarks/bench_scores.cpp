#include <benchmark/benchmark.h>

#include "iwvi/graph.hpp"
#include "iwvi/learning.hpp"
#include "iwvi/nn.hpp"
#include "iwvi/numerics.hpp"
#include "iwvi/oracle.hpp"
#include "iwvi/scores.hpp"

namespace {

using namespace iwvi;

TaskConfig bench_task(int d, int v_o, int v_p) {
    TaskConfig t;
    t.d = d;
    t.v_o = v_o;
    t.v_p = v_p;
    t.m_min = 3;
    t.m_max = 4;
    t.n_min = 2;
    t.n_max = 3;
    t.seed = 9;
    return t;
}

void BM_compute_scores(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const int hidden = static_cast<int>(state.range(1));
    const TaskConfig task = bench_task(d, 5, 4);
    const SyntheticInstance inst = synth_dataset(task, 1)[0];
    Rng rng(3);
    const ThetaParams theta = make_theta(d, 5, 4, hidden, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_scores(theta, inst).object_scores[0][0]);
    }
}
BENCHMARK(BM_compute_scores)->Args({8, 64})->Args({8, 128})->Args({32, 64});

void BM_grad_theta(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const TaskConfig task = bench_task(d, 5, 4);
    const SyntheticInstance inst = synth_dataset(task, 1)[0];
    Rng rng(4);
    const ThetaParams theta = make_theta(d, 5, 4, 64, rng);
    for (auto _ : state) {
        double loss = 0.0;
        const ThetaGrads g = grad_theta(inst, theta, &loss);
        benchmark::DoNotOptimize(g.h_o.squared_norm() + loss);
    }
}
BENCHMARK(BM_grad_theta)->Arg(8)->Arg(32);

void BM_marginal_elimination(benchmark::State& state) {
    const int v = static_cast<int>(state.range(0));
    const SceneGraph g = build_graph(4, 3, {{0, 1}, {1, 2}, {2, 3}}, {{0, 3}});
    Rng rng(5);
    const PotentialTables tables = random_tables(g, v, v, rng);
    const NodeRef node{NodeKind::Object, 1};
    for (auto _ : state) {
        benchmark::DoNotOptimize(marginal_score_explicit(tables, g, node)[0]);
    }
}
BENCHMARK(BM_marginal_elimination)->Arg(3)->Arg(4);

void BM_exact_enumeration(benchmark::State& state) {
    const int v = static_cast<int>(state.range(0));
    const SceneGraph g = build_graph(4, 3, {{0, 1}, {1, 2}, {2, 3}}, {{0, 3}});
    Rng rng(6);
    const PotentialTables tables = random_tables(g, v, v, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_joint(tables, g).log_partition);
    }
}
BENCHMARK(BM_exact_enumeration)->Arg(3)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
