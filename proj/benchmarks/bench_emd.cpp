#include <benchmark/benchmark.h>

#include <cmath>

#include "iwvi/bound.hpp"
#include "iwvi/emd.hpp"
#include "iwvi/inference.hpp"
#include "iwvi/numerics.hpp"

namespace {

using namespace iwvi;

Vec random_psi(Rng& rng, int v) {
    Vec psi(v);
    for (int k = 0; k < v; ++k) psi[k] = 2.0 * rng.normal();
    return psi;
}

void BM_emd_entropy_objective(benchmark::State& state) {
    const int v = static_cast<int>(state.range(0));
    Rng rng(1);
    const Vec a = random_psi(rng, v);
    const Objective f = [&a](const SimplexVector& p) {
        double val = 0.0;
        Vec g(p.size());
        for (int k = 0; k < p.size(); ++k) {
            const double pk = std::max(p[k], 1e-300);
            val += a[k] * pk - pk * std::log(pk);
            g[k] = a[k] - std::log(pk) - 1.0;
        }
        return std::make_pair(val, g);
    };
    EmdConfig cfg;
    cfg.max_iters = 300;
    cfg.epsilon = 1e-10;
    for (auto _ : state) {
        benchmark::DoNotOptimize(maximize(f, uniform_simplex(v), cfg).value_star);
    }
}
BENCHMARK(BM_emd_entropy_objective)->Arg(5)->Arg(10)->Arg(50);

void BM_infer_node(benchmark::State& state) {
    const int v = static_cast<int>(state.range(0));
    const int s = static_cast<int>(state.range(1));
    Rng rng(2);
    const Vec psi = random_psi(rng, v);
    InferenceConfig cfg;
    cfg.samples_infer = s;
    cfg.emd.max_iters = 100;
    for (auto _ : state) {
        Rng node_rng(7);
        benchmark::DoNotOptimize(infer_node(psi, cfg, node_rng).bound);
    }
}
BENCHMARK(BM_infer_node)->Args({5, 50})->Args({10, 50})->Args({10, 500});

}  // namespace

BENCHMARK_MAIN();
