#include <benchmark/benchmark.h>

#include "iwvi/bound.hpp"
#include "iwvi/numerics.hpp"
#include "iwvi/sampler.hpp"

namespace {

using namespace iwvi;

Vec random_psi(Rng& rng, int v) {
    Vec psi(v);
    for (int k = 0; k < v; ++k) psi[k] = 2.0 * rng.normal();
    return psi;
}

void BM_estimate_list(benchmark::State& state) {
    const int v = static_cast<int>(state.range(0));
    const int s = static_cast<int>(state.range(1));
    Rng rng(1);
    const Vec psi = random_psi(rng, v);
    const SimplexVector pi = softmax(random_psi(rng, v));
    std::vector<GumbelNoise> noises;
    for (int j = 0; j < s; ++j) noises.push_back(sample_gumbel(rng, v));
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate(psi, pi, noises, 1.0).value);
    }
}
BENCHMARK(BM_estimate_list)->Args({5, 50})->Args({10, 50})->Args({10, 500})->Args({50, 50});

void BM_estimate_and_grad(benchmark::State& state) {
    const int v = static_cast<int>(state.range(0));
    const int s = static_cast<int>(state.range(1));
    Rng rng(2);
    const Vec psi = random_psi(rng, v);
    const SimplexVector pi = softmax(random_psi(rng, v));
    Rng nrng(3);
    const Mat noises = sample_gumbel_matrix(nrng, s, v);
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_and_grad(psi, pi, noises, 1.0).first);
    }
}
BENCHMARK(BM_estimate_and_grad)
    ->Args({5, 50})
    ->Args({10, 50})
    ->Args({10, 500})
    ->Args({50, 50});

void BM_grad_pi_exact_density(benchmark::State& state) {
    const int v = static_cast<int>(state.range(0));
    Rng rng(4);
    const Vec psi = random_psi(rng, v);
    const SimplexVector pi = softmax(random_psi(rng, v));
    std::vector<GumbelNoise> noises;
    for (int j = 0; j < 50; ++j) noises.push_back(sample_gumbel(rng, v));
    for (auto _ : state) {
        benchmark::DoNotOptimize(grad_pi(psi, pi, noises, 1.0, DensityMode::Exact));
    }
}
BENCHMARK(BM_grad_pi_exact_density)->Arg(5)->Arg(10)->Arg(50);

void BM_sample_gumbel_matrix(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    Rng rng(5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_gumbel_matrix(rng, s, 10).sum());
    }
}
BENCHMARK(BM_sample_gumbel_matrix)->Arg(50)->Arg(500);

}  // namespace

BENCHMARK_MAIN();
