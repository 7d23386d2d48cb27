#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace iwvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// log(sum_i exp(x_i)) with max-subtraction. Empty input -> -inf.
double logsumexp(const Vec& x);
double logsumexp(std::span<const double> x);

// exp(x - logsumexp(x)); sums to 1.
Vec softmax(const Vec& x);

// Compensated (Kahan) accumulator; keeps vector sums stable under permutation.
class KahanSum {
public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

// Elementwise Kahan accumulation of vectors.
class KahanVecSum {
public:
    explicit KahanVecSum(Eigen::Index n) : s_(Vec::Zero(n)), c_(Vec::Zero(n)) {}
    void add(const Vec& x);
    const Vec& value() const { return s_; }

private:
    Vec s_;
    Vec c_;
};

// Deterministic RNG wrapper. Uniform doubles are built from the raw 64-bit
// output so streams are reproducible independent of the standard library's
// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0, 1): clamped away from both endpoints.
    double uniform01();

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller on uniform01 draws (two draws per call).
    double normal();

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Mixes identifiers into a stream seed (splitmix64 steps). Used to derive
// independent per-node / per-iteration RNG streams from one base seed, so
// results do not depend on worker scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                          std::uint64_t b = 0, std::uint64_t c = 0);

// FNV-1a 64-bit, used to fingerprint datasets in emitted tables.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);

bool all_finite(const Vec& x);

// Runs fn(i) over [0, count) on up to `workers` threads. Callers must write
// outputs to per-index slots so results do not depend on scheduling.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

}  // namespace iwvi
