#include "iwvi/numerics.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace iwvi {

double logsumexp(const Vec& x) {
    return logsumexp(std::span<const double>(x.data(), static_cast<size_t>(x.size())));
}

double logsumexp(std::span<const double> x) {
    if (x.empty()) return -std::numeric_limits<double>::infinity();
    double m = x[0];
    for (double v : x) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    KahanSum s;
    for (double v : x) s.add(std::exp(v - m));
    return m + std::log(s.value());
}

Vec softmax(const Vec& x) {
    const double m = x.maxCoeff();
    Vec e = (x.array() - m).exp();
    return e / e.sum();
}

void KahanVecSum::add(const Vec& x) {
    for (Eigen::Index i = 0; i < s_.size(); ++i) {
        const double y = x[i] - c_[i];
        const double t = s_[i] + y;
        c_[i] = (t - s_[i]) - y;
        s_[i] = t;
    }
}

double Rng::uniform01() {
    // 53-bit mantissa in [0,1), then clamp to the open interval.
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double eps = std::numeric_limits<double>::epsilon();
    return std::min(std::max(u, eps), 1.0 - eps);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling over the top of the range keeps the draw unbiased.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

double Rng::normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
    std::uint64_t s = splitmix64(base);
    s = splitmix64(s ^ (a + 0x9e3779b97f4a7c15ULL));
    s = splitmix64(s ^ (b + 0x7f4a7c159e3779b9ULL));
    s = splitmix64(s ^ (c + 0x3779b97f4a7c159eULL));
    return s;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

bool all_finite(const Vec& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) return false;
    }
    return true;
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto body = [&]() {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min(workers, count);
    pool.reserve(static_cast<size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
}

}  // namespace iwvi
