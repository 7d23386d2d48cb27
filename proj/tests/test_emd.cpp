#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "iwvi/emd.hpp"
#include "iwvi/errors.hpp"

using namespace iwvi;

namespace {

// f(pi) = <a, pi> + H(pi); maximizer is softmax(a).
Objective entropy_objective(const Vec& a) {
    return [a](const SimplexVector& pi) {
        double value = 0.0;
        Vec grad(pi.size());
        for (Eigen::Index k = 0; k < pi.size(); ++k) {
            const double p = std::max(pi[k], 1e-300);
            value += a[k] * p - p * std::log(p);
            grad[k] = a[k] - std::log(p) - 1.0;
        }
        return std::make_pair(value, grad);
    };
}

}  // namespace

TEST_CASE("symmetric entropy objective keeps the barycenter") {
    Vec a = Vec::Zero(2);
    const EmdResult res = maximize(entropy_objective(a), uniform_simplex(2), {});
    CHECK(std::abs(res.pi_star[0] - 0.5) <= 1e-6);
    CHECK(std::abs(res.pi_star[1] - 0.5) <= 1e-6);
}

TEST_CASE("entropy objective reaches softmax(a) for a = (1,0)") {
    Vec a(2);
    a << 1.0, 0.0;
    EmdConfig cfg;
    cfg.max_iters = 500;
    const EmdResult res = maximize(entropy_objective(a), uniform_simplex(2), cfg);
    const Vec target = softmax(a);
    CHECK((res.pi_star - target).cwiseAbs().sum() <= 1e-3);
    CHECK(res.pi_star[0] == doctest::Approx(0.7311).epsilon(1e-3));
    CHECK(res.pi_star[1] == doctest::Approx(0.2689).epsilon(1e-3));
    CHECK(res.iterations <= 500);
}

TEST_CASE("50 random entropy objectives reach the closed form") {
    Rng rng(55);
    EmdConfig cfg;
    cfg.max_iters = 500;
    cfg.epsilon = 1e-300;  // never stop early in practice
    for (int rep = 0; rep < 50; ++rep) {
        const int v = 2 + static_cast<int>(rng.below(9));
        Vec a(v);
        for (int k = 0; k < v; ++k) a[k] = rng.normal();
        const EmdResult res = maximize(entropy_objective(a), uniform_simplex(v), cfg);
        CHECK((res.pi_star - softmax(a)).cwiseAbs().sum() <= 1e-3);
    }
}

TEST_CASE("linear objective approaches the vertex") {
    Vec a(2);
    a << 1.0, 0.0;
    Objective linear = [a](const SimplexVector& pi) {
        return std::make_pair(a.dot(pi), Vec(a));
    };
    EmdConfig cfg;
    cfg.max_iters = 200;
    cfg.gamma0 = 1.0;
    cfg.epsilon = 1e-300;
    const EmdResult res = maximize(linear, uniform_simplex(2), cfg);
    CHECK(res.pi_star[0] >= 0.99);
}

TEST_CASE("every iterate stays on the simplex") {
    Rng rng(56);
    Vec a(5);
    for (int k = 0; k < 5; ++k) a[k] = rng.normal() * 2.0;
    int calls = 0;
    Objective checked = [&](const SimplexVector& pi) {
        ++calls;
        CHECK(std::abs(pi.sum() - 1.0) <= 1e-12);
        CHECK(pi.minCoeff() >= 0.0);
        return entropy_objective(a)(pi);
    };
    EmdConfig cfg;
    cfg.epsilon = 1e-300;
    cfg.gamma0 = 0.05;  // small steps so the path visits many distinct iterates
    maximize(checked, uniform_simplex(5), cfg);
    CHECK(calls >= 10);
}

TEST_CASE("update is invariant to constant gradient shifts") {
    Rng rng(57);
    Vec a(4);
    for (int k = 0; k < 4; ++k) a[k] = rng.normal();
    Objective base = entropy_objective(a);
    Objective shifted = [&](const SimplexVector& pi) {
        auto [v, g] = base(pi);
        return std::make_pair(v, Vec(g.array() + 123.0));
    };
    EmdConfig cfg;
    cfg.max_iters = 60;
    cfg.epsilon = 1e-300;
    const EmdResult r1 = maximize(base, uniform_simplex(4), cfg);
    const EmdResult r2 = maximize(shifted, uniform_simplex(4), cfg);
    CHECK((r1.pi_star - r2.pi_star).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("final value does not fall below the start on concave objectives") {
    Rng rng(58);
    for (int rep = 0; rep < 20; ++rep) {
        const int v = 2 + static_cast<int>(rng.below(6));
        Vec a(v);
        for (int k = 0; k < v; ++k) a[k] = rng.normal() * 2.0;
        Objective f = entropy_objective(a);
        const SimplexVector pi0 = uniform_simplex(v);
        const double f0 = f(pi0).first;
        const EmdResult res = maximize(f, pi0, {});
        CHECK(res.value_star >= f0 - 1e-9);
    }
}

TEST_CASE("early stopping honors epsilon") {
    Vec a = Vec::Zero(3);
    EmdConfig cfg;
    cfg.epsilon = 1e-3;
    const EmdResult res = maximize(entropy_objective(a), uniform_simplex(3), cfg);
    CHECK(res.iterations < cfg.max_iters);
}

TEST_CASE("non-finite objective raises OptimizerError with the last iterate") {
    int calls = 0;
    Objective poison = [&](const SimplexVector& pi) {
        ++calls;
        if (calls >= 3)
            return std::make_pair(std::nan(""), Vec(Vec::Zero(pi.size())));
        // distinct finite values so epsilon stopping cannot fire first
        return std::make_pair(0.5 * calls, Vec(Vec::Ones(pi.size())));
    };
    try {
        maximize(poison, uniform_simplex(2), {});
        CHECK(false);
    } catch (const OptimizerError& e) {
        CHECK(e.last_iterate.size() == 2);
        CHECK(std::abs(e.last_iterate[0] + e.last_iterate[1] - 1.0) <= 1e-12);
        CHECK(e.iterations == 2);
    }
}

TEST_CASE("invalid starting point and config are rejected") {
    Vec bad(2);
    bad << 0.7, 0.6;
    CHECK_THROWS_AS(maximize(entropy_objective(Vec::Zero(2)), bad, {}), DimensionError);
    EmdConfig cfg;
    cfg.max_iters = 0;
    CHECK_THROWS_AS(maximize(entropy_objective(Vec::Zero(2)), uniform_simplex(2), cfg),
                    ConfigError);
}
