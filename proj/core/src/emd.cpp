#include "iwvi/emd.hpp"

#include <cmath>
#include <limits>

#include "iwvi/errors.hpp"

namespace iwvi {

namespace {
constexpr double kFloor = 1e-12;

std::vector<double> to_std(const Vec& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}
}  // namespace

EmdResult maximize(const Objective& objective, const SimplexVector& pi0, const EmdConfig& cfg) {
    if (cfg.max_iters < 1) throw ConfigError("emd max_iters must be >= 1");
    if (!(cfg.gamma0 > 0.0)) throw ConfigError("emd gamma0 must be positive");
    if (!(cfg.epsilon > 0.0)) throw ConfigError("emd epsilon must be positive");
    check_simplex(pi0, 1e-9);

    SimplexVector pi = pi0;
    double prev = std::numeric_limits<double>::infinity();

    for (int i = 1; i <= cfg.max_iters; ++i) {
        auto [value, grad] = objective(pi);
        if (!std::isfinite(value) || !all_finite(grad))
            throw OptimizerError("objective returned a non-finite value", to_std(pi), prev,
                                 i - 1);
        if (std::abs(value - prev) < cfg.epsilon) return {pi, value, i};
        prev = value;

        const double gamma = cfg.gamma0 / std::sqrt(static_cast<double>(i));
        Vec g = gamma * grad;
        const double gmax = g.maxCoeff();
        KahanSum norm;
        Vec r(pi.size());
        for (Eigen::Index k = 0; k < pi.size(); ++k) {
            r[k] = pi[k] * std::exp(g[k] - gmax);
            norm.add(r[k]);
        }
        pi = r / norm.value();

        KahanSum renorm;
        for (Eigen::Index k = 0; k < pi.size(); ++k) {
            pi[k] = std::max(pi[k], kFloor);
            renorm.add(pi[k]);
        }
        pi /= renorm.value();
    }

    auto [value, grad] = objective(pi);
    if (!std::isfinite(value))
        throw OptimizerError("objective returned a non-finite value", to_std(pi), prev,
                             cfg.max_iters);
    return {pi, value, cfg.max_iters};
}

}  // namespace iwvi
