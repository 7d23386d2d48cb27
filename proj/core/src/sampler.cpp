#include "iwvi/sampler.hpp"

#include <atomic>
#include <cmath>

#include "iwvi/errors.hpp"

namespace iwvi {

namespace {
constexpr double kPiFloor = 1e-12;
std::atomic<double> g_density_constant_scale{1.0};
}  // namespace

void check_simplex(const Vec& v, double slack) {
    if (v.size() < 1) throw DimensionError("empty simplex vector");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0)) throw DimensionError("simplex entry negative or NaN");
        sum += v[i];
    }
    if (std::abs(sum - 1.0) > slack) throw DimensionError("simplex entries do not sum to 1");
}

SimplexVector uniform_simplex(int v) {
    if (v < 1) throw DimensionError("simplex dimension must be positive");
    return Vec::Constant(v, 1.0 / static_cast<double>(v));
}

double TemperatureSchedule::anneal(int t) {
    if (t < 1) throw ConfigError("anneal step index must be >= 1");
    tau = std::max(tau * std::exp(-beta * static_cast<double>(t)), tau_min);
    return tau;
}

double gumbel_from_uniform(double u) { return -std::log(-std::log(u)); }

GumbelNoise sample_gumbel(Rng& rng, int v) {
    if (v < 1) throw DimensionError("noise dimension must be positive");
    GumbelNoise sigma(v);
    for (int i = 0; i < v; ++i) sigma[i] = gumbel_from_uniform(rng.uniform01());
    return sigma;
}

RelaxedSample reparameterize(const SimplexVector& pi, const GumbelNoise& sigma, double tau) {
    if (pi.size() != sigma.size()) throw DimensionError("pi and noise sizes differ");
    if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
    Vec logits(pi.size());
    for (Eigen::Index i = 0; i < pi.size(); ++i)
        logits[i] = (std::log(std::max(pi[i], kPiFloor)) + sigma[i]) / tau;
    return softmax(logits);
}

double log_density(const SimplexVector& pi, const RelaxedSample& z, DensityMode mode,
                   double tau) {
    if (pi.size() != z.size()) throw DimensionError("pi and z sizes differ");
    const auto v = pi.size();
    if (v == 1) return 0.0;  // degenerate simplex: point mass

    if (mode == DensityMode::Paper) {
        const double scale = g_density_constant_scale.load(std::memory_order_relaxed);
        return pi.dot(z) - scale * logsumexp(pi);
    }

    // Tempered-softmax density on the simplex.
    if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
    double sum_terms = 0.0;
    KahanSum denom;
    for (Eigen::Index k = 0; k < v; ++k) {
        const double pk = std::max(pi[k], kPiFloor);
        const double zk = std::max(z[k], kPiFloor);
        sum_terms += std::log(pk) - (tau + 1.0) * std::log(zk);
        denom.add(pk * std::pow(zk, -tau));
    }
    return std::lgamma(static_cast<double>(v)) +
           (static_cast<double>(v) - 1.0) * std::log(tau) + sum_terms -
           static_cast<double>(v) * std::log(denom.value());
}

void set_log_density_constant_scale(double scale) {
    g_density_constant_scale.store(scale, std::memory_order_relaxed);
}

double log_density_constant_scale() {
    return g_density_constant_scale.load(std::memory_order_relaxed);
}

}  // namespace iwvi
