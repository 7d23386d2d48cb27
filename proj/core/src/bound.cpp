#include "iwvi/bound.hpp"

#include <cmath>

#include "iwvi/errors.hpp"

namespace iwvi {

namespace {
constexpr double kPiFloor = 1e-12;
}

double log_importance_weight(const Vec& psi, const SimplexVector& pi, const RelaxedSample& z,
                             DensityMode mode, double tau) {
    if (psi.size() != z.size()) throw DimensionError("psi and z sizes differ");
    return psi.dot(z) - log_density(pi, z, mode, tau);
}

BoundEstimate estimate(const Vec& psi, const SimplexVector& pi,
                       const std::vector<GumbelNoise>& noises, double tau, DensityMode mode) {
    if (noises.empty()) throw DimensionError("estimate needs at least one noise draw");
    BoundEstimate est;
    est.sample_count = static_cast<int>(noises.size());
    est.log_weights.reserve(noises.size());
    for (const auto& sigma : noises) {
        const RelaxedSample z = reparameterize(pi, sigma, tau);
        est.log_weights.push_back(log_importance_weight(psi, pi, z, mode, tau));
    }
    est.value = logsumexp(est.log_weights) - std::log(static_cast<double>(est.sample_count));
    return est;
}

BoundEstimate estimate_categorical_exact(const Vec& psi, const SimplexVector& pi, Rng& rng,
                                         int s) {
    if (psi.size() != pi.size()) throw DimensionError("psi and pi sizes differ");
    if (s < 1) throw DimensionError("sample count must be >= 1");
    BoundEstimate est;
    est.sample_count = s;
    est.log_weights.reserve(static_cast<size_t>(s));
    for (int j = 0; j < s; ++j) {
        const double u = rng.uniform01();
        double acc = 0.0;
        Eigen::Index k = pi.size() - 1;
        for (Eigen::Index i = 0; i < pi.size(); ++i) {
            acc += pi[i];
            if (u <= acc) {
                k = i;
                break;
            }
        }
        est.log_weights.push_back(psi[k] - std::log(std::max(pi[k], kPiFloor)));
    }
    est.value = logsumexp(est.log_weights) - std::log(static_cast<double>(s));
    return est;
}

Mat sample_gumbel_matrix(Rng& rng, int s, int v) {
    if (s < 1 || v < 1) throw DimensionError("noise matrix dimensions must be positive");
    Mat noises(s, v);
    for (int j = 0; j < s; ++j)
        for (int k = 0; k < v; ++k) noises(j, k) = gumbel_from_uniform(rng.uniform01());
    return noises;
}

std::pair<double, Vec> estimate_and_grad(const Vec& psi, const SimplexVector& pi,
                                         const Mat& noises, double tau, DensityMode mode) {
    const auto v = pi.size();
    const auto s = noises.rows();
    if (noises.cols() != v || psi.size() != v) throw DimensionError("shape mismatch");
    if (s < 1) throw DimensionError("estimate needs at least one noise draw");
    if (!(tau > 0.0)) throw ConfigError("temperature must be positive");
    if (v == 1) return {psi[0], Vec::Zero(1)};

    if (mode == DensityMode::Exact) {
        std::vector<GumbelNoise> list;
        list.reserve(static_cast<size_t>(s));
        for (Eigen::Index j = 0; j < s; ++j) list.push_back(noises.row(j).transpose());
        return {estimate(psi, pi, list, tau, mode).value, grad_pi(psi, pi, list, tau, mode)};
    }

    Vec logpi(v), pihat(v);
    for (Eigen::Index k = 0; k < v; ++k) {
        pihat[k] = std::max(pi[k], kPiFloor);
        logpi[k] = std::log(pihat[k]);
    }

    Mat logits = (noises.rowwise() + logpi.transpose()) / tau;
    const Vec row_max = logits.rowwise().maxCoeff();
    Mat Z = (logits.colwise() - row_max).array().exp();
    const Vec row_sum = Z.rowwise().sum();
    Z.array().colwise() /= row_sum.array();

    const double lse_pi = logsumexp(pi);
    const double scale = log_density_constant_scale();
    const Vec b = psi - pi;
    const Vec bz = Z * b;                             // <psi - pi, z_j>
    const Vec logw = bz.array() + scale * lse_pi;     // log importance weights
    const double lse_w = logsumexp(logw);
    const Vec omega = (logw.array() - lse_w).exp();   // softmax over samples

    const Vec u = Z.transpose() * omega;
    const Vec q = Z.transpose() * (omega.array() * bz.array()).matrix();
    const Vec sm_pi = softmax(pi);

    Vec grad(v);
    for (Eigen::Index k = 0; k < v; ++k)
        grad[k] = (u[k] * b[k] - q[k]) / (tau * pihat[k]) - u[k] + sm_pi[k];

    const double value = lse_w - std::log(static_cast<double>(s));
    return {value, std::move(grad)};
}

Vec grad_pi(const Vec& psi, const SimplexVector& pi, const std::vector<GumbelNoise>& noises,
            double tau, DensityMode mode) {
    if (noises.empty()) throw DimensionError("grad_pi needs at least one noise draw");
    const auto v = pi.size();
    if (v == 1) return Vec::Zero(1);

    const int s = static_cast<int>(noises.size());
    std::vector<RelaxedSample> zs;
    std::vector<double> logw(static_cast<size_t>(s));
    zs.reserve(noises.size());
    for (int j = 0; j < s; ++j) {
        zs.push_back(reparameterize(pi, noises[static_cast<size_t>(j)], tau));
        logw[static_cast<size_t>(j)] = log_importance_weight(psi, pi, zs.back(), mode, tau);
    }
    const double lse = logsumexp(logw);

    const Vec sm_pi = (mode == DensityMode::Paper) ? softmax(pi) : Vec();

    Vec grad = Vec::Zero(v);
    for (int j = 0; j < s; ++j) {
        const RelaxedSample& z = zs[static_cast<size_t>(j)];
        const double omega = std::exp(logw[static_cast<size_t>(j)] - lse);

        // d log w / d pi splits into the pathwise part through z and the
        // direct part through the density's explicit pi dependence.
        Vec dq_dz(v), dq_dpi(v);
        if (mode == DensityMode::Paper) {
            dq_dz = pi;
            dq_dpi = z - sm_pi;
        } else {
            KahanSum denom_acc;
            Vec zpow(v);
            for (Eigen::Index k = 0; k < v; ++k) {
                zpow[k] = std::pow(std::max(z[k], kPiFloor), -tau);
                denom_acc.add(std::max(pi[k], kPiFloor) * zpow[k]);
            }
            const double denom = denom_acc.value();
            for (Eigen::Index k = 0; k < v; ++k) {
                const double pk = std::max(pi[k], kPiFloor);
                const double zk = std::max(z[k], kPiFloor);
                dq_dz[k] = -(tau + 1.0) / zk +
                           static_cast<double>(v) * tau * pk * zpow[k] / (zk * denom);
                dq_dpi[k] = 1.0 / pk - static_cast<double>(v) * zpow[k] / denom;
            }
        }

        const Vec a = psi - dq_dz;
        const double az = a.dot(z);
        for (Eigen::Index k = 0; k < v; ++k) {
            const double pk = std::max(pi[k], kPiFloor);
            const double pathwise = z[k] * (a[k] - az) / (tau * pk);
            grad[k] += omega * (pathwise - dq_dpi[k]);
        }
    }
    return grad;
}

}  // namespace iwvi
