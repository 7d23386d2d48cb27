#include "iwvi/inference.hpp"

#include <cmath>

#include "iwvi/errors.hpp"

namespace iwvi {

namespace {

SimplexVector initial_pi(int v, PiInit init, Rng& rng) {
    if (init == PiInit::Uniform) return uniform_simplex(v);
    // Dirichlet(1): exponential spacings, renormalized.
    Vec pi(v);
    KahanSum total;
    for (int k = 0; k < v; ++k) {
        pi[k] = -std::log(rng.uniform01());
        total.add(pi[k]);
    }
    return pi / total.value();
}

}  // namespace

NodeInference infer_node(const Vec& psi, const InferenceConfig& cfg, Rng& rng) {
    if (!all_finite(psi)) throw NumericalError("psi must be finite");
    if (cfg.samples_infer < 1) throw ConfigError("samples_infer must be >= 1");
    const int v = static_cast<int>(psi.size());

    SimplexVector pi0 = initial_pi(v, cfg.pi_init, rng);
    Mat noises = sample_gumbel_matrix(rng, cfg.samples_infer, v);

    Objective objective;
    if (cfg.noise == NoiseMode::Frozen) {
        objective = [&](const SimplexVector& pi) {
            return estimate_and_grad(psi, pi, noises, cfg.tau, cfg.density);
        };
    } else {
        objective = [&](const SimplexVector& pi) {
            noises = sample_gumbel_matrix(rng, cfg.samples_infer, v);
            return estimate_and_grad(psi, pi, noises, cfg.tau, cfg.density);
        };
    }

    const EmdResult res = maximize(objective, pi0, cfg.emd);
    return {res.pi_star, res.value_star, res.iterations};
}

Vec surrogate_logit(const Vec& psi, double bound) { return psi.array() - bound; }

Vec log_posterior(const Vec& phi) {
    if (!all_finite(phi)) throw NumericalError("phi must be finite");
    return phi.array() - logsumexp(phi);
}

NodePosterior infer_posterior(const Vec& psi, const InferenceConfig& cfg, Rng& rng) {
    const NodeInference ni = infer_node(psi, cfg, rng);
    NodePosterior out;
    out.pi_star = ni.pi_star;
    out.bound = ni.bound;
    out.phi = surrogate_logit(psi, ni.bound);
    out.log_post = log_posterior(out.phi);
    return out;
}

int argmax_lowest(const Vec& x) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(x.size()); ++k)
        if (x[k] > x[best]) best = k;
    return best;
}

int readout(const NodePosterior& node, ReadoutMode mode) {
    return mode == ReadoutMode::Posterior ? argmax_lowest(node.log_post)
                                          : argmax_lowest(node.pi_star);
}

}  // namespace iwvi
