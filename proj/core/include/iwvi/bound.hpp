#pragma once

#include <vector>

#include "iwvi/numerics.hpp"
#include "iwvi/sampler.hpp"

namespace iwvi {

// Monte Carlo estimate of the s-sample importance-weighted lower bound.
struct BoundEstimate {
    double value = 0.0;  // logsumexp(log_weights) - log(sample_count)
    int sample_count = 0;
    std::vector<double> log_weights;
};

// <psi, z> - log_density(pi, z).
double log_importance_weight(const Vec& psi, const SimplexVector& pi, const RelaxedSample& z,
                             DensityMode mode = DensityMode::Paper, double tau = 1.0);

// Reparameterizes each noise at (pi, tau) and averages importance weights in
// log space. Pure function of its arguments.
BoundEstimate estimate(const Vec& psi, const SimplexVector& pi,
                       const std::vector<GumbelNoise>& noises, double tau,
                       DensityMode mode = DensityMode::Paper);

// Testing mode: exact one-hot categorical sampling instead of the relaxation;
// log w = psi_k - log pi_k. Unbiased in the weights, upper-bounded by
// logsumexp(psi) in expectation of the log.
BoundEstimate estimate_categorical_exact(const Vec& psi, const SimplexVector& pi, Rng& rng,
                                         int s);

// Pathwise gradient of estimate(...) with respect to pi, holding the noises
// fixed, taken in the ambient coordinates of pi (no simplex projection).
Vec grad_pi(const Vec& psi, const SimplexVector& pi, const std::vector<GumbelNoise>& noises,
            double tau, DensityMode mode = DensityMode::Paper);

// One row per sample; row j equals the j-th sequential sample_gumbel draw.
Mat sample_gumbel_matrix(Rng& rng, int s, int v);

// Fused value+gradient over a noise matrix; the inner loop of per-node
// inference. Agrees with estimate/grad_pi up to floating-point reassociation.
std::pair<double, Vec> estimate_and_grad(const Vec& psi, const SimplexVector& pi,
                                         const Mat& noises, double tau,
                                         DensityMode mode = DensityMode::Paper);

}  // namespace iwvi
