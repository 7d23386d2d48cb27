#pragma once

#include <vector>

#include "iwvi/numerics.hpp"

namespace iwvi {

// Probability vector on the simplex. Entries >= 0, sum 1 within 1e-12.
using SimplexVector = Vec;
// One Gumbel draw per class.
using GumbelNoise = Vec;
// Relaxed one-hot sample, itself on the simplex.
using RelaxedSample = Vec;

// Throws DimensionError unless v is on the simplex within the stated slack.
void check_simplex(const Vec& v, double slack = 1e-12);

SimplexVector uniform_simplex(int v);

// Multiplicative annealing schedule with a floor.
struct TemperatureSchedule {
    double tau0 = 1.0;
    double tau_min = 0.3;
    double beta = 1e-4;
    double tau = 1.0;

    void reset() { tau = tau0; }
    // tau <- max(tau * exp(-beta * t), tau_min); compounds across calls.
    double anneal(int t);
};

// sigma_k = -log(-log u_k), u_k uniform on (0,1) clamped away from {0,1}.
GumbelNoise sample_gumbel(Rng& rng, int v);
// Deterministic variant for injected-uniform tests.
double gumbel_from_uniform(double u);

// z_k proportional to exp((log pi_k + sigma_k) / tau), max-subtracted.
// pi is floored at 1e-12 before the log. Throws on tau <= 0.
RelaxedSample reparameterize(const SimplexVector& pi, const GumbelNoise& sigma, double tau);

enum class DensityMode { Paper, Exact };

// Paper mode: <pi, z> - max(pi) - log sum_k exp(pi_k - max(pi)); the relaxed
// density surrogate that treats pi as a logit. Exact mode: the density of the
// tempered-softmax sample on the simplex, which depends on tau.
double log_density(const SimplexVector& pi, const RelaxedSample& z,
                   DensityMode mode = DensityMode::Paper, double tau = 1.0);

// Audit hook: scales the z-independent constant term of the paper-mode
// density. 1.0 is the correct value; anything else deliberately corrupts the
// density so downstream consistency checks must fail.
void set_log_density_constant_scale(double scale);
double log_density_constant_scale();

}  // namespace iwvi
