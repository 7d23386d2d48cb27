#pragma once

#include <functional>

#include "iwvi/numerics.hpp"
#include "iwvi/sampler.hpp"

namespace iwvi {

struct EmdConfig {
    int max_iters = 300;
    double gamma0 = 1.0;
    double epsilon = 1e-5;
};

struct EmdResult {
    SimplexVector pi_star;
    double value_star = 0.0;
    int iterations = 0;
};

// Evaluates the objective and its ambient-coordinate gradient at pi.
using Objective = std::function<std::pair<double, Vec>(const SimplexVector&)>;

// Entropic mirror descent maximizer on the simplex. Step size gamma0/sqrt(i);
// multiplicative update r_k = pi_k * exp(g_k - max(g)) with g = gamma * grad,
// then renormalize; entries floored at 1e-12 and renormalized to keep log pi
// finite. Stops when |value - previous value| < epsilon or after max_iters.
// Throws OptimizerError (carrying the last valid iterate) if the objective
// returns a non-finite value or gradient.
EmdResult maximize(const Objective& objective, const SimplexVector& pi0, const EmdConfig& cfg);

}  // namespace iwvi
