#pragma once

#include "iwvi/bound.hpp"
#include "iwvi/emd.hpp"
#include "iwvi/numerics.hpp"
#include "iwvi/sampler.hpp"

namespace iwvi {

enum class ReadoutMode { Posterior, Variational };
enum class PiInit { Uniform, Random };
enum class NoiseMode { Frozen, Fresh };

struct InferenceConfig {
    int samples_infer = 50;
    double tau = 1.0;
    EmdConfig emd;
    ReadoutMode readout = ReadoutMode::Posterior;
    PiInit pi_init = PiInit::Uniform;
    NoiseMode noise = NoiseMode::Frozen;
    DensityMode density = DensityMode::Paper;
};

struct NodeInference {
    SimplexVector pi_star;
    double bound = 0.0;  // L_s at pi_star
    int iterations = 0;
};

// Variational inference for one node: initialize pi, draw samples_infer
// Gumbel noises (frozen across the optimization unless noise=fresh), maximize
// the bound with entropic mirror descent.
NodeInference infer_node(const Vec& psi, const InferenceConfig& cfg, Rng& rng);

// phi_k = psi_k - bound.
Vec surrogate_logit(const Vec& psi, double bound);

// phi - logsumexp(phi); entries <= 0, logsumexp 0.
Vec log_posterior(const Vec& phi);

struct NodePosterior {
    Vec phi;
    Vec log_post;
    SimplexVector pi_star;
    double bound = 0.0;
};

NodePosterior infer_posterior(const Vec& psi, const InferenceConfig& cfg, Rng& rng);

// Argmax of the selected vector; ties break toward the lowest index.
int readout(const NodePosterior& node, ReadoutMode mode);
int argmax_lowest(const Vec& x);

}  // namespace iwvi
