#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "iwvi/numerics.hpp"

namespace iwvi {

// Fully connected net: tanh hidden layers, linear output, double precision.
// weights[l] has shape (sizes[l+1], sizes[l]); biases[l] has length sizes[l+1].
struct Mlp {
    std::vector<Mat> weights;
    std::vector<Vec> biases;

    int input_width() const;
    int output_width() const;
    int num_layers() const { return static_cast<int>(weights.size()); }
    void validate() const;  // throws DimensionError on shape mismatch
};

// Glorot-uniform initialized net with the given layer sizes (first = input
// width, last = output width). Deterministic given the rng state.
Mlp make_mlp(const std::vector<int>& sizes, Rng& rng);

// Deterministic forward pass. Throws DimensionError if x width mismatches.
Vec forward(const Mlp& net, const Vec& x);

// Gradients of <grad_out, forward(net, x)> with respect to parameters and x.
struct MlpBackward {
    std::vector<Mat> dW;
    std::vector<Vec> db;
    Vec dx;
};
MlpBackward backward(const Mlp& net, const Vec& x, const Vec& grad_out);

// Parameter gradient accumulator shaped like a net.
struct MlpGrads {
    std::vector<Mat> dW;
    std::vector<Vec> db;

    void add(const MlpBackward& g);
    void add_scaled(const MlpGrads& g, double scale);
    void scale(double factor);
    double squared_norm() const;
};
MlpGrads zeros_like(const Mlp& net);

// The seven scoring nets. Unary nets map d -> v; pairwise nets map 2d -> v
// (object vocabulary for h_o/g_op/g_oo/g_og, predicate for h_p/g_po/g_pg).
struct ThetaParams {
    Mlp h_o, h_p, g_op, g_oo, g_og, g_po, g_pg;
};

struct ThetaGrads {
    MlpGrads h_o, h_p, g_op, g_oo, g_og, g_po, g_pg;

    void add_scaled(const ThetaGrads& g, double scale);
    void scale(double factor);
    double squared_norm() const;
};

// Seeded construction: every net has one tanh hidden layer of width `hidden`.
ThetaParams make_theta(int d, int v_o, int v_p, int hidden, Rng& rng);
ThetaGrads zeros_like(const ThetaParams& theta);

// p <- p - alpha * g for every parameter.
void sgd_step(ThetaParams& theta, const ThetaGrads& grads, double alpha);

// Checkpoint file layout (all integers little-endian, doubles IEEE-754
// little-endian):
//   bytes 0..7   magic "IWVICKPT"
//   uint32       format version (1)
//   uint32       tensor count
//   per tensor:  uint32 name length, name bytes (UTF-8, no terminator),
//                uint32 rank, rank x uint32 dims,
//                prod(dims) x float64 payload, row-major.
// Tensors are written in a fixed order: for each net in declaration order
// (h_o, h_p, g_op, g_oo, g_og, g_po, g_pg), alternating <net>.W<l>, <net>.b<l>
// per layer; then the scalar tensor "tau" (rank 0). Identical parameters
// serialize to identical bytes.
struct Checkpoint {
    ThetaParams theta;
    double tau = 1.0;
};
void save_checkpoint(std::ostream& out, const ThetaParams& theta, double tau);
void save_checkpoint_file(const std::string& path, const ThetaParams& theta, double tau);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace iwvi
