#pragma once

#include <vector>

#include "iwvi/graph.hpp"
#include "iwvi/numerics.hpp"
#include "iwvi/scores.hpp"

namespace iwvi {

// Brute-force enumeration ground truth on guard-sized graphs.
struct ExactSummary {
    double log_partition = 0.0;
    std::vector<Vec> marginals;        // per non-global node, each sums to 1
    std::vector<Vec> marginal_scores;  // log sum of exp(joint) per fixed label
};

// logsumexp(psi): the per-node factorized log partition.
double exact_log_partition_node(const Vec& psi);

// Enumerates every labeling (row-major over node indices, last node fastest)
// and reduces with deterministic online logsumexp.
// Throws CapacityError past 1e7 configurations.
ExactSummary exact_joint(const PotentialTables& tables, const SceneGraph& g);

// Labeling maximizing joint_log_score; ties break toward the lexicographically
// lowest assignment. Same guard as exact_joint.
std::vector<int> exact_map(const PotentialTables& tables, const SceneGraph& g);

}  // namespace iwvi
