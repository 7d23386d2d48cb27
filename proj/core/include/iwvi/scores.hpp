#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "iwvi/graph.hpp"
#include "iwvi/nn.hpp"
#include "iwvi/numerics.hpp"

namespace iwvi {

// Per-node log marginal score vectors: log s(x_i, z_i) = <psi_i, z_i> for any
// simplex z_i.
struct MarginalScoreTable {
    std::vector<Vec> object_scores;     // m vectors of width v_o
    std::vector<Vec> predicate_scores;  // n vectors of width v_p
};

// Explicit potential tables over a fixed topology, used by the verification
// path. The global node carries a single interpretation, so its edges
// collapse to per-node vectors (og, pg). Each predicate has one table per
// endpoint incidence (op_subj, op_obj), rows indexed by the object label.
struct PotentialTables {
    std::vector<Vec> object_unary;     // m x v_o
    std::vector<Vec> predicate_unary;  // n x v_p
    std::vector<Mat> op_subj;          // n x (v_o, v_p)
    std::vector<Mat> op_obj;           // n x (v_o, v_p)
    std::vector<Mat> oo;               // one (v_o, v_o) per object pair
    std::vector<Vec> og;               // m x v_o
    std::vector<Vec> pg;               // n x v_p

    int v_o() const;
    int v_p() const;
};

// psi_i from the seven nets (pairwise inputs are object-first
// concatenations); neighbor messages accumulate with compensated summation.
Vec object_marginal_score(const ThetaParams& theta, const SyntheticInstance& inst, int i);
Vec predicate_marginal_score(const ThetaParams& theta, const SyntheticInstance& inst, int j);
MarginalScoreTable compute_scores(const ThetaParams& theta, const SyntheticInstance& inst);

// Negative sum of all potentials selected by the assignment (objects first,
// then predicates, serialization order). Throws on out-of-vocabulary labels.
double joint_log_score(const PotentialTables& tables, const SceneGraph& g,
                       const std::vector<int>& assignment);

// Entry k = log sum over all assignments with `node` fixed to k of
// exp(joint_log_score), computed by variable elimination in log space.
// Throws CapacityError if the joint configuration count exceeds 1e7.
Vec marginal_score_explicit(const PotentialTables& tables, const SceneGraph& g,
                            const NodeRef& node);

// Uniformly random tables in [-scale, scale], shaped for g.
PotentialTables random_tables(const SceneGraph& g, int v_o, int v_p, Rng& rng,
                              double scale = 1.0);

// Text serialization: topology plus named tables with shapes; doubles are
// written with round-trip precision.
void write_potentials(std::ostream& out, const SceneGraph& g, const PotentialTables& tables);
void write_potentials_file(const std::string& path, const SceneGraph& g,
                           const PotentialTables& tables);
std::pair<SceneGraph, PotentialTables> read_potentials(std::istream& in);
std::pair<SceneGraph, PotentialTables> read_potentials_file(const std::string& path);

}  // namespace iwvi
