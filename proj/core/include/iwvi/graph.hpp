#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "iwvi/numerics.hpp"

namespace iwvi {

enum class NodeKind { Object, Predicate, Global };

// Reference to one node of a scene graph. Ordering follows the serialization
// order: objects [0, m), predicates [m, m+n), global last.
struct NodeRef {
    NodeKind kind = NodeKind::Object;
    int index = 0;  // within its kind; 0 for the global node

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

// Factor-graph topology of objects, predicates and one global node.
//
// Each predicate connects a (subject, object) pair of object nodes;
// object_pairs lists unordered object-object neighbor pairs. The global node
// neighbors every other node.
class SceneGraph {
public:
    SceneGraph() = default;

    int num_objects() const { return m_; }
    int num_predicates() const { return n_; }
    bool has_global() const { return true; }
    int num_variable_nodes() const { return m_ + n_; }

    const std::vector<std::pair<int, int>>& predicate_endpoints() const {
        return endpoints_;
    }
    const std::vector<std::pair<int, int>>& object_pairs() const { return pairs_; }

    // Predicates incident to object i, ascending.
    const std::vector<int>& predicates_of_object(int i) const;
    // Objects paired with object i via object_pairs, ascending.
    const std::vector<int>& paired_objects(int i) const;

    // Position of a node in the serialization order (objects, predicates, global).
    int global_index(const NodeRef& node) const;
    NodeRef node_at(int global_index) const;

    friend SceneGraph build_graph(int m, int n,
                                  const std::vector<std::pair<int, int>>& endpoints,
                                  const std::vector<std::pair<int, int>>& object_pairs);

private:
    int m_ = 0;
    int n_ = 0;
    std::vector<std::pair<int, int>> endpoints_;
    std::vector<std::pair<int, int>> pairs_;
    std::vector<std::vector<int>> obj_predicates_;  // per object, ascending
    std::vector<std::vector<int>> obj_partners_;    // per object, ascending
};

// Validates topology and precomputes adjacency.
// Throws TopologyError on out-of-range indices, equal predicate endpoints,
// self-pairs or duplicate object pairs.
SceneGraph build_graph(int m, int n,
                       const std::vector<std::pair<int, int>>& endpoints,
                       const std::vector<std::pair<int, int>>& object_pairs);

// Neighbors of a node, ascending in serialization order.
// Object: paired objects, incident predicates, global.
// Predicate: its two endpoints, global.
// Global: every other node.
std::vector<NodeRef> neighbors(const SceneGraph& g, const NodeRef& node);

// One synthetic task instance: topology, per-node features, ground truth.
struct SyntheticInstance {
    SceneGraph graph;
    std::vector<Vec> object_features;
    std::vector<Vec> predicate_features;
    Vec global_feature;
    std::vector<int> object_labels;
    std::vector<int> predicate_labels;
};

struct TaskConfig {
    int d = 8;        // feature dimension
    int v_o = 5;      // object vocabulary size
    int v_p = 4;      // predicate vocabulary size
    int m_min = 2;
    int m_max = 4;
    int n_min = 1;
    int n_max = 3;
    double class_separation = 1.0;  // spacing of class-conditional cluster means
    double label_skew = 0.0;        // power-law exponent; 0 = uniform labels
    std::uint64_t seed = 42;

    void validate() const;  // throws ConfigError
};

// Deterministic synthetic dataset: labels from a power-law prior, features
// from class-conditional Gaussian clusters; predicate features are mixed with
// their endpoint object features so pairwise structure is learnable.
std::vector<SyntheticInstance> synth_dataset(const TaskConfig& cfg, int count);

// Dataset file: one JSON record per line; first line is a header record
// holding the TaskConfig. Field names match the type fields.
void write_dataset(std::ostream& out, const TaskConfig& cfg,
                   const std::vector<SyntheticInstance>& instances);
void write_dataset_file(const std::string& path, const TaskConfig& cfg,
                        const std::vector<SyntheticInstance>& instances);
struct LoadedDataset {
    TaskConfig config;
    std::vector<SyntheticInstance> instances;
};
LoadedDataset read_dataset(std::istream& in);
LoadedDataset read_dataset_file(const std::string& path);

}  // namespace iwvi
