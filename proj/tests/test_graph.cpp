#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "iwvi/errors.hpp"
#include "iwvi/graph.hpp"

using namespace iwvi;

namespace {

bool contains(const std::vector<NodeRef>& ns, NodeKind kind, int index) {
    return std::find(ns.begin(), ns.end(), NodeRef{kind, index}) != ns.end();
}

}  // namespace

TEST_CASE("triplet graph topology") {
    const SceneGraph g = build_graph(2, 1, {{0, 1}}, {});
    CHECK(g.num_objects() == 2);
    CHECK(g.num_predicates() == 1);
    CHECK(g.num_variable_nodes() == 3);

    const auto np = neighbors(g, {NodeKind::Predicate, 0});
    REQUIRE(np.size() == 3);
    CHECK(np[0] == NodeRef{NodeKind::Object, 0});
    CHECK(np[1] == NodeRef{NodeKind::Object, 1});
    CHECK(np[2] == NodeRef{NodeKind::Global, 0});
}

TEST_CASE("single-object graph") {
    const SceneGraph g = build_graph(1, 0, {}, {});
    const auto ns = neighbors(g, {NodeKind::Object, 0});
    REQUIRE(ns.size() == 1);
    CHECK(ns[0] == NodeRef{NodeKind::Global, 0});
}

TEST_CASE("chain with one object-object edge") {
    const SceneGraph g = build_graph(3, 2, {{0, 1}, {1, 2}}, {{0, 2}});

    const auto mid = neighbors(g, {NodeKind::Object, 1});
    REQUIRE(mid.size() == 3);
    CHECK(mid[0] == NodeRef{NodeKind::Predicate, 0});
    CHECK(mid[1] == NodeRef{NodeKind::Predicate, 1});
    CHECK(mid[2] == NodeRef{NodeKind::Global, 0});

    const auto first = neighbors(g, {NodeKind::Object, 0});
    CHECK(contains(first, NodeKind::Object, 2));
    CHECK(contains(first, NodeKind::Predicate, 0));
    CHECK(contains(first, NodeKind::Global, 0));
    CHECK(first.size() == 3);
}

TEST_CASE("neighbor queries are symmetric") {
    const SceneGraph g = build_graph(4, 3, {{0, 1}, {2, 3}, {1, 3}}, {{0, 3}, {1, 2}});
    std::vector<NodeRef> all;
    for (int i = 0; i < 4; ++i) all.push_back({NodeKind::Object, i});
    for (int j = 0; j < 3; ++j) all.push_back({NodeKind::Predicate, j});
    all.push_back({NodeKind::Global, 0});

    for (const auto& a : all)
        for (const auto& b : all) {
            if (a == b) continue;
            const auto na = neighbors(g, a);
            const auto nb = neighbors(g, b);
            const bool ab = std::find(na.begin(), na.end(), b) != na.end();
            const bool ba = std::find(nb.begin(), nb.end(), a) != nb.end();
            CHECK(ab == ba);
        }
}

TEST_CASE("build_graph rejects bad topology") {
    CHECK_THROWS_AS(build_graph(0, 0, {}, {}), TopologyError);
    CHECK_THROWS_AS(build_graph(2, 1, {{0, 0}}, {}), TopologyError);   // equal endpoints
    CHECK_THROWS_AS(build_graph(2, 1, {{0, 2}}, {}), TopologyError);   // out of range
    CHECK_THROWS_AS(build_graph(2, 0, {}, {{1, 1}}), TopologyError);   // self-pair
    CHECK_THROWS_AS(build_graph(3, 0, {}, {{0, 1}, {1, 0}}), TopologyError);  // duplicate
    CHECK_THROWS_AS(build_graph(2, 0, {}, {{0, 5}}), TopologyError);   // pair out of range
}

TEST_CASE("synth is a pure function of TaskConfig") {
    TaskConfig cfg;
    cfg.seed = 77;
    const auto a = synth_dataset(cfg, 20);
    const auto b = synth_dataset(cfg, 20);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].object_labels == b[i].object_labels);
        CHECK(a[i].predicate_labels == b[i].predicate_labels);
        REQUIRE(a[i].object_features.size() == b[i].object_features.size());
        for (size_t k = 0; k < a[i].object_features.size(); ++k)
            CHECK((a[i].object_features[k] - b[i].object_features[k]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a[i].global_feature - b[i].global_feature).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("uniform label frequencies within 3 binomial sigma") {
    TaskConfig cfg;
    cfg.v_o = 5;
    cfg.label_skew = 0.0;
    cfg.m_min = 5;
    cfg.m_max = 5;
    cfg.n_min = 1;
    cfg.n_max = 1;
    cfg.seed = 123;
    const int instances = 20000;  // 1e5 object labels
    const auto data = synth_dataset(cfg, instances);
    std::vector<long long> counts(5, 0);
    long long total = 0;
    for (const auto& inst : data)
        for (int z : inst.object_labels) {
            ++counts[static_cast<size_t>(z)];
            ++total;
        }
    CHECK(total == 100000);
    const double p = 0.2;
    const double sigma = std::sqrt(p * (1.0 - p) * static_cast<double>(total));
    for (long long c : counts)
        CHECK(std::abs(static_cast<double>(c) - p * static_cast<double>(total)) <=
              3.0 * sigma);
}

TEST_CASE("skewed labels follow the configured power law at 3 sigma") {
    TaskConfig cfg;
    cfg.v_o = 4;
    cfg.label_skew = 1.0;
    cfg.m_min = 5;
    cfg.m_max = 5;
    cfg.n_min = 1;
    cfg.n_max = 1;
    cfg.seed = 321;
    const auto data = synth_dataset(cfg, 20000);
    std::vector<long long> counts(4, 0);
    long long total = 0;
    for (const auto& inst : data)
        for (int z : inst.object_labels) {
            ++counts[static_cast<size_t>(z)];
            ++total;
        }
    double norm = 0.0;
    for (int k = 0; k < 4; ++k) norm += 1.0 / (k + 1.0);
    for (int k = 0; k < 4; ++k) {
        const double p = (1.0 / (k + 1.0)) / norm;
        const double sigma = std::sqrt(p * (1.0 - p) * static_cast<double>(total));
        CHECK(std::abs(static_cast<double>(counts[static_cast<size_t>(k)]) -
                       p * static_cast<double>(total)) <= 3.0 * sigma);
    }
}

TEST_CASE("zero separation still yields valid instances") {
    TaskConfig cfg;
    cfg.class_separation = 0.0;
    cfg.seed = 5;
    const auto data = synth_dataset(cfg, 10);
    for (const auto& inst : data) {
        CHECK(inst.object_features.size() ==
              static_cast<size_t>(inst.graph.num_objects()));
        for (const auto& f : inst.object_features) CHECK(all_finite(f));
    }
}

TEST_CASE("dataset JSONL round trip") {
    TaskConfig cfg;
    cfg.seed = 9;
    cfg.v_o = 3;
    cfg.v_p = 2;
    const auto data = synth_dataset(cfg, 7);

    std::stringstream buf;
    write_dataset(buf, cfg, data);

    int lines = 0;
    for (std::string line; std::getline(buf, line);) ++lines;
    CHECK(lines == 8);  // header plus one line per instance

    buf.clear();
    buf.seekg(0);
    const LoadedDataset back = read_dataset(buf);
    CHECK(back.config.v_o == 3);
    CHECK(back.config.v_p == 2);
    REQUIRE(back.instances.size() == 7);
    for (size_t i = 0; i < 7; ++i) {
        CHECK(back.instances[i].object_labels == data[i].object_labels);
        CHECK(back.instances[i].predicate_labels == data[i].predicate_labels);
        CHECK(back.instances[i].graph.predicate_endpoints() ==
              data[i].graph.predicate_endpoints());
        CHECK(back.instances[i].graph.object_pairs() == data[i].graph.object_pairs());
        for (size_t k = 0; k < data[i].object_features.size(); ++k)
            CHECK((back.instances[i].object_features[k] - data[i].object_features[k])
                      .cwiseAbs()
                      .maxCoeff() == 0.0);
    }
}

TEST_CASE("TaskConfig validation") {
    TaskConfig bad;
    bad.v_o = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    TaskConfig bad2;
    bad2.m_min = 3;
    bad2.m_max = 2;
    CHECK_THROWS_AS(bad2.validate(), ConfigError);
}
