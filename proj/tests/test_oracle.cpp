#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "iwvi/errors.hpp"
#include "iwvi/oracle.hpp"

using namespace iwvi;

TEST_CASE("per-node log partition landmarks") {
    Vec a = Vec::Zero(3);
    CHECK(exact_log_partition_node(a) == doctest::Approx(std::log(3.0)).epsilon(1e-14));

    Vec b(2);
    b << 1.0, 0.0;
    CHECK(exact_log_partition_node(b) ==
          doctest::Approx(std::log(1.0 + std::exp(1.0))).epsilon(1e-14));
    CHECK(exact_log_partition_node(b) == doctest::Approx(1.3133).epsilon(1e-4));

    const double c = -2.5;
    CHECK(exact_log_partition_node((b.array() + c).matrix()) ==
          doctest::Approx(exact_log_partition_node(b) + c).epsilon(1e-12));
}

TEST_CASE("single node with zero unary") {
    const SceneGraph g = build_graph(1, 0, {}, {});
    Rng rng(1);
    const PotentialTables t = random_tables(g, 4, 2, rng, 0.0);
    const ExactSummary s = exact_joint(t, g);
    CHECK(s.log_partition == doctest::Approx(std::log(4.0)).epsilon(1e-13));
    REQUIRE(s.marginals.size() == 1);
    for (int k = 0; k < 4; ++k)
        CHECK(s.marginals[0][k] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("disconnected nodes factorize") {
    const SceneGraph g = build_graph(2, 0, {}, {});
    Rng rng(2);
    PotentialTables t = random_tables(g, 3, 2, rng);
    t.og[0].setZero();
    t.og[1].setZero();
    const ExactSummary s = exact_joint(t, g);

    const Vec psi0 = -t.object_unary[0];
    const Vec psi1 = -t.object_unary[1];
    const double expected = exact_log_partition_node(psi0) + exact_log_partition_node(psi1);
    CHECK(s.log_partition == doctest::Approx(expected).epsilon(1e-9));

    for (int k = 0; k < 3; ++k) {
        CHECK(s.marginals[0][k] == doctest::Approx(softmax(psi0)[k]).epsilon(1e-9));
        CHECK(s.marginals[1][k] == doctest::Approx(softmax(psi1)[k]).epsilon(1e-9));
    }
}

TEST_CASE("marginal masses each sum to one") {
    Rng rng(3);
    const SceneGraph g = build_graph(3, 2, {{0, 1}, {1, 2}}, {{0, 2}});
    const PotentialTables t = random_tables(g, 3, 2, rng);
    const ExactSummary s = exact_joint(t, g);
    REQUIRE(s.marginals.size() == 5);
    for (const auto& marg : s.marginals) {
        KahanSum total;
        for (Eigen::Index k = 0; k < marg.size(); ++k) {
            CHECK(marg[k] >= 0.0);
            total.add(marg[k]);
        }
        CHECK(std::abs(total.value() - 1.0) <= 1e-12);
    }
}

TEST_CASE("marginal_scores are consistent with the partition") {
    Rng rng(4);
    const SceneGraph g = build_graph(2, 1, {{0, 1}}, {});
    const PotentialTables t = random_tables(g, 3, 2, rng);
    const ExactSummary s = exact_joint(t, g);
    for (const auto& ms : s.marginal_scores)
        CHECK(logsumexp(ms) ==
              doctest::Approx(s.log_partition)
                  .epsilon(1e-12 * std::max(1.0, std::abs(s.log_partition))));
}

TEST_CASE("exact_map basics") {
    const SceneGraph single = build_graph(1, 0, {}, {});
    Rng rng(5);
    PotentialTables t = random_tables(single, 2, 2, rng, 0.0);
    CHECK(exact_map(t, single) == std::vector<int>{0});  // tie -> lexicographic low

    t.object_unary[0] << -3.0, -1.0;
    // Scores negate the unary, so label 0 scores +3 and wins.
    CHECK(exact_map(t, single) == std::vector<int>{0});

    t.object_unary[0] << 5.0, -1.0;
    CHECK(exact_map(t, single) == std::vector<int>{1});
}

TEST_CASE("attractive pairwise table aligns the pair") {
    const SceneGraph g = build_graph(2, 0, {}, {{0, 1}});
    Rng rng(6);
    PotentialTables t = random_tables(g, 3, 2, rng, 0.1);
    // Strongly negative energy (high score) on the diagonal for label 2.
    t.oo[0].setConstant(5.0);
    t.oo[0](2, 2) = -50.0;
    const auto z = exact_map(t, g);
    CHECK(z == std::vector<int>{2, 2});
}

TEST_CASE("map score dominates random labelings") {
    Rng rng(7);
    const SceneGraph g = build_graph(3, 2, {{0, 1}, {0, 2}}, {{1, 2}});
    const PotentialTables t = random_tables(g, 3, 2, rng);
    const auto best = exact_map(t, g);
    const double best_score = joint_log_score(t, g, best);
    for (int rep = 0; rep < 10000; ++rep) {
        std::vector<int> z(5);
        for (int q = 0; q < 3; ++q) z[static_cast<size_t>(q)] = static_cast<int>(rng.below(3));
        for (int q = 3; q < 5; ++q) z[static_cast<size_t>(q)] = static_cast<int>(rng.below(2));
        CHECK(joint_log_score(t, g, z) <= best_score + 1e-12);
    }
}

TEST_CASE("enumeration guard") {
    const SceneGraph g = build_graph(4, 0, {}, {});
    Rng rng(8);
    const PotentialTables t = random_tables(g, 100, 2, rng);
    CHECK_THROWS_AS(exact_joint(t, g), CapacityError);
    CHECK_THROWS_AS(exact_map(t, g), CapacityError);
}

TEST_CASE("exact_joint determinism") {
    Rng rng(9);
    const SceneGraph g = build_graph(3, 1, {{0, 2}}, {});
    const PotentialTables t = random_tables(g, 3, 2, rng);
    const ExactSummary a = exact_joint(t, g);
    const ExactSummary b = exact_joint(t, g);
    CHECK(a.log_partition == b.log_partition);
    for (size_t q = 0; q < a.marginals.size(); ++q)
        CHECK((a.marginals[q] - b.marginals[q]).cwiseAbs().maxCoeff() == 0.0);
}
