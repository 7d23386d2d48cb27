#include "iwvi/oracle.hpp"

#include <cmath>
#include <limits>

#include "iwvi/errors.hpp"

namespace iwvi {

double exact_log_partition_node(const Vec& psi) {
    if (!all_finite(psi)) throw NumericalError("psi must be finite");
    return logsumexp(psi);
}

namespace {

// Streaming logsumexp; deterministic for a fixed visit order.
class OnlineLse {
public:
    void add(double x) {
        if (x <= max_) {
            sum_ += std::exp(x - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        }
    }
    double value() const {
        if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
        return max_ + std::log(sum_);
    }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

unsigned long long guarded_count(const SceneGraph& g, int vo, int vp) {
    unsigned long long count = 1;
    for (int i = 0; i < g.num_objects() && count <= 10000000ull; ++i)
        count *= static_cast<unsigned>(vo);
    for (int j = 0; j < g.num_predicates() && count <= 10000000ull; ++j)
        count *= static_cast<unsigned>(vp);
    if (count > 10000000ull)
        throw CapacityError("joint configuration count exceeds the 1e7 guard");
    return count;
}

// Row-major assignment increment (last node fastest). Returns false on wrap.
bool advance(std::vector<int>& z, const std::vector<int>& card) {
    for (int i = static_cast<int>(z.size()) - 1; i >= 0; --i) {
        if (++z[static_cast<size_t>(i)] < card[static_cast<size_t>(i)]) return true;
        z[static_cast<size_t>(i)] = 0;
    }
    return false;
}

std::vector<int> cards_of(const SceneGraph& g, int vo, int vp) {
    std::vector<int> card;
    for (int i = 0; i < g.num_objects(); ++i) card.push_back(vo);
    for (int j = 0; j < g.num_predicates(); ++j) card.push_back(vp);
    return card;
}

}  // namespace

ExactSummary exact_joint(const PotentialTables& tables, const SceneGraph& g) {
    const int vo = tables.v_o();
    const int vp = g.num_predicates() > 0 ? tables.v_p() : 0;
    guarded_count(g, vo, vp);
    const auto card = cards_of(g, vo, vp);
    const int nodes = g.num_variable_nodes();

    OnlineLse partition;
    std::vector<std::vector<OnlineLse>> buckets(static_cast<size_t>(nodes));
    for (int i = 0; i < nodes; ++i)
        buckets[static_cast<size_t>(i)].resize(static_cast<size_t>(card[static_cast<size_t>(i)]));

    std::vector<int> z(static_cast<size_t>(nodes), 0);
    do {
        const double score = joint_log_score(tables, g, z);
        partition.add(score);
        for (int i = 0; i < nodes; ++i)
            buckets[static_cast<size_t>(i)][static_cast<size_t>(z[static_cast<size_t>(i)])].add(
                score);
    } while (advance(z, card));

    ExactSummary out;
    out.log_partition = partition.value();
    for (int i = 0; i < nodes; ++i) {
        const int v = card[static_cast<size_t>(i)];
        Vec scores(v), marg(v);
        for (int k = 0; k < v; ++k)
            scores[k] = buckets[static_cast<size_t>(i)][static_cast<size_t>(k)].value();
        for (int k = 0; k < v; ++k) marg[k] = std::exp(scores[k] - out.log_partition);
        marg /= marg.sum();
        out.marginal_scores.push_back(std::move(scores));
        out.marginals.push_back(std::move(marg));
    }
    return out;
}

std::vector<int> exact_map(const PotentialTables& tables, const SceneGraph& g) {
    const int vo = tables.v_o();
    const int vp = g.num_predicates() > 0 ? tables.v_p() : 0;
    guarded_count(g, vo, vp);
    const auto card = cards_of(g, vo, vp);

    std::vector<int> z(static_cast<size_t>(g.num_variable_nodes()), 0);
    std::vector<int> best = z;
    double best_score = -std::numeric_limits<double>::infinity();
    do {
        const double score = joint_log_score(tables, g, z);
        // Strict improvement keeps the first (lexicographically lowest) argmax.
        if (score > best_score) {
            best_score = score;
            best = z;
        }
    } while (advance(z, card));
    return best;
}

}  // namespace iwvi
