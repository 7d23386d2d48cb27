#include "iwvi/learning.hpp"

#include <cmath>
#include <limits>

#include "iwvi/errors.hpp"
#include "iwvi/scores.hpp"

namespace iwvi {

void LearnConfig::validate() const {
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (iters < 1) throw ConfigError("iters must be >= 1");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
    if (samples_learn < 1) throw ConfigError("samples_learn must be >= 1");
    if (hidden < 1) throw ConfigError("hidden must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!(schedule.tau0 > 0.0) || !(schedule.tau_min > 0.0) || schedule.beta < 0.0 ||
        schedule.tau_min > schedule.tau0)
        throw ConfigError("invalid temperature schedule");
}

double cross_entropy(const std::vector<Vec>& log_posteriors, const std::vector<int>& labels) {
    if (log_posteriors.size() != labels.size())
        throw DimensionError("every node needs a label");
    KahanSum total;
    for (size_t i = 0; i < labels.size(); ++i) {
        const int z = labels[i];
        if (z < 0 || z >= log_posteriors[i].size())
            throw DimensionError("label out of vocabulary");
        total.add(-log_posteriors[i][z]);
    }
    return total.value();
}

namespace {

// d(cross entropy)/d(psi) for one node: softmax(psi) - onehot(label).
Vec ce_seed(const Vec& psi, int label) {
    Vec g = softmax(psi);
    g[label] -= 1.0;
    return g;
}

Vec concat(const Vec& a, const Vec& b) {
    Vec out(a.size() + b.size());
    out << a, b;
    return out;
}

// Backpropagates one node's psi-gradient into the contributing nets.
// psi = -(sum of net outputs), so each net receives -gpsi.
void backprop_object(const SyntheticInstance& inst, const ThetaParams& theta, int i,
                     const Vec& gpsi, ThetaGrads& grads) {
    const Vec gout = -gpsi;
    const Vec& yi = inst.object_features[static_cast<size_t>(i)];
    grads.h_o.add(backward(theta.h_o, yi, gout));
    for (int j : inst.graph.predicates_of_object(i))
        grads.g_op.add(backward(theta.g_op,
                                concat(yi, inst.predicate_features[static_cast<size_t>(j)]),
                                gout));
    for (int l : inst.graph.paired_objects(i))
        grads.g_oo.add(backward(theta.g_oo,
                                concat(yi, inst.object_features[static_cast<size_t>(l)]),
                                gout));
    grads.g_og.add(backward(theta.g_og, concat(yi, inst.global_feature), gout));
}

void backprop_predicate(const SyntheticInstance& inst, const ThetaParams& theta, int j,
                        const Vec& gpsi, ThetaGrads& grads) {
    const Vec gout = -gpsi;
    const Vec& yj = inst.predicate_features[static_cast<size_t>(j)];
    const auto [s, o] = inst.graph.predicate_endpoints()[static_cast<size_t>(j)];
    grads.h_p.add(backward(theta.h_p, yj, gout));
    const int lo = std::min(s, o), hi = std::max(s, o);
    grads.g_po.add(
        backward(theta.g_po, concat(inst.object_features[static_cast<size_t>(lo)], yj), gout));
    grads.g_po.add(
        backward(theta.g_po, concat(inst.object_features[static_cast<size_t>(hi)], yj), gout));
    grads.g_pg.add(backward(theta.g_pg, concat(yj, inst.global_feature), gout));
}

void accumulate_instance(const SyntheticInstance& inst, const ThetaParams& theta,
                         const MarginalScoreTable& scores, ThetaGrads& grads,
                         KahanSum& loss) {
    for (int i = 0; i < inst.graph.num_objects(); ++i) {
        const Vec& psi = scores.object_scores[static_cast<size_t>(i)];
        const int label = inst.object_labels[static_cast<size_t>(i)];
        if (label < 0 || label >= psi.size()) throw DimensionError("label out of vocabulary");
        loss.add(logsumexp(psi) - psi[label]);
        backprop_object(inst, theta, i, ce_seed(psi, label), grads);
    }
    for (int j = 0; j < inst.graph.num_predicates(); ++j) {
        const Vec& psi = scores.predicate_scores[static_cast<size_t>(j)];
        const int label = inst.predicate_labels[static_cast<size_t>(j)];
        if (label < 0 || label >= psi.size()) throw DimensionError("label out of vocabulary");
        loss.add(logsumexp(psi) - psi[label]);
        backprop_predicate(inst, theta, j, ce_seed(psi, label), grads);
    }
}

struct NodeTask {
    int instance_index = 0;  // position in the dataset
    int node_index = 0;      // serialization order within the instance
    const Vec* psi = nullptr;
};

}  // namespace

ThetaGrads grad_theta(const SyntheticInstance& inst, const ThetaParams& theta,
                      double* loss_out) {
    ThetaGrads grads = zeros_like(theta);
    KahanSum loss;
    const MarginalScoreTable scores = compute_scores(theta, inst);
    accumulate_instance(inst, theta, scores, grads, loss);
    if (loss_out) *loss_out = loss.value();
    return grads;
}

TrainResult train(const std::vector<SyntheticInstance>& dataset, const TaskConfig& task,
                  const LearnConfig& cfg, const InferenceConfig& inf_cfg,
                  const TrainCallback& on_iteration) {
    cfg.validate();
    if (dataset.empty()) throw ConfigError("training dataset is empty");
    const int N = static_cast<int>(dataset.size());

    Rng theta_rng(derive_seed(cfg.seed, 0x7e7a));
    ThetaParams theta = make_theta(task.d, task.v_o, task.v_p, cfg.hidden, theta_rng);
    TemperatureSchedule sched = cfg.schedule;
    sched.reset();

    TrainResult result;
    result.trace.reserve(static_cast<size_t>(cfg.iters));

    for (int t = 1; t <= cfg.iters; ++t) {
        std::vector<int> batch(static_cast<size_t>(cfg.batch));
        for (int b = 0; b < cfg.batch; ++b)
            batch[static_cast<size_t>(b)] =
                static_cast<int>((static_cast<long long>(t - 1) * cfg.batch + b) % N);

        std::vector<MarginalScoreTable> scores(batch.size());
        std::vector<NodeTask> tasks;
        for (size_t b = 0; b < batch.size(); ++b) {
            const auto& inst = dataset[static_cast<size_t>(batch[b])];
            scores[b] = compute_scores(theta, inst);
            for (int q = 0; q < inst.graph.num_variable_nodes(); ++q) {
                const Vec* psi =
                    q < inst.graph.num_objects()
                        ? &scores[b].object_scores[static_cast<size_t>(q)]
                        : &scores[b].predicate_scores[static_cast<size_t>(
                              q - inst.graph.num_objects())];
                tasks.push_back({batch[b], q, psi});
            }
        }

        InferenceConfig icfg = inf_cfg;
        icfg.samples_infer = cfg.samples_learn;
        icfg.tau = sched.tau;

        std::vector<double> bounds(tasks.size(), 0.0);
        parallel_for(static_cast<int>(tasks.size()), cfg.workers, [&](int k) {
            const NodeTask& nt = tasks[static_cast<size_t>(k)];
            Rng stream(derive_seed(cfg.seed, static_cast<std::uint64_t>(t),
                                   static_cast<std::uint64_t>(nt.instance_index),
                                   static_cast<std::uint64_t>(nt.node_index)));
            bounds[static_cast<size_t>(k)] = infer_node(*nt.psi, icfg, stream).bound;
        });

        ThetaGrads grads = zeros_like(theta);
        KahanSum loss;
        for (size_t b = 0; b < batch.size(); ++b)
            accumulate_instance(dataset[static_cast<size_t>(batch[b])], theta, scores[b],
                                grads, loss);
        const double batch_loss = loss.value() / static_cast<double>(cfg.batch);
        if (!std::isfinite(batch_loss)) throw NumericalError("training loss is not finite");
        grads.scale(1.0 / static_cast<double>(cfg.batch));
        sgd_step(theta, grads, cfg.alpha);

        KahanSum bound_sum;
        for (double bval : bounds) bound_sum.add(bval);
        const double mean_bound =
            tasks.empty() ? 0.0 : bound_sum.value() / static_cast<double>(tasks.size());

        const double tau_after = sched.anneal(t);
        result.trace.push_back({t, batch_loss, mean_bound, tau_after});
        if (on_iteration) on_iteration(result.trace.back(), theta);
    }

    result.theta = std::move(theta);
    result.tau = sched.tau;
    return result;
}

namespace {

struct RecallCounts {
    std::vector<long long> support;
    std::vector<long long> correct;

    explicit RecallCounts(int v)
        : support(static_cast<size_t>(v), 0), correct(static_cast<size_t>(v), 0) {}
    void tally(int label, int predicted) {
        ++support[static_cast<size_t>(label)];
        if (label == predicted) ++correct[static_cast<size_t>(label)];
    }
};

Vec recall_vector(const RecallCounts& c) {
    Vec r(static_cast<Eigen::Index>(c.support.size()));
    for (size_t k = 0; k < c.support.size(); ++k)
        r[static_cast<Eigen::Index>(k)] =
            c.support[k] > 0
                ? static_cast<double>(c.correct[k]) / static_cast<double>(c.support[k])
                : std::numeric_limits<double>::quiet_NaN();
    return r;
}

double mean_supported(const Vec& recall) {
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index k = 0; k < recall.size(); ++k) {
        if (!std::isnan(recall[k])) {
            sum += recall[k];
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

Metrics build_metrics(const RecallCounts& obj, const RecallCounts& pred,
                      long long correct_total, long long nodes_total,
                      std::vector<double> losses) {
    Metrics mtr;
    mtr.object_recall = recall_vector(obj);
    mtr.predicate_recall = recall_vector(pred);
    mtr.mean_recall_objects = mean_supported(mtr.object_recall);
    mtr.mean_recall_predicates = mean_supported(mtr.predicate_recall);
    double sum = 0.0;
    int n = 0;
    for (const Vec* r : {&mtr.object_recall, &mtr.predicate_recall})
        for (Eigen::Index k = 0; k < r->size(); ++k)
            if (!std::isnan((*r)[k])) {
                sum += (*r)[k];
                ++n;
            }
    mtr.mean_recall_combined = n > 0 ? sum / static_cast<double>(n) : 0.0;
    mtr.accuracy = nodes_total > 0
                       ? static_cast<double>(correct_total) / static_cast<double>(nodes_total)
                       : 0.0;
    mtr.loss_trace = std::move(losses);
    return mtr;
}

}  // namespace

EvalReport evaluate(const std::vector<SyntheticInstance>& dataset, const TaskConfig& task,
                    const ThetaParams& theta, const InferenceConfig& inf_cfg,
                    std::uint64_t seed, int workers) {
    struct NodeResult {
        int label = 0;
        bool is_object = false;
        int pred_posterior = 0;
        int pred_variational = 0;
        double bound = 0.0;
    };

    std::vector<MarginalScoreTable> scores(dataset.size());
    std::vector<NodeTask> tasks;
    std::vector<int> labels;
    for (size_t di = 0; di < dataset.size(); ++di) {
        const auto& inst = dataset[di];
        scores[di] = compute_scores(theta, inst);
        for (int q = 0; q < inst.graph.num_variable_nodes(); ++q) {
            const Vec* psi = q < inst.graph.num_objects()
                                 ? &scores[di].object_scores[static_cast<size_t>(q)]
                                 : &scores[di].predicate_scores[static_cast<size_t>(
                                       q - inst.graph.num_objects())];
            tasks.push_back({static_cast<int>(di), q, psi});
        }
    }

    std::vector<NodeResult> results(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), workers, [&](int k) {
        const NodeTask& nt = tasks[static_cast<size_t>(k)];
        const auto& inst = dataset[static_cast<size_t>(nt.instance_index)];
        Rng stream(derive_seed(seed, 0xe7a1, static_cast<std::uint64_t>(nt.instance_index),
                               static_cast<std::uint64_t>(nt.node_index)));
        const NodePosterior np = infer_posterior(*nt.psi, inf_cfg, stream);
        NodeResult r;
        r.is_object = nt.node_index < inst.graph.num_objects();
        r.label = r.is_object
                      ? inst.object_labels[static_cast<size_t>(nt.node_index)]
                      : inst.predicate_labels[static_cast<size_t>(
                            nt.node_index - inst.graph.num_objects())];
        r.pred_posterior = readout(np, ReadoutMode::Posterior);
        r.pred_variational = readout(np, ReadoutMode::Variational);
        r.bound = np.bound;
        results[static_cast<size_t>(k)] = r;
    });

    RecallCounts obj_post(task.v_o), pred_post(task.v_p);
    RecallCounts obj_var(task.v_o), pred_var(task.v_p);
    long long correct_post = 0, correct_var = 0;
    KahanSum bound_sum;
    for (const auto& r : results) {
        if (r.is_object) {
            obj_post.tally(r.label, r.pred_posterior);
            obj_var.tally(r.label, r.pred_variational);
        } else {
            pred_post.tally(r.label, r.pred_posterior);
            pred_var.tally(r.label, r.pred_variational);
        }
        correct_post += (r.pred_posterior == r.label);
        correct_var += (r.pred_variational == r.label);
        bound_sum.add(r.bound);
    }

    std::vector<double> losses;
    KahanSum loss_sum;
    for (size_t di = 0; di < dataset.size(); ++di) {
        const auto& inst = dataset[di];
        KahanSum inst_loss;
        for (int i = 0; i < inst.graph.num_objects(); ++i) {
            const Vec& psi = scores[di].object_scores[static_cast<size_t>(i)];
            inst_loss.add(logsumexp(psi) - psi[inst.object_labels[static_cast<size_t>(i)]]);
        }
        for (int j = 0; j < inst.graph.num_predicates(); ++j) {
            const Vec& psi = scores[di].predicate_scores[static_cast<size_t>(j)];
            inst_loss.add(logsumexp(psi) - psi[inst.predicate_labels[static_cast<size_t>(j)]]);
        }
        losses.push_back(inst_loss.value());
        loss_sum.add(inst_loss.value());
    }

    const auto nodes_total = static_cast<long long>(results.size());
    EvalReport report;
    report.posterior = build_metrics(obj_post, pred_post, correct_post, nodes_total, losses);
    report.variational = build_metrics(obj_var, pred_var, correct_var, nodes_total, losses);
    report.mean_bound =
        nodes_total > 0 ? bound_sum.value() / static_cast<double>(nodes_total) : 0.0;
    report.mean_loss =
        dataset.empty() ? 0.0 : loss_sum.value() / static_cast<double>(dataset.size());
    return report;
}

}  // namespace iwvi
