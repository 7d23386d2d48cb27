#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "iwvi/graph.hpp"
#include "iwvi/inference.hpp"
#include "iwvi/nn.hpp"
#include "iwvi/numerics.hpp"

namespace iwvi {

struct LearnConfig {
    int batch = 1;  // instances per iteration
    int iters = 200;
    double alpha = 0.05;
    int samples_learn = 5000;
    int hidden = 64;
    TemperatureSchedule schedule;
    std::uint64_t seed = 42;
    int workers = 1;

    void validate() const;  // throws ConfigError
};

struct Metrics {
    double mean_recall_objects = 0.0;
    double mean_recall_predicates = 0.0;
    double mean_recall_combined = 0.0;
    double accuracy = 0.0;
    Vec object_recall;     // per class; NaN where the class has no support
    Vec predicate_recall;  // per class; NaN where the class has no support
    std::vector<double> loss_trace;
};

// Negative true-label log posterior summed over the nodes of one instance.
double cross_entropy(const std::vector<Vec>& log_posteriors, const std::vector<int>& labels);

// Gradient of the instance cross-entropy with respect to every net. The
// surrogate-logit shift cancels in the normalized posterior, so the seed at
// each node is softmax(psi) - onehot(label), backpropagated through every
// net contributing to that psi.
ThetaGrads grad_theta(const SyntheticInstance& inst, const ThetaParams& theta,
                      double* loss_out = nullptr);

struct IterationRecord {
    int t = 0;
    double loss = 0.0;
    double mean_bound = 0.0;  // mean per-node L_s over the batch
    double tau = 0.0;
};

struct TrainResult {
    ThetaParams theta;
    double tau = 0.0;
    std::vector<IterationRecord> trace;
};

// Called after each iteration; used for periodic checkpointing.
using TrainCallback = std::function<void(const IterationRecord&, const ThetaParams&)>;

// Full training loop: per iteration, score the batch, run per-node inference
// at samples_learn, update theta by SGD on the cross-entropy, anneal tau.
// Deterministic given cfg.seed and independent of cfg.workers. Throws
// NumericalError on a non-finite loss.
TrainResult train(const std::vector<SyntheticInstance>& dataset, const TaskConfig& task,
                  const LearnConfig& cfg, const InferenceConfig& inf_cfg,
                  const TrainCallback& on_iteration = nullptr);

struct EvalReport {
    Metrics posterior;    // metrics under the posterior readout
    Metrics variational;  // metrics under the variational readout
    double mean_bound = 0.0;
    double mean_loss = 0.0;
};

// Inference-only pass over the dataset (no parameter updates, fixed tau from
// inf_cfg); deterministic given seed and independent of workers.
EvalReport evaluate(const std::vector<SyntheticInstance>& dataset, const TaskConfig& task,
                    const ThetaParams& theta, const InferenceConfig& inf_cfg,
                    std::uint64_t seed, int workers = 1);

}  // namespace iwvi
