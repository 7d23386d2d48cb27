#include "iwvi/audit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iwvi/bound.hpp"
#include "iwvi/emd.hpp"
#include "iwvi/errors.hpp"
#include "iwvi/graph.hpp"
#include "iwvi/inference.hpp"
#include "iwvi/learning.hpp"
#include "iwvi/nn.hpp"
#include "iwvi/oracle.hpp"
#include "iwvi/sampler.hpp"
#include "iwvi/scores.hpp"

namespace iwvi {

namespace {

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(3);
    ss << std::scientific << x;
    return ss.str();
}

Vec random_vec(Rng& rng, int v, double scale) {
    Vec x(v);
    for (int i = 0; i < v; ++i) x[i] = (2.0 * rng.uniform01() - 1.0) * scale;
    return x;
}

SimplexVector random_simplex(Rng& rng, int v) {
    Vec pi(v);
    double total = 0.0;
    for (int i = 0; i < v; ++i) {
        pi[i] = 0.05 + rng.uniform01();
        total += pi[i];
    }
    return pi / total;
}

double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

AuditCheck check_elbo_single_sample(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int v = 2 + static_cast<int>(rng.below(7));
        const Vec psi = random_vec(rng, v, 3.0);
        const SimplexVector pi = random_simplex(rng, v);
        const GumbelNoise sigma = sample_gumbel(rng, v);
        const double tau = 0.4 + rng.uniform01();
        const BoundEstimate est = estimate(psi, pi, {sigma}, tau);
        const RelaxedSample z = reparameterize(pi, sigma, tau);
        const double lw = log_importance_weight(psi, pi, z, DensityMode::Paper, tau);
        worst = std::max(worst, std::abs(est.value - lw));
    }
    return {"elbo_single_sample", worst == 0.0, "max abs diff " + fmt(worst)};
}

AuditCheck check_zero_variance(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int v = 2 + static_cast<int>(rng.below(7));
        const Vec psi = random_vec(rng, v, 3.0);
        const SimplexVector pi = softmax(psi);
        const double lse = logsumexp(psi);
        const BoundEstimate est = estimate_categorical_exact(psi, pi, rng, 7);
        worst = std::max(worst, std::abs(est.value - lse) / std::max(1.0, std::abs(lse)));
    }
    return {"zero_variance_identity", worst <= 1e-12, "max rel diff " + fmt(worst)};
}

AuditCheck check_jensen(Rng& rng) {
    for (int rep = 0; rep < 30; ++rep) {
        const int v = 2 + static_cast<int>(rng.below(7));
        const Vec psi = random_vec(rng, v, 3.0);
        const SimplexVector pi = random_simplex(rng, v);
        const double lse = logsumexp(psi);
        const int reps = 50;
        std::vector<double> values;
        for (int r = 0; r < reps; ++r)
            values.push_back(estimate_categorical_exact(psi, pi, rng, 1000).value);
        double mean = 0.0;
        for (double x : values) mean += x;
        mean /= reps;
        double var = 0.0;
        for (double x : values) var += (x - mean) * (x - mean);
        const double se = std::sqrt(var / (reps - 1.0) / reps);
        if (mean > lse + 3.0 * se)
            return {"jensen_upper_bound", false,
                    "mean " + fmt(mean) + " exceeds lse " + fmt(lse) + " + 3se " + fmt(se)};
    }
    return {"jensen_upper_bound", true, "30 score vectors within 3 standard errors"};
}

AuditCheck check_gumbel_max(Rng& rng) {
    SimplexVector pi(3);
    pi << 0.7, 0.2, 0.1;
    const int draws = 10000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < draws; ++i) {
        const GumbelNoise sigma = sample_gumbel(rng, 3);
        const RelaxedSample z1 = reparameterize(pi, sigma, 1.0);
        const RelaxedSample z2 = reparameterize(pi, sigma, 0.1);
        const RelaxedSample z3 = reparameterize(pi, sigma, 0.01);
        const int a1 = argmax_lowest(z1);
        if (a1 != argmax_lowest(z2) || a1 != argmax_lowest(z3))
            return {"gumbel_max_exactness", false, "argmax changed with temperature"};
        ++counts[static_cast<size_t>(a1)];
    }
    for (int k = 0; k < 3; ++k) {
        const double p = pi[k];
        const double sigma_bin = std::sqrt(p * (1.0 - p) * draws);
        const double dev = std::abs(counts[static_cast<size_t>(k)] - p * draws);
        if (dev > 3.0 * sigma_bin)
            return {"gumbel_max_exactness", false,
                    "class " + std::to_string(k) + " off by " + fmt(dev / sigma_bin) + " sigma"};
    }
    return {"gumbel_max_exactness", true, "frequencies within 3 sigma, argmax tau-invariant"};
}

AuditCheck check_grad_pi_fd(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int v = 2 + static_cast<int>(rng.below(5));
        const Vec psi = random_vec(rng, v, 2.0);
        const SimplexVector pi = random_simplex(rng, v);
        const double tau = 0.5 + rng.uniform01();
        std::vector<GumbelNoise> noises;
        for (int j = 0; j < 10; ++j) noises.push_back(sample_gumbel(rng, v));
        const Vec grad = grad_pi(psi, pi, noises, tau);
        const double h = 1e-6;
        for (int k = 0; k < v; ++k) {
            Vec hi = pi, lo = pi;
            hi[k] += h;
            lo[k] -= h;
            const double fd = (estimate(psi, hi, noises, tau).value -
                               estimate(psi, lo, noises, tau).value) /
                              (2.0 * h);
            worst = std::max(worst, rel_err(grad[k], fd));
        }
    }
    return {"bound_gradient_fd", worst <= 1e-4, "max rel err " + fmt(worst)};
}

AuditCheck check_emd(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const int v = 2 + static_cast<int>(rng.below(5));
        const Vec a = random_vec(rng, v, 2.0);
        const Objective entropic = [&](const SimplexVector& pi) {
            double value = 0.0;
            Vec grad(pi.size());
            for (Eigen::Index k = 0; k < pi.size(); ++k) {
                const double p = std::max(pi[k], 1e-12);
                value += a[k] * p - p * std::log(p);
                grad[k] = a[k] - std::log(p) - 1.0;
            }
            return std::make_pair(value, grad);
        };
        EmdConfig cfg;
        cfg.max_iters = 500;
        cfg.epsilon = 1e-10;
        const EmdResult res = maximize(entropic, uniform_simplex(v), cfg);
        worst = std::max(worst, (res.pi_star - softmax(a)).cwiseAbs().sum());
    }
    return {"emd_closed_form", worst <= 1e-3, "max l1 distance " + fmt(worst)};
}

AuditCheck check_elimination(Rng& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const int m = 2 + static_cast<int>(rng.below(2));
        const int n = static_cast<int>(rng.below(3));
        const int v_o = 2 + static_cast<int>(rng.below(3));
        const int v_p = 2 + static_cast<int>(rng.below(2));
        std::vector<std::pair<int, int>> endpoints;
        for (int j = 0; j < n; ++j) {
            const int s = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
            int o = static_cast<int>(rng.below(static_cast<std::uint64_t>(m - 1)));
            if (o >= s) ++o;
            endpoints.emplace_back(s, o);
        }
        std::vector<std::pair<int, int>> pairs;
        if (m >= 2 && rng.uniform01() < 0.5) pairs.emplace_back(0, 1);
        const SceneGraph g = build_graph(m, n, endpoints, pairs);
        const PotentialTables tables = random_tables(g, v_o, v_p, rng);
        const ExactSummary summary = exact_joint(tables, g);
        for (int q = 0; q < g.num_variable_nodes(); ++q) {
            const Vec ms = marginal_score_explicit(tables, g, g.node_at(q));
            worst = std::max(worst, std::abs(logsumexp(ms) - summary.log_partition));
            const Vec marg = softmax(ms);
            worst = std::max(
                worst,
                (marg - summary.marginals[static_cast<size_t>(q)]).cwiseAbs().maxCoeff());
        }
    }
    return {"elimination_vs_enumeration", worst <= 1e-9, "max deviation " + fmt(worst)};
}

AuditCheck check_shift_cancellation(Rng& rng) {
    for (int rep = 0; rep < 20; ++rep) {
        const int v = 2 + static_cast<int>(rng.below(7));
        const Vec psi = random_vec(rng, v, 4.0);
        NodePosterior base;
        base.pi_star = uniform_simplex(v);
        int first = -1;
        Vec first_post;
        for (const double shift : {-10.0, 0.0, 10.0}) {
            base.bound = shift;
            base.phi = surrogate_logit(psi, shift);
            base.log_post = log_posterior(base.phi);
            const int label = readout(base, ReadoutMode::Posterior);
            if (first < 0) {
                first = label;
                first_post = base.log_post;
            } else if (label != first ||
                       (base.log_post - first_post).cwiseAbs().maxCoeff() > 1e-12) {
                return {"shift_cancellation", false, "readout changed with the bound shift"};
            }
        }
    }
    return {"shift_cancellation", true, "posterior identical for shifts -10/0/10"};
}

AuditCheck check_grad_theta_fd(Rng& rng) {
    TaskConfig task;
    task.d = 3;
    task.v_o = 3;
    task.v_p = 2;
    task.m_min = 2;
    task.m_max = 3;
    task.n_min = 1;
    task.n_max = 2;
    task.seed = rng.next();
    const auto data = synth_dataset(task, 2);

    double worst = 0.0;
    for (const auto& inst : data) {
        Rng init(rng.next());
        ThetaParams theta = make_theta(task.d, task.v_o, task.v_p, 4, init);
        const ThetaGrads grads = grad_theta(inst, theta);
        const double h = 1e-6;
        Mlp* nets[] = {&theta.h_o, &theta.h_p, &theta.g_op, &theta.g_oo,
                       &theta.g_og, &theta.g_po, &theta.g_pg};
        const MlpGrads* gnets[] = {&grads.h_o, &grads.h_p, &grads.g_op, &grads.g_oo,
                                   &grads.g_og, &grads.g_po, &grads.g_pg};
        auto loss_at = [&]() {
            double loss = 0.0;
            grad_theta(inst, theta, &loss);
            return loss;
        };
        for (int nidx = 0; nidx < 7; ++nidx) {
            Mlp& net = *nets[nidx];
            for (size_t l = 0; l < net.weights.size(); ++l) {
                for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r)
                    for (Eigen::Index c2 = 0; c2 < net.weights[l].cols(); ++c2) {
                        const double saved = net.weights[l](r, c2);
                        net.weights[l](r, c2) = saved + h;
                        const double up = loss_at();
                        net.weights[l](r, c2) = saved - h;
                        const double dn = loss_at();
                        net.weights[l](r, c2) = saved;
                        worst = std::max(
                            worst, rel_err(gnets[nidx]->dW[l](r, c2), (up - dn) / (2.0 * h)));
                    }
                for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
                    const double saved = net.biases[l][r];
                    net.biases[l][r] = saved + h;
                    const double up = loss_at();
                    net.biases[l][r] = saved - h;
                    const double dn = loss_at();
                    net.biases[l][r] = saved;
                    worst =
                        std::max(worst, rel_err(gnets[nidx]->db[l][r], (up - dn) / (2.0 * h)));
                }
            }
        }
    }
    return {"theta_gradient_fd", worst <= 1e-4, "max rel err " + fmt(worst)};
}

AuditCheck check_map_fuzz(Rng& rng) {
    const SceneGraph g = build_graph(3, 2, {{0, 1}, {1, 2}}, {{0, 2}});
    const PotentialTables tables = random_tables(g, 3, 3, rng);
    const std::vector<int> best = exact_map(tables, g);
    const double best_score = joint_log_score(tables, g, best);
    for (int i = 0; i < 2000; ++i) {
        std::vector<int> z(5);
        for (int q = 0; q < 5; ++q) z[static_cast<size_t>(q)] = static_cast<int>(rng.below(3));
        if (joint_log_score(tables, g, z) > best_score)
            return {"map_beats_fuzz", false, "random labeling beat the exact argmax"};
    }
    return {"map_beats_fuzz", true, "argmax dominates 2000 random labelings"};
}

}  // namespace

std::vector<AuditCheck> run_audit(std::uint64_t seed) {
    std::vector<AuditCheck> checks;
    Rng rng(derive_seed(seed, 0xa0d17));
    checks.push_back(check_elbo_single_sample(rng));
    checks.push_back(check_zero_variance(rng));
    checks.push_back(check_jensen(rng));
    checks.push_back(check_gumbel_max(rng));
    checks.push_back(check_grad_pi_fd(rng));
    checks.push_back(check_emd(rng));
    checks.push_back(check_elimination(rng));
    checks.push_back(check_shift_cancellation(rng));
    checks.push_back(check_grad_theta_fd(rng));
    checks.push_back(check_map_fuzz(rng));
    return checks;
}

}  // namespace iwvi
