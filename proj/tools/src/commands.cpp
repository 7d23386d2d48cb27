#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "iwvi/audit.hpp"
#include "iwvi/bound.hpp"
#include "iwvi/errors.hpp"
#include "iwvi/inference.hpp"
#include "iwvi/learning.hpp"
#include "iwvi/nn.hpp"
#include "iwvi/sampler.hpp"
#include "iwvi/scores.hpp"

namespace iwvi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string hash_file_hex(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open file for hashing: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    const std::uint64_t h = fnv1a64(bytes);
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

// Every emitted table carries the effective config snapshot; the CSV gets it
// as comment lines, the JSON mirror as an object.
void write_table(const fs::path& dir, const Table& t, const RunConfig& cfg,
                 const std::string& dataset_hash) {
    std::ostringstream csv;
    csv << "# iwvi-table " << t.name << " 1\n";
    csv << "# config-snapshot-begin\n";
    std::istringstream snap(config_snapshot(cfg));
    std::string line;
    json cfg_json = json::object();
    while (std::getline(snap, line)) {
        const auto eq = line.find('=');
        const std::string key = line.substr(0, eq);
        // Runtime context, not statistical configuration: identical results
        // must serialize to identical bytes regardless of where they are
        // written or how many workers computed them.
        if (key == "out" || key == "workers") continue;
        csv << "# " << line << '\n';
        cfg_json[key] = line.substr(eq + 1);
    }
    csv << "# config-snapshot-end\n";
    csv << "# dataset_hash=" << (dataset_hash.empty() ? "none" : dataset_hash) << '\n';
    for (size_t c = 0; c < t.columns.size(); ++c) {
        if (c) csv << ',';
        csv << t.columns[c];
    }
    csv << '\n';
    for (const auto& row : t.rows) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) csv << ',';
            csv << row[c];
        }
        csv << '\n';
    }
    {
        std::ofstream f(dir / (t.name + ".csv"), std::ios::binary);
        if (!f) throw ConfigError("cannot write table: " + (dir / (t.name + ".csv")).string());
        f << csv.str();
    }

    json mirror;
    mirror["table"] = t.name;
    mirror["config"] = cfg_json;
    mirror["dataset_hash"] = dataset_hash.empty() ? "none" : dataset_hash;
    mirror["columns"] = t.columns;
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::object();
        for (size_t c = 0; c < row.size(); ++c) r[t.columns[c]] = row[c];
        rows.push_back(std::move(r));
    }
    mirror["rows"] = std::move(rows);
    {
        std::ofstream f(dir / (t.name + ".json"), std::ios::binary);
        if (!f) throw ConfigError("cannot write table: " + (dir / (t.name + ".json")).string());
        f << mirror.dump(2) << '\n';
    }
}

std::string joined_recalls(const Vec& recall) {
    std::string out;
    for (Eigen::Index k = 0; k < recall.size(); ++k) {
        if (k) out += ';';
        out += fmt_double(recall[k]);
    }
    return out;
}

fs::path ensure_out_dir(const RunConfig& cfg) {
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

int cmd_synth(const Invocation& inv) {
    const RunConfig& cfg = inv.cfg;
    cfg.validate();
    const fs::path dir = ensure_out_dir(cfg);

    if (cfg.train_count > 0) {
        const auto all = synth_dataset(cfg.task, cfg.train_count + cfg.eval_count);
        const std::vector<SyntheticInstance> train_split(all.begin(),
                                                         all.begin() + cfg.train_count);
        const std::vector<SyntheticInstance> eval_split(all.begin() + cfg.train_count,
                                                        all.end());
        write_dataset_file((dir / "train.jsonl").string(), cfg.task, train_split);
        write_dataset_file((dir / "eval.jsonl").string(), cfg.task, eval_split);
        std::cout << "wrote " << (dir / "train.jsonl").string() << " (" << cfg.train_count
                  << " instances)\n";
        std::cout << "wrote " << (dir / "eval.jsonl").string() << " (" << cfg.eval_count
                  << " instances)\n";
    } else {
        const auto data = synth_dataset(cfg.task, cfg.count);
        write_dataset_file((dir / "dataset.jsonl").string(), cfg.task, data);
        std::cout << "wrote " << (dir / "dataset.jsonl").string() << " (" << cfg.count
                  << " instances)\n";
    }
    return 0;
}

int cmd_train(const Invocation& inv) {
    const RunConfig& cfg = inv.cfg;
    if (inv.data_path.empty()) throw ConfigError("train needs --data <dataset.jsonl>");
    const LoadedDataset ds = read_dataset_file(inv.data_path);
    const std::string hash = hash_file_hex(inv.data_path);
    const fs::path dir = ensure_out_dir(cfg);
    const fs::path ckpt = dir / "checkpoint.iwvickpt";

    TrainCallback callback;
    if (cfg.checkpoint_every > 0) {
        callback = [&](const IterationRecord& rec, const ThetaParams& theta) {
            if (rec.t % cfg.checkpoint_every == 0)
                save_checkpoint_file(ckpt.string(), theta, rec.tau);
        };
    }

    const TrainResult res = train(ds.instances, ds.config, cfg.learn, cfg.inf, callback);
    save_checkpoint_file(ckpt.string(), res.theta, res.tau);

    Table t;
    t.name = "train_metrics";
    t.columns = {"t", "loss", "mean_bound", "tau"};
    for (const auto& rec : res.trace)
        t.rows.push_back({std::to_string(rec.t), fmt_double(rec.loss),
                          fmt_double(rec.mean_bound), fmt_double(rec.tau)});
    write_table(dir, t, cfg, hash);

    std::cout << "trained " << cfg.learn.iters << " iterations; final loss "
              << fmt_double(res.trace.back().loss) << "; checkpoint " << ckpt.string() << '\n';
    return 0;
}

namespace {

void append_metrics_row(Table& t, const std::string& readout_name, const Metrics& mtr,
                        double mean_loss, double mean_bound) {
    t.rows.push_back({readout_name, fmt_double(mtr.mean_recall_objects),
                      fmt_double(mtr.mean_recall_predicates),
                      fmt_double(mtr.mean_recall_combined), fmt_double(mtr.accuracy),
                      fmt_double(mean_loss), fmt_double(mean_bound),
                      joined_recalls(mtr.object_recall), joined_recalls(mtr.predicate_recall)});
}

}  // namespace

int cmd_eval(const Invocation& inv) {
    const RunConfig& cfg = inv.cfg;
    if (inv.data_path.empty()) throw ConfigError("eval needs --data <dataset.jsonl>");
    if (inv.ckpt_path.empty()) throw ConfigError("eval needs --ckpt <checkpoint.iwvickpt>");
    const LoadedDataset ds = read_dataset_file(inv.data_path);
    const Checkpoint ck = load_checkpoint_file(inv.ckpt_path);
    const std::string hash = hash_file_hex(inv.data_path);
    const fs::path dir = ensure_out_dir(cfg);

    InferenceConfig ic = cfg.inf;
    ic.tau = ck.tau;  // theta and tau are fixed at evaluation time
    const EvalReport report =
        evaluate(ds.instances, ds.config, ck.theta, ic, cfg.seed, cfg.learn.workers);

    Table t;
    t.name = "eval_metrics";
    t.columns = {"readout",  "mean_recall_objects", "mean_recall_predicates",
                 "mean_recall_combined", "accuracy", "mean_loss",
                 "mean_bound", "object_recall", "predicate_recall"};
    append_metrics_row(t, "posterior", report.posterior, report.mean_loss, report.mean_bound);
    append_metrics_row(t, "variational", report.variational, report.mean_loss,
                       report.mean_bound);
    write_table(dir, t, cfg, hash);

    std::cout << "eval: mean per-class recall (posterior) "
              << fmt_double(report.posterior.mean_recall_combined) << ", (variational) "
              << fmt_double(report.variational.mean_recall_combined) << '\n';
    return 0;
}

int cmd_ablate_samples(const Invocation& inv) {
    RunConfig cfg = inv.cfg;
    if (cfg.train_count <= 0) {
        cfg.train_count = 200;
        cfg.eval_count = 100;
    }
    cfg.validate();
    const fs::path dir = ensure_out_dir(cfg);

    const auto all = synth_dataset(cfg.task, cfg.train_count + cfg.eval_count);
    const std::vector<SyntheticInstance> train_split(all.begin(),
                                                     all.begin() + cfg.train_count);
    const std::vector<SyntheticInstance> eval_split(all.begin() + cfg.train_count, all.end());
    write_dataset_file((dir / "ablate_train.jsonl").string(), cfg.task, train_split);
    write_dataset_file((dir / "ablate_eval.jsonl").string(), cfg.task, eval_split);
    const std::string hash = hash_file_hex((dir / "ablate_eval.jsonl").string());

    const TrainResult trained = train(train_split, cfg.task, cfg.learn, cfg.inf);
    save_checkpoint_file((dir / "ablate_checkpoint.iwvickpt").string(), trained.theta,
                         trained.tau);

    // Per-node score vectors of the evaluation split, fixed across rows.
    struct NodeSlot {
        int instance_index = 0;
        int node_index = 0;
        Vec psi;
        int label = 0;
        bool is_object = false;
    };
    std::vector<NodeSlot> nodes;
    for (size_t di = 0; di < eval_split.size(); ++di) {
        const auto& inst = eval_split[di];
        const MarginalScoreTable scores = compute_scores(trained.theta, inst);
        for (int q = 0; q < inst.graph.num_variable_nodes(); ++q) {
            NodeSlot slot;
            slot.instance_index = static_cast<int>(di);
            slot.node_index = q;
            slot.is_object = q < inst.graph.num_objects();
            slot.psi = slot.is_object
                           ? scores.object_scores[static_cast<size_t>(q)]
                           : scores.predicate_scores[static_cast<size_t>(
                                 q - inst.graph.num_objects())];
            slot.label = slot.is_object
                             ? inst.object_labels[static_cast<size_t>(q)]
                             : inst.predicate_labels[static_cast<size_t>(
                                   q - inst.graph.num_objects())];
            nodes.push_back(std::move(slot));
        }
    }

    Table t;
    t.name = "ablation";
    t.columns = {"s",
                 "bound",
                 "bound_se",
                 "bound_insample",
                 "bound_diff_prev",
                 "bound_diff_se",
                 "readout",
                 "mean_recall_objects",
                 "mean_recall_predicates",
                 "mean_recall_combined",
                 "accuracy",
                 "mean_loss",
                 "tau"};

    std::vector<double> prev_heldout;
    for (const int s : cfg.ablate_s) {
        InferenceConfig ic = cfg.inf;
        ic.samples_infer = s;
        ic.tau = trained.tau;

        std::vector<double> heldout(nodes.size()), insample(nodes.size());
        std::vector<int> predicted(nodes.size());
        parallel_for(static_cast<int>(nodes.size()), cfg.learn.workers, [&](int k) {
            const NodeSlot& slot = nodes[static_cast<size_t>(k)];
            // The inference stream is row-independent, so smaller s consumes a
            // prefix of the same noise sequence (common random numbers).
            Rng stream(derive_seed(cfg.seed, 0xab1a7e,
                                   static_cast<std::uint64_t>(slot.instance_index),
                                   static_cast<std::uint64_t>(slot.node_index)));
            const NodePosterior np = infer_posterior(slot.psi, ic, stream);
            insample[static_cast<size_t>(k)] = np.bound;
            predicted[static_cast<size_t>(k)] = readout(np, ic.readout);
            // Generalization estimate: the optimized pi evaluated on noise the
            // optimizer never saw, prefix-common across rows.
            Rng held(derive_seed(cfg.seed, 0xeb0d,
                                 static_cast<std::uint64_t>(slot.instance_index),
                                 static_cast<std::uint64_t>(slot.node_index)));
            const Mat noises =
                sample_gumbel_matrix(held, s, static_cast<int>(slot.psi.size()));
            heldout[static_cast<size_t>(k)] =
                estimate_and_grad(slot.psi, np.pi_star, noises, ic.tau, ic.density).first;
        });

        KahanSum hsum, isum;
        for (double x : heldout) hsum.add(x);
        for (double x : insample) isum.add(x);
        const double n = static_cast<double>(nodes.size());
        const double hmean = hsum.value() / n;
        double hvar = 0.0;
        for (double x : heldout) hvar += (x - hmean) * (x - hmean);
        const double hse = nodes.size() > 1 ? std::sqrt(hvar / (n - 1.0) / n) : 0.0;

        std::string diff_mean = "na", diff_se = "na";
        if (!prev_heldout.empty()) {
            KahanSum dsum;
            for (size_t k = 0; k < heldout.size(); ++k) dsum.add(heldout[k] - prev_heldout[k]);
            const double dmean = dsum.value() / n;
            double dvar = 0.0;
            for (size_t k = 0; k < heldout.size(); ++k) {
                const double d = heldout[k] - prev_heldout[k] - dmean;
                dvar += d * d;
            }
            diff_mean = fmt_double(dmean);
            diff_se = fmt_double(nodes.size() > 1 ? std::sqrt(dvar / (n - 1.0) / n) : 0.0);
        }
        prev_heldout = heldout;

        std::vector<long long> obj_support(static_cast<size_t>(cfg.task.v_o), 0),
            obj_correct(static_cast<size_t>(cfg.task.v_o), 0),
            pred_support(static_cast<size_t>(cfg.task.v_p), 0),
            pred_correct(static_cast<size_t>(cfg.task.v_p), 0);
        long long correct = 0;
        for (size_t k = 0; k < nodes.size(); ++k) {
            const NodeSlot& slot = nodes[k];
            auto& support = slot.is_object ? obj_support : pred_support;
            auto& good = slot.is_object ? obj_correct : pred_correct;
            ++support[static_cast<size_t>(slot.label)];
            if (predicted[k] == slot.label) {
                ++good[static_cast<size_t>(slot.label)];
                ++correct;
            }
        }
        auto mean_recall = [](const std::vector<long long>& sup,
                              const std::vector<long long>& cor) {
            double sum = 0.0;
            int cnt = 0;
            for (size_t k = 0; k < sup.size(); ++k)
                if (sup[k] > 0) {
                    sum += static_cast<double>(cor[k]) / static_cast<double>(sup[k]);
                    ++cnt;
                }
            return cnt > 0 ? sum / cnt : 0.0;
        };
        const double mro = mean_recall(obj_support, obj_correct);
        const double mrp = mean_recall(pred_support, pred_correct);
        double combined_sum = 0.0;
        int combined_cnt = 0;
        for (size_t k = 0; k < obj_support.size(); ++k)
            if (obj_support[k] > 0) {
                combined_sum +=
                    static_cast<double>(obj_correct[k]) / static_cast<double>(obj_support[k]);
                ++combined_cnt;
            }
        for (size_t k = 0; k < pred_support.size(); ++k)
            if (pred_support[k] > 0) {
                combined_sum += static_cast<double>(pred_correct[k]) /
                                static_cast<double>(pred_support[k]);
                ++combined_cnt;
            }

        KahanSum loss_sum;
        for (const auto& slot : nodes)
            loss_sum.add(logsumexp(slot.psi) - slot.psi[slot.label]);

        t.rows.push_back(
            {std::to_string(s), fmt_double(hmean), fmt_double(hse),
             fmt_double(isum.value() / n), diff_mean, diff_se,
             cfg.inf.readout == ReadoutMode::Posterior ? "posterior" : "variational",
             fmt_double(mro), fmt_double(mrp),
             fmt_double(combined_cnt > 0 ? combined_sum / combined_cnt : 0.0),
             fmt_double(static_cast<double>(correct) / n),
             fmt_double(loss_sum.value() / static_cast<double>(eval_split.size())),
             fmt_double(trained.tau)});
    }

    write_table(dir, t, cfg, hash);
    std::cout << "ablation over " << cfg.ablate_s.size() << " sample counts written to "
              << (dir / "ablation.csv").string() << '\n';
    return 0;
}

int cmd_audit(const Invocation& inv, bool inject_density_bug) {
    const RunConfig& cfg = inv.cfg;
    if (inject_density_bug) set_log_density_constant_scale(1.05);
    std::vector<AuditCheck> checks;
    try {
        checks = run_audit(cfg.seed);
    } catch (...) {
        set_log_density_constant_scale(1.0);
        throw;
    }
    set_log_density_constant_scale(1.0);

    const fs::path dir = ensure_out_dir(cfg);
    Table t;
    t.name = "audit";
    t.columns = {"name", "passed", "detail"};
    bool all_passed = true;
    for (const auto& check : checks) {
        all_passed = all_passed && check.passed;
        std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name << ": "
                  << check.detail << '\n';
        t.rows.push_back({check.name, check.passed ? "true" : "false", check.detail});
    }
    write_table(dir, t, cfg, "");
    std::cout << (all_passed ? "audit ok" : "audit FAILED") << " (" << checks.size()
              << " checks)\n";
    return all_passed ? 0 : 1;
}

int cmd_report(const Invocation& inv) {
    const fs::path dir(inv.cfg.out_dir);
    bool found = false;

    const auto load = [&](const char* name) -> json {
        std::ifstream f(dir / name);
        if (!f) return json();
        json j;
        f >> j;
        return j;
    };

    if (const json j = load("train_metrics.json"); !j.is_null()) {
        found = true;
        const auto& rows = j.at("rows");
        std::cout << "train: " << rows.size() << " iterations";
        if (!rows.empty()) {
            std::cout << ", loss " << rows.front().at("loss").get<std::string>() << " -> "
                      << rows.back().at("loss").get<std::string>();
        }
        std::cout << '\n';
    }
    if (const json j = load("eval_metrics.json"); !j.is_null()) {
        found = true;
        for (const auto& row : j.at("rows"))
            std::cout << "eval (" << row.at("readout").get<std::string>()
                      << "): mean per-class recall "
                      << row.at("mean_recall_combined").get<std::string>() << ", accuracy "
                      << row.at("accuracy").get<std::string>() << '\n';
    }
    if (const json j = load("ablation.json"); !j.is_null()) {
        found = true;
        for (const auto& row : j.at("rows"))
            std::cout << "ablation s=" << row.at("s").get<std::string>() << ": bound "
                      << row.at("bound").get<std::string>() << ", mean per-class recall "
                      << row.at("mean_recall_combined").get<std::string>() << '\n';
    }
    if (const json j = load("audit.json"); !j.is_null()) {
        found = true;
        int passed = 0, total = 0;
        for (const auto& row : j.at("rows")) {
            ++total;
            passed += row.at("passed").get<std::string>() == "true";
        }
        std::cout << "audit: " << passed << "/" << total << " checks passed\n";
    }

    if (!found) {
        std::cerr << "nothing to report in " << dir.string() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace iwvi::cli
