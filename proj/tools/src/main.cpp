#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "iwvi/errors.hpp"

namespace {

using iwvi::cli::Invocation;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    int workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "key=value config file");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--workers", flags.workers, "worker thread count");
}

// Precedence for the output directory: --out, then IWVI_OUT, then the config
// file, then the built-in default.
Invocation resolve(const CommonFlags& flags) {
    Invocation inv;
    if (!flags.config_path.empty()) inv.cfg = iwvi::parse_config_file(flags.config_path);
    if (const char* env = std::getenv("IWVI_OUT"); env && *env) inv.cfg.out_dir = env;
    if (!flags.out_dir.empty()) inv.cfg.out_dir = flags.out_dir;
    if (flags.seed >= 0) {
        inv.cfg.seed = static_cast<std::uint64_t>(flags.seed);
        inv.cfg.task.seed = inv.cfg.seed;
        inv.cfg.learn.seed = inv.cfg.seed;
    }
    if (flags.workers > 0) inv.cfg.learn.workers = flags.workers;
    return inv;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"importance-weighted variational inference for scene-graph labeling"};
    app.require_subcommand(1);

    CommonFlags synth_flags, train_flags, eval_flags, ablate_flags, audit_flags, report_flags;
    std::string train_data, eval_data, eval_ckpt;
    bool inject_density_bug = false;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth, synth_flags);

    CLI::App* train = app.add_subcommand("train", "fit net parameters on a dataset");
    add_common(train, train_flags);
    train->add_option("--data", train_data, "training dataset (.jsonl)")->required();

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(eval, eval_flags);
    eval->add_option("--data", eval_data, "evaluation dataset (.jsonl)")->required();
    eval->add_option("--ckpt", eval_ckpt, "checkpoint (.iwvickpt)")->required();

    CLI::App* ablate = app.add_subcommand("ablate-samples",
                                          "sweep the inference sample count");
    add_common(ablate, ablate_flags);

    CLI::App* audit = app.add_subcommand("audit", "run built-in correctness checks");
    add_common(audit, audit_flags);
    audit->add_flag("--inject-density-bug", inject_density_bug,
                    "perturb the density constant to prove the audit can fail")
        ->group("");  // hidden

    CLI::App* report = app.add_subcommand("report", "summarize results in the output dir");
    add_common(report, report_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) return iwvi::cli::cmd_synth(resolve(synth_flags));
        if (train->parsed()) {
            Invocation inv = resolve(train_flags);
            inv.data_path = train_data;
            return iwvi::cli::cmd_train(inv);
        }
        if (eval->parsed()) {
            Invocation inv = resolve(eval_flags);
            inv.data_path = eval_data;
            inv.ckpt_path = eval_ckpt;
            return iwvi::cli::cmd_eval(inv);
        }
        if (ablate->parsed()) return iwvi::cli::cmd_ablate_samples(resolve(ablate_flags));
        if (audit->parsed())
            return iwvi::cli::cmd_audit(resolve(audit_flags), inject_density_bug);
        if (report->parsed()) return iwvi::cli::cmd_report(resolve(report_flags));
    } catch (const iwvi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const iwvi::TopologyError& e) {
        std::cerr << "topology error: " << e.what() << '\n';
        return 2;
    } catch (const iwvi::DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << '\n';
        return 2;
    } catch (const iwvi::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << '\n';
        return 2;
    } catch (const iwvi::OptimizerError& e) {
        std::cerr << "optimizer error: " << e.what() << '\n';
        return 3;
    } catch (const iwvi::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
