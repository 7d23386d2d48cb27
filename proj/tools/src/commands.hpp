#pragma once

#include <string>

#include "iwvi/config.hpp"

namespace iwvi::cli {

// Resolved invocation: config plus command-line overrides.
struct Invocation {
    RunConfig cfg;
    std::string data_path;  // train/eval input dataset
    std::string ckpt_path;  // eval input checkpoint
};

// Each returns a process exit code (0 ok, 1 audit failure, 2 usage/config,
// 3 numerical failure); they throw and main maps exceptions instead where
// noted in the implementations.
int cmd_synth(const Invocation& inv);
int cmd_train(const Invocation& inv);
int cmd_eval(const Invocation& inv);
int cmd_ablate_samples(const Invocation& inv);
int cmd_audit(const Invocation& inv, bool inject_density_bug);
int cmd_report(const Invocation& inv);

}  // namespace iwvi::cli
