#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "iwvi/graph.hpp"
#include "iwvi/inference.hpp"
#include "iwvi/learning.hpp"

namespace iwvi {

// Flat key=value run configuration shared by every command. Unknown keys are
// rejected. See config_keys() for the full key list with defaults.
struct RunConfig {
    TaskConfig task;
    LearnConfig learn;
    InferenceConfig inf;
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    int count = 100;        // synth: instances in dataset.jsonl
    int train_count = 0;    // synth/ablate: if > 0 with eval_count, write a split
    int eval_count = 0;
    std::vector<int> ablate_s = {10, 30, 50};
    int checkpoint_every = 500;

    void validate() const;  // throws ConfigError
};

// Parses `key = value` lines ('#' comments, blank lines ignored). Starts from
// defaults and overrides; throws ConfigError on unknown keys or bad values.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::string& path);
// Applies one key=value pair.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Serialization of the exact effective config, one key=value per line,
// in the fixed key order (the snapshot embedded in emitted tables).
std::string config_snapshot(const RunConfig& cfg);

// All recognized keys in snapshot order.
const std::vector<std::string>& config_keys();

}  // namespace iwvi
