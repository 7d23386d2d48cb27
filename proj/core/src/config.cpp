#include "iwvi/config.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "iwvi/errors.hpp"

namespace iwvi {

namespace {

int to_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int x = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' needs an integer, got '" + value + "'");
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double x = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' needs a number, got '" + value + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const unsigned long long x = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return static_cast<std::uint64_t>(x);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' needs a non-negative integer, got '" + value +
                          "'");
    }
}

std::vector<int> to_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(to_int(key, item));
    }
    if (out.empty()) throw ConfigError("key '" + key + "' needs a comma-separated int list");
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "d") cfg.task.d = to_int(key, value);
    else if (key == "v_o") cfg.task.v_o = to_int(key, value);
    else if (key == "v_p") cfg.task.v_p = to_int(key, value);
    else if (key == "m_min") cfg.task.m_min = to_int(key, value);
    else if (key == "m_max") cfg.task.m_max = to_int(key, value);
    else if (key == "n_min") cfg.task.n_min = to_int(key, value);
    else if (key == "n_max") cfg.task.n_max = to_int(key, value);
    else if (key == "class_separation") cfg.task.class_separation = to_double(key, value);
    else if (key == "label_skew") cfg.task.label_skew = to_double(key, value);
    else if (key == "count") cfg.count = to_int(key, value);
    else if (key == "train_count") cfg.train_count = to_int(key, value);
    else if (key == "eval_count") cfg.eval_count = to_int(key, value);
    else if (key == "batch") cfg.learn.batch = to_int(key, value);
    else if (key == "iters") cfg.learn.iters = to_int(key, value);
    else if (key == "alpha") cfg.learn.alpha = to_double(key, value);
    else if (key == "samples_learn") cfg.learn.samples_learn = to_int(key, value);
    else if (key == "hidden") cfg.learn.hidden = to_int(key, value);
    else if (key == "tau0") cfg.learn.schedule.tau0 = to_double(key, value);
    else if (key == "tau_min") cfg.learn.schedule.tau_min = to_double(key, value);
    else if (key == "beta") cfg.learn.schedule.beta = to_double(key, value);
    else if (key == "workers") cfg.learn.workers = to_int(key, value);
    else if (key == "samples_infer") cfg.inf.samples_infer = to_int(key, value);
    else if (key == "tau") cfg.inf.tau = to_double(key, value);
    else if (key == "readout") {
        if (value == "posterior") cfg.inf.readout = ReadoutMode::Posterior;
        else if (value == "variational") cfg.inf.readout = ReadoutMode::Variational;
        else throw ConfigError("readout must be 'posterior' or 'variational'");
    } else if (key == "pi_init") {
        if (value == "uniform") cfg.inf.pi_init = PiInit::Uniform;
        else if (value == "random") cfg.inf.pi_init = PiInit::Random;
        else throw ConfigError("pi_init must be 'uniform' or 'random'");
    } else if (key == "noise") {
        if (value == "frozen") cfg.inf.noise = NoiseMode::Frozen;
        else if (value == "fresh") cfg.inf.noise = NoiseMode::Fresh;
        else throw ConfigError("noise must be 'frozen' or 'fresh'");
    } else if (key == "density") {
        if (value == "paper") cfg.inf.density = DensityMode::Paper;
        else if (value == "exact") cfg.inf.density = DensityMode::Exact;
        else throw ConfigError("density must be 'paper' or 'exact'");
    } else if (key == "emd_iters") cfg.inf.emd.max_iters = to_int(key, value);
    else if (key == "emd_gamma") cfg.inf.emd.gamma0 = to_double(key, value);
    else if (key == "emd_eps") cfg.inf.emd.epsilon = to_double(key, value);
    else if (key == "seed") cfg.seed = to_u64(key, value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "ablate_s") cfg.ablate_s = to_int_list(key, value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = to_int(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not key=value: '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key on config line " + std::to_string(lineno));
        apply_config_entry(cfg, key, value);
    }
    cfg.task.seed = cfg.seed;
    cfg.learn.seed = cfg.seed;
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return parse_config(f);
}

void RunConfig::validate() const {
    task.validate();
    learn.validate();
    if (count < 1) throw ConfigError("count must be >= 1");
    if (train_count < 0 || eval_count < 0)
        throw ConfigError("split counts must be non-negative");
    if ((train_count > 0) != (eval_count > 0))
        throw ConfigError("train_count and eval_count must be set together");
    if (inf.samples_infer < 1) throw ConfigError("samples_infer must be >= 1");
    if (!(inf.tau > 0.0)) throw ConfigError("tau must be positive");
    if (inf.emd.max_iters < 1) throw ConfigError("emd_iters must be >= 1");
    if (!(inf.emd.gamma0 > 0.0)) throw ConfigError("emd_gamma must be positive");
    if (!(inf.emd.epsilon > 0.0)) throw ConfigError("emd_eps must be positive");
    if (ablate_s.empty()) throw ConfigError("ablate_s must be non-empty");
    for (int s : ablate_s)
        if (s < 1) throw ConfigError("ablate_s entries must be >= 1");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
    if (out_dir.empty()) throw ConfigError("out must be non-empty");
}

namespace {

std::string fmt_double(double x) {
    std::ostringstream ss;
    ss << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
    return ss.str();
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "d",          "v_o",           "v_p",        "m_min",
        "m_max",      "n_min",         "n_max",      "class_separation",
        "label_skew", "count",         "train_count", "eval_count",
        "batch",      "iters",         "alpha",      "samples_learn",
        "hidden",     "tau0",          "tau_min",    "beta",
        "workers",    "samples_infer", "tau",        "readout",
        "pi_init",    "noise",         "density",    "emd_iters",
        "emd_gamma",  "emd_eps",       "seed",       "out",
        "ablate_s",   "checkpoint_every"};
    return keys;
}

std::string config_snapshot(const RunConfig& cfg) {
    std::ostringstream out;
    out << "d=" << cfg.task.d << '\n';
    out << "v_o=" << cfg.task.v_o << '\n';
    out << "v_p=" << cfg.task.v_p << '\n';
    out << "m_min=" << cfg.task.m_min << '\n';
    out << "m_max=" << cfg.task.m_max << '\n';
    out << "n_min=" << cfg.task.n_min << '\n';
    out << "n_max=" << cfg.task.n_max << '\n';
    out << "class_separation=" << fmt_double(cfg.task.class_separation) << '\n';
    out << "label_skew=" << fmt_double(cfg.task.label_skew) << '\n';
    out << "count=" << cfg.count << '\n';
    out << "train_count=" << cfg.train_count << '\n';
    out << "eval_count=" << cfg.eval_count << '\n';
    out << "batch=" << cfg.learn.batch << '\n';
    out << "iters=" << cfg.learn.iters << '\n';
    out << "alpha=" << fmt_double(cfg.learn.alpha) << '\n';
    out << "samples_learn=" << cfg.learn.samples_learn << '\n';
    out << "hidden=" << cfg.learn.hidden << '\n';
    out << "tau0=" << fmt_double(cfg.learn.schedule.tau0) << '\n';
    out << "tau_min=" << fmt_double(cfg.learn.schedule.tau_min) << '\n';
    out << "beta=" << fmt_double(cfg.learn.schedule.beta) << '\n';
    out << "workers=" << cfg.learn.workers << '\n';
    out << "samples_infer=" << cfg.inf.samples_infer << '\n';
    out << "tau=" << fmt_double(cfg.inf.tau) << '\n';
    out << "readout=" << (cfg.inf.readout == ReadoutMode::Posterior ? "posterior" : "variational")
        << '\n';
    out << "pi_init=" << (cfg.inf.pi_init == PiInit::Uniform ? "uniform" : "random") << '\n';
    out << "noise=" << (cfg.inf.noise == NoiseMode::Frozen ? "frozen" : "fresh") << '\n';
    out << "density=" << (cfg.inf.density == DensityMode::Paper ? "paper" : "exact") << '\n';
    out << "emd_iters=" << cfg.inf.emd.max_iters << '\n';
    out << "emd_gamma=" << fmt_double(cfg.inf.emd.gamma0) << '\n';
    out << "emd_eps=" << fmt_double(cfg.inf.emd.epsilon) << '\n';
    out << "seed=" << cfg.seed << '\n';
    out << "out=" << cfg.out_dir << '\n';
    out << "ablate_s=";
    for (size_t i = 0; i < cfg.ablate_s.size(); ++i) {
        if (i) out << ',';
        out << cfg.ablate_s[i];
    }
    out << '\n';
    out << "checkpoint_every=" << cfg.checkpoint_every << '\n';
    return out.str();
}

}  // namespace iwvi
