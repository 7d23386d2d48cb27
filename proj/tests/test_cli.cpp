#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli() {
    const char* path = std::getenv("IWVI_CLI");
    REQUIRE(path != nullptr);
    return path;
}

int run(const std::string& args, const std::string& capture = "") {
    std::string cmd = cli() + " " + args;
    if (!capture.empty()) cmd += " > " + capture + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(bool(f));
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void put(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p);
    f << text;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("cli_scratch") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
};

const std::string kSmallTask =
    "d = 3\n"
    "v_o = 3\n"
    "v_p = 2\n"
    "m_min = 2\n"
    "m_max = 3\n"
    "n_min = 1\n"
    "n_max = 2\n"
    "class_separation = 2.0\n";

const std::string kFastLearn =
    "iters = 3\n"
    "samples_learn = 4\n"
    "samples_infer = 6\n"
    "emd_iters = 10\n"
    "hidden = 4\n"
    "batch = 2\n";

}  // namespace

TEST_CASE("synth writes the dataset with a header line") {
    TempDir t("synth");
    put(t.path / "cfg", kSmallTask + "count = 5\n");
    const int rc = run("synth --config " + (t.path / "cfg").string() + " --out " +
                       (t.path / "out").string());
    CHECK(rc == 0);
    const std::string data = slurp(t.path / "out" / "dataset.jsonl");
    int lines = 0;
    for (char c : data) lines += c == '\n';
    CHECK(lines == 6);

    const int rc2 = run("synth --config " + (t.path / "cfg").string() + " --out " +
                        (t.path / "out2").string());
    CHECK(rc2 == 0);
    CHECK(slurp(t.path / "out2" / "dataset.jsonl") == data);
}

TEST_CASE("synth rejects a negative count") {
    TempDir t("synth_bad");
    put(t.path / "cfg", "count = -2\n");
    CHECK(run("synth --config " + (t.path / "cfg").string() + " --out " +
                  (t.path / "out").string(),
              (t.path / "log").string()) == 2);
}

TEST_CASE("usage errors exit with code 2") {
    TempDir t("usage");
    CHECK(run("train --out " + (t.path / "out").string(), (t.path / "a").string()) == 2);
    CHECK(run("train --data " + (t.path / "missing.jsonl").string() + " --out " +
                  (t.path / "out").string(),
              (t.path / "b").string()) == 2);
    CHECK(run("no-such-command", (t.path / "c").string()) == 2);
    CHECK(run("synth --no-such-flag", (t.path / "d").string()) == 2);
    CHECK(run("eval --data x.jsonl", (t.path / "e").string()) == 2);  // missing --ckpt
    CHECK(run("report --out " + (t.path / "empty").string(), (t.path / "f").string()) == 2);
}

TEST_CASE("train, eval and report round trip") {
    TempDir t("train");
    put(t.path / "cfg",
        kSmallTask + kFastLearn + "train_count = 4\neval_count = 3\nseed = 11\n");
    const std::string out = (t.path / "out").string();
    REQUIRE(run("synth --config " + (t.path / "cfg").string() + " --out " + out) == 0);
    REQUIRE(fs::exists(t.path / "out" / "train.jsonl"));
    REQUIRE(fs::exists(t.path / "out" / "eval.jsonl"));

    REQUIRE(run("train --config " + (t.path / "cfg").string() + " --out " + out +
                " --data " + out + "/train.jsonl") == 0);
    CHECK(fs::exists(t.path / "out" / "checkpoint.iwvickpt"));
    CHECK(fs::exists(t.path / "out" / "train_metrics.csv"));
    CHECK(fs::exists(t.path / "out" / "train_metrics.json"));

    const std::string metrics = slurp(t.path / "out" / "train_metrics.csv");
    CHECK(metrics.find("# iwvi-table train_metrics 1") == 0);
    CHECK(metrics.find("# config-snapshot-begin") != std::string::npos);
    CHECK(metrics.find("# dataset_hash=") != std::string::npos);
    CHECK(metrics.find("t,loss,mean_bound,tau") != std::string::npos);

    REQUIRE(run("eval --config " + (t.path / "cfg").string() + " --out " + out +
                " --data " + out + "/eval.jsonl --ckpt " + out +
                "/checkpoint.iwvickpt") == 0);
    CHECK(fs::exists(t.path / "out" / "eval_metrics.csv"));
    const std::string em = slurp(t.path / "out" / "eval_metrics.csv");
    CHECK(em.find("posterior") != std::string::npos);
    CHECK(em.find("variational") != std::string::npos);

    REQUIRE(run("report --out " + out, (t.path / "report.txt").string()) == 0);
    const std::string rep = slurp(t.path / "report.txt");
    CHECK(rep.find("train:") != std::string::npos);
    CHECK(rep.find("eval (posterior)") != std::string::npos);
}

TEST_CASE("rerun with the same seed is byte-identical; alpha=0 keeps theta random") {
    TempDir t("zerostep");
    put(t.path / "cfg",
        kSmallTask + kFastLearn + "alpha = 0\ntrain_count = 4\neval_count = 3\nseed = 3\n");
    const std::string cfg = (t.path / "cfg").string();

    for (const std::string out : {(t.path / "a").string(), (t.path / "b").string()}) {
        REQUIRE(run("synth --config " + cfg + " --out " + out) == 0);
        REQUIRE(run("train --config " + cfg + " --out " + out + " --data " + out +
                    "/train.jsonl") == 0);
        REQUIRE(run("eval --config " + cfg + " --out " + out + " --data " + out +
                    "/eval.jsonl --ckpt " + out + "/checkpoint.iwvickpt") == 0);
    }
    // alpha = 0 leaves theta at its seeded initialization, so two independent
    // runs must agree byte for byte on every artifact.
    CHECK(slurp(t.path / "a" / "checkpoint.iwvickpt") ==
          slurp(t.path / "b" / "checkpoint.iwvickpt"));
    CHECK(slurp(t.path / "a" / "train_metrics.csv") ==
          slurp(t.path / "b" / "train_metrics.csv"));
    CHECK(slurp(t.path / "a" / "eval_metrics.csv") ==
          slurp(t.path / "b" / "eval_metrics.csv"));
}

TEST_CASE("audit passes, fails under injection, and reports every check") {
    TempDir t("audit");
    const std::string out = (t.path / "out").string();
    REQUIRE(run("audit --out " + out, (t.path / "log").string()) == 0);
    const std::string log = slurp(t.path / "log");
    for (const char* name :
         {"elbo_single_sample", "zero_variance_identity", "jensen_upper_bound",
          "gumbel_max_exactness", "bound_gradient_fd", "emd_closed_form",
          "elimination_vs_enumeration", "shift_cancellation", "theta_gradient_fd",
          "map_beats_fuzz"}) {
        CHECK(log.find(std::string("[PASS] ") + name) != std::string::npos);
    }
    CHECK(fs::exists(t.path / "out" / "audit.csv"));
    CHECK(fs::exists(t.path / "out" / "audit.json"));

    CHECK(run("audit --inject-density-bug --out " + (t.path / "bug").string(),
              (t.path / "buglog").string()) == 1);
    const std::string buglog = slurp(t.path / "buglog");
    CHECK(buglog.find("[FAIL] bound_gradient_fd") != std::string::npos);

    REQUIRE(run("report --out " + out, (t.path / "report.txt").string()) == 0);
    CHECK(slurp(t.path / "report.txt").find("audit: 10/10") != std::string::npos);
}

TEST_CASE("output directory precedence: flag beats environment beats config") {
    TempDir t("outdir");
    put(t.path / "cfg", kSmallTask + "count = 2\nout = " + (t.path / "from_cfg").string() +
                            "\n");
    const std::string cfg = (t.path / "cfg").string();

    REQUIRE(run("synth --config " + cfg) == 0);
    CHECK(fs::exists(t.path / "from_cfg" / "dataset.jsonl"));

    const std::string env_out = (t.path / "from_env").string();
    REQUIRE(std::system(("IWVI_OUT=" + env_out + " " + cli() + " synth --config " + cfg)
                            .c_str()) == 0);
    CHECK(fs::exists(t.path / "from_env" / "dataset.jsonl"));

    const std::string flag_out = (t.path / "from_flag").string();
    REQUIRE(std::system(("IWVI_OUT=" + env_out + "_ignored " + cli() + " synth --config " +
                         cfg + " --out " + flag_out)
                            .c_str()) == 0);
    CHECK(fs::exists(t.path / "from_flag" / "dataset.jsonl"));
    CHECK(!fs::exists(t.path / "from_env_ignored"));
}

TEST_CASE("seed flag overrides the config seed") {
    TempDir t("seedflag");
    put(t.path / "cfg", kSmallTask + "count = 3\nseed = 5\n");
    const std::string cfg = (t.path / "cfg").string();
    REQUIRE(run("synth --config " + cfg + " --out " + (t.path / "a").string()) == 0);
    REQUIRE(run("synth --config " + cfg + " --seed 5 --out " + (t.path / "b").string()) ==
            0);
    REQUIRE(run("synth --config " + cfg + " --seed 6 --out " + (t.path / "c").string()) ==
            0);
    CHECK(slurp(t.path / "a" / "dataset.jsonl") == slurp(t.path / "b" / "dataset.jsonl"));
    CHECK(slurp(t.path / "a" / "dataset.jsonl") != slurp(t.path / "c" / "dataset.jsonl"));
}
