#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "iwvi/audit.hpp"
#include "iwvi/config.hpp"
#include "iwvi/errors.hpp"
#include "iwvi/sampler.hpp"

using namespace iwvi;

TEST_CASE("defaults survive an empty config") {
    std::stringstream in("");
    const RunConfig cfg = parse_config(in);
    CHECK(cfg.seed == 42);
    CHECK(cfg.out_dir == "out");
    CHECK(cfg.count == 100);
    CHECK(cfg.learn.samples_learn == 5000);
    CHECK(cfg.inf.samples_infer == 50);
    CHECK(cfg.inf.density == DensityMode::Paper);
    CHECK(cfg.ablate_s == std::vector<int>{10, 30, 50});
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("keys override defaults") {
    std::stringstream in(
        "# comment\n"
        "seed = 7\n"
        "\n"
        "v_o = 6\n"
        "samples_learn = 12\n"
        "samples_infer = 9\n"
        "density = exact\n"
        "readout = variational\n"
        "pi_init = random\n"
        "noise = fresh\n"
        "emd_iters = 40\n"
        "emd_gamma = 0.5\n"
        "emd_eps = 1e-4\n"
        "ablate_s = 5,15\n"
        "alpha = 0.25\n"
        "out = results\n");
    const RunConfig cfg = parse_config(in);
    CHECK(cfg.seed == 7);
    CHECK(cfg.task.seed == 7);    // master seed propagates
    CHECK(cfg.learn.seed == 7);
    CHECK(cfg.task.v_o == 6);
    CHECK(cfg.learn.samples_learn == 12);
    CHECK(cfg.inf.samples_infer == 9);
    CHECK(cfg.inf.density == DensityMode::Exact);
    CHECK(cfg.inf.readout == ReadoutMode::Variational);
    CHECK(cfg.inf.pi_init == PiInit::Random);
    CHECK(cfg.inf.noise == NoiseMode::Fresh);
    CHECK(cfg.inf.emd.max_iters == 40);
    CHECK(cfg.inf.emd.gamma0 == 0.5);
    CHECK(cfg.inf.emd.epsilon == 1e-4);
    CHECK(cfg.ablate_s == std::vector<int>{5, 15});
    CHECK(cfg.learn.alpha == 0.25);
    CHECK(cfg.out_dir == "results");
}

TEST_CASE("unknown keys and bad values are rejected") {
    {
        std::stringstream in("no_such_key = 1\n");
        CHECK_THROWS_AS(parse_config(in), ConfigError);
    }
    {
        std::stringstream in("seed = banana\n");
        CHECK_THROWS_AS(parse_config(in), ConfigError);
    }
    {
        std::stringstream in("count = 1.5\n");
        CHECK_THROWS_AS(parse_config(in), ConfigError);
    }
    {
        std::stringstream in("density = sometimes\n");
        CHECK_THROWS_AS(parse_config(in), ConfigError);
    }
    RunConfig cfg;
    cfg.count = -3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    RunConfig split;
    split.train_count = 5;
    split.eval_count = 0;
    CHECK_THROWS_AS(split.validate(), ConfigError);
}

TEST_CASE("snapshot covers every key and round trips") {
    RunConfig cfg;
    cfg.seed = 99;
    cfg.task.v_o = 7;
    cfg.learn.alpha = 0.125;
    cfg.inf.emd.gamma0 = 2.0;
    const std::string snap = config_snapshot(cfg);

    for (const auto& key : config_keys()) {
        CHECK(snap.find(key + "=") != std::string::npos);
    }

    std::stringstream in(snap);
    RunConfig back = parse_config(in);
    CHECK(config_snapshot(back) == snap);
    CHECK(back.task.v_o == 7);
    CHECK(back.learn.alpha == 0.125);
    CHECK(back.inf.emd.gamma0 == 2.0);
}

TEST_CASE("audit passes on a healthy build") {
    const auto checks = run_audit(42);
    CHECK(checks.size() == 10);
    for (const auto& c : checks) {
        INFO(c.name, ": ", c.detail);
        CHECK(c.passed);
        CHECK(!c.name.empty());
        CHECK(!c.detail.empty());
    }
    const std::vector<std::string> expected{
        "elbo_single_sample",      "zero_variance_identity", "jensen_upper_bound",
        "gumbel_max_exactness",    "bound_gradient_fd",      "emd_closed_form",
        "elimination_vs_enumeration", "shift_cancellation",  "theta_gradient_fd",
        "map_beats_fuzz"};
    for (const auto& name : expected)
        CHECK(std::any_of(checks.begin(), checks.end(),
                          [&](const AuditCheck& c) { return c.name == name; }));
}

TEST_CASE("audit is deterministic") {
    const auto a = run_audit(7);
    const auto b = run_audit(7);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name == b[i].name);
        CHECK(a[i].passed == b[i].passed);
        CHECK(a[i].detail == b[i].detail);
    }
}

TEST_CASE("audit detects a corrupted density constant") {
    set_log_density_constant_scale(1.05);
    const auto checks = run_audit(42);
    set_log_density_constant_scale(1.0);
    bool fd_failed = false;
    for (const auto& c : checks)
        if (c.name == "bound_gradient_fd") fd_failed = !c.passed;
    CHECK(fd_failed);
}
