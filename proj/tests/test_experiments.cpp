#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hamflow/experiments.hpp"
#include "test_util.hpp"

using namespace hamflow;

namespace {

const double TAU = 2.0 * 3.14159265358979323846;

ExperimentConfig base_config() {
    ExperimentConfig c;
    c.seed = 11;
    c.dimension = 1;
    c.modes = 8;
    c.length = TAU;
    c.model_kind = "nls";
    c.lambda_re = 1.0;
    c.amplitude = 0.3;
    c.decay = 1.0;
    c.particles = 50;
    c.t0 = 0.0;
    c.t1 = 0.2;
    c.dt = 0.01;
    c.snapshot_stride = 5;
    c.projection_dim = 2;
    c.test_radius = 3.0;
    c.time_margin = 0.02;
    return c;
}

} // namespace

TEST_CASE("log-log slope fit recovers an exact power law") {
    std::vector<double> xs = {1.0, 2.0, 4.0, 8.0};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(3.0 * std::pow(x, 1.7));
    REQUIRE(fit_loglog_slope(xs, ys) == Catch::Approx(1.7).epsilon(1e-12));

    REQUIRE_THROWS_AS(fit_loglog_slope({1.0}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_loglog_slope({1.0, 2.0}, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_loglog_slope({1.0, -2.0}, {1.0, 1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_loglog_slope({2.0, 2.0}, {1.0, 3.0}), std::invalid_argument);
}

TEST_CASE("sliced distance between point clouds") {
    using cloud = std::vector<std::vector<double>>;

    SECTION("identical clouds are at distance zero") {
        cloud p = {{0.5, -1.0}, {2.0, 0.25}};
        std::vector<double> w = {0.5, 0.5};
        REQUIRE(sliced_w1_points(p, w, p, w, 2, 8, 5) == Catch::Approx(0.0).margin(1e-15));
    }

    SECTION("1-d translation is exact for every direction") {
        cloud a = {{0.0}, {1.0}};
        cloud b = {{0.25}, {1.25}};
        std::vector<double> w = {0.5, 0.5};
        REQUIRE(sliced_w1_points(a, w, b, w, 1, 8, 5) == Catch::Approx(0.25).epsilon(1e-12));
    }

    SECTION("2-d translation averages |u . delta| ~ (2/pi) |delta|") {
        cloud a, b;
        std::vector<double> w;
        Rng rng(17);
        for (int i = 0; i < 40; ++i) {
            const double x = rng.normal(), y = rng.normal();
            a.push_back({x, y});
            b.push_back({x + 0.8, y});
            w.push_back(1.0 / 40.0);
        }
        const double got = sliced_w1_points(a, w, b, w, 2, 64, 6);
        REQUIRE(got == Catch::Approx(0.8 * 2.0 / 3.14159265358979323846).epsilon(0.3));
    }

    SECTION("zero-weight atoms are ignored") {
        cloud a = {{0.0}, {100.0}};
        cloud b = {{0.3}};
        REQUIRE(sliced_w1_points(a, {1.0, 0.0}, b, {1.0}, 1, 4, 5) == Catch::Approx(0.3));
    }

    SECTION("validation") {
        cloud a = {{0.0}};
        REQUIRE_THROWS_AS(sliced_w1_points(a, {1.0, 2.0}, a, {1.0}, 1, 4, 5),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(sliced_w1_points(a, {1.0}, a, {1.0}, 1, 0, 5), std::invalid_argument);
    }
}

TEST_CASE("config projection picks explicit weak-basis directions") {
    Grid g(1, 8, TAU);
    std::vector<double> a(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) a[i] = g.ksq(i);
    NormWeights w(g, 1, a);
    WeakNormBasis b(w);

    ExperimentConfig c;
    c.projection_indices = {3, 4};
    ProjectionBasis p = config_projection(c, b);
    REQUIRE(p.dim() == 2);
    const auto y3 = p.project(b.vector(3));
    REQUIRE(y3[0] == Catch::Approx(1.0).margin(1e-13));
    REQUIRE(y3[1] == Catch::Approx(0.0).margin(1e-13));

    c.projection_indices = {0};
    REQUIRE_THROWS_AS(config_projection(c, b), std::invalid_argument);

    c.projection_indices.clear();
    c.projection_dim = 2;
    ProjectionBasis lead = config_projection(c, b);
    const auto y1 = lead.project(b.vector(1));
    REQUIRE(y1[0] == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("hypothesis battery reports moments and enforces bounds") {
    ExperimentConfig cfg = base_config();
    cfg.ball_norm = "Z1";
    cfg.ball_radius = 6.0;

    HypothesesResult res = run_hypotheses(cfg);
    REQUIRE(res.all_pass);
    REQUIRE(res.report.contains("sup_z1"));
    REQUIRE(res.report.contains("moment2_z1"));
    REQUIRE(res.report.contains("ener_moment"));
    REQUIRE(res.report.contains("velocity_original"));
    REQUIRE(res.report.contains("theta_moment"));
    REQUIRE(res.report["checks"].contains("concentration"));
    REQUIRE(res.report["checks"]["concentration"]["pass"].get<bool>());
    REQUIRE(res.report["config_hash"] == config_hash(cfg));

    // identical reruns are byte identical
    HypothesesResult again = run_hypotheses(cfg);
    REQUIRE(report_text(res.report) == report_text(again.report));

    // an unreachable bound flips the verdict and is recorded
    cfg.bound_z1_moment = 1e-9;
    HypothesesResult fail = run_hypotheses(cfg);
    REQUIRE_FALSE(fail.all_pass);
    REQUIRE_FALSE(fail.report["checks"]["z1_moment"]["pass"].get<bool>());
    REQUIRE(fail.report["checks"]["z1_moment"]["value"].get<double>() > 1e-9);
}

TEST_CASE("hypothesis battery covers the two-picture models") {
    ExperimentConfig cfg = base_config();
    cfg.model_kind = "hartree";
    cfg.kernel = "yukawa";
    cfg.kernel_strength = 1.0;
    cfg.kernel_mu = 1.0;
    cfg.particles = 30;
    cfg.bound_lipschitz = 1e6;

    HypothesesResult res = run_hypotheses(cfg);
    REQUIRE(res.report.contains("velocity_interaction"));
    REQUIRE(res.report.contains("lipschitz_max"));
    REQUIRE(res.report["lipschitz_max"].get<double>() > 0.0);
    REQUIRE(res.report["checks"]["lipschitz"]["pass"].get<bool>());
    REQUIRE(res.all_pass);
}

TEST_CASE("weak residual of a freely transported cloud is quadrature small") {
    ExperimentConfig cfg = base_config();
    cfg.lambda_re = 0.0;
    cfg.t1 = 0.5;
    cfg.time_margin = 0.05;
    cfg.odd_tests = false;

    const auto res = residual_run(cfg, cfg.seed, 100, 5e-3);
    REQUIRE(res.total.size() == 6); // d = 2 full dictionary
    REQUIRE(res.rms.size() == 6);
    for (double r : res.total) REQUIRE(std::abs(r) < 1e-8);
    // free transport leaves a pure quadrature defect in every particle
    for (double r : res.rms) REQUIRE(r < 1e-8);
}

TEST_CASE("residual ladder decays like sampling noise on a symmetric law") {
    ExperimentConfig cfg = base_config();
    cfg.t1 = 0.5;
    cfg.time_margin = 0.05;
    cfg.odd_tests = true;
    cfg.ladder = {{200, 2e-2, 0.5}, {1600, 1e-2, 0.25}};

    ResidualLadderResult res = run_residual_ladder(cfg, 2, -1.2, 0.2, 10.0);
    REQUIRE(res.report["rungs"].size() == 2);
    REQUIRE(res.report["slope_dt"].get<double>() == 1e-2);
    REQUIRE(res.report["rungs"][0]["residual_per_seed"].size() == 2);
    REQUIRE(res.report["rungs"][0]["residual_max"].get<double>() > 0.0);
    // rms magnitude shrinks when n grows 8x at the pinned step
    REQUIRE(res.report["rungs"][0]["residual_rms_fixed_dt"].get<double>() >
            res.report["rungs"][1]["residual_rms_fixed_dt"].get<double>());
    REQUIRE(std::isfinite(res.slope));
    REQUIRE(res.all_pass);

    ResidualLadderResult again = run_residual_ladder(cfg, 2, -1.2, 0.2, 10.0);
    REQUIRE(report_text(res.report) == report_text(again.report));

    cfg.ladder.resize(1);
    REQUIRE_THROWS_AS(run_residual_ladder(cfg), std::invalid_argument);
}

TEST_CASE("uniqueness cross-validation runs both routes and conserves mass") {
    ExperimentConfig cfg = base_config();
    cfg.lambda_re = 0.0;
    cfg.seed = 21;
    cfg.sigma_modes = {{-1.0, 0.5}};
    cfg.mean_mode = {-1};
    cfg.mean_re = 0.9;
    cfg.projection_indices = {3, 4};
    cfg.t1 = 0.2;
    cfg.snapshots = 2;
    cfg.box_halfwidth = 1.6;
    cfg.cfl = 0.8;
    cfg.bandwidth = 0.12;
    cfg.ladder = {{400, 2e-2, 0.4}, {400, 1e-2, 0.2}};

    UniquenessResult res = run_uniqueness(cfg, -10.0, 10.0);
    REQUIRE(res.all_pass); // wide window: structural smoke only
    REQUIRE(res.report["rungs"].size() == 2);
    for (const auto& rung : res.report["rungs"]) {
        REQUIRE(rung["mass_b"].get<double>() == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(rung["l1_terminal"].get<double>() >= 0.0);
        REQUIRE(rung["sliced_w1_terminal"].get<double>() >= 0.0);
    }
    REQUIRE(std::isfinite(res.slope));

    // csv: header plus one line per rung
    std::size_t lines = 0;
    for (char ch : res.table_csv)
        if (ch == '\n') ++lines;
    REQUIRE(lines == 3);
    REQUIRE(res.table_csv.rfind("rung,n,dt,dx,cells,bandwidth,l1_terminal,sliced_w1_terminal\n",
                                0) == 0);

    UniquenessResult again = run_uniqueness(cfg, -10.0, 10.0);
    REQUIRE(report_text(res.report) == report_text(again.report));
    REQUIRE(res.table_csv == again.table_csv);

    cfg.ladder.resize(1);
    REQUIRE_THROWS_AS(run_uniqueness(cfg), std::invalid_argument);
}

TEST_CASE("report helpers write files and canonical text") {
    json j;
    j["b"] = 1;
    j["a"] = 2;
    const std::string text = report_text(j);
    REQUIRE(text == "{\n  \"a\": 2,\n  \"b\": 1\n}\n");

    const std::string p = "io_test_artifacts/report_helper.json";
    write_text_file(p, text);
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    REQUIRE(ss.str() == text);
}
