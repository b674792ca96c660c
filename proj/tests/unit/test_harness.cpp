#include <sstream>
#include <string>

#include "approx.hpp"
#include "doctest.h"
#include "rarepath/analytic_model.hpp"
#include "rarepath/harness.hpp"
#include "rarepath/serialization.hpp"

using namespace rarepath;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

ExperimentConfig small_1d()
{
    auto cfg = parse_config(R"(
        model = one_d
        A = -6   # shallow so runs are short
        P = 0
        sigma2_tilde = 0.01
        N = 20
        T = 10
        replicates = 4
        seed = 5
        p_ref = 0.3
    )");
    cfg.finalize();
    return cfg;
}

} // namespace

TEST_CASE("config parsing")
{
    auto cfg = parse_config("model = two_d\nmethod = \"simple_mc\"\nJ = 1e6\nl = 2.5\nP_w=0.5\n\n# comment\n");
    cfg.finalize();
    CHECK(cfg.model == ModelKind::two_d);
    CHECK(cfg.method == MethodKind::simple_mc);
    CHECK(cfg.J == 1'000'000);
    CHECK(cfg.two_d.l == 2.5);
    CHECK(cfg.two_d.P_w == 0.5);

    auto c1 = parse_config("model = one_d\nP = 0\n");
    c1.finalize();
    CHECK(c1.one_d_kernel.Q == 0.0);

    auto c2 = parse_config("sigma2_tilde = 0.04\n");
    CHECK(c2.one_d_kernel.sigma2_tilde == 0.04);
    CHECK(c2.two_d_kernel.sigma2_tilde == 0.04);

    CHECK(parse_config("").ties == TieRule::one_per_iteration);
    CHECK(parse_config("tie_rule = kill_all\n").ties == TieRule::kill_all);
}

TEST_CASE("config errors")
{
    CHECK_THROWS_AS(parse_config("bogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("N = many\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("N = 2.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("just a line\n"), ConfigError);
    CHECK_THROWS_AS(parse_model_kind("three_d"), ConfigError);
    CHECK_THROWS_AS(parse_method_kind("magic"), ConfigError);
    CHECK_THROWS_AS(parse_config("tie_rule = some\n"), ConfigError);
    try {
        parse_config("N = 10\nT = x\n");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    auto bad_k = parse_config("replicates = 0\n");
    CHECK_THROWS_AS(bad_k.finalize(), ConfigError);
    auto ideal = parse_config("method = ideal\n");
    CHECK_THROWS_AS(ideal.finalize(), ConfigError);
    auto q = parse_config("model = one_d\nP = 0\nQ = 0.2\n");
    CHECK_THROWS_AS(q.finalize(), ConfigError);
    auto geom = parse_config("model = two_d\nl = 4\n");
    CHECK_THROWS_AS(geom.finalize(), ConfigError);
    auto n1 = parse_config("N = 1\n");
    CHECK_THROWS_AS(n1.finalize(), ConfigError);
    auto pt = parse_config("p_target = 0.1\n");
    CHECK_THROWS_AS(pt.finalize(), ConfigError);
}

TEST_CASE("p_target sets the analytic level")
{
    auto cfg = parse_config("model = analytic\nmethod = ideal\np_target = 1e-3\n");
    cfg.finalize();
    CHECK(cfg.level == rel(normal_isf(1e-3)));
    REQUIRE(cfg.p_ref.has_value());
    CHECK(*cfg.p_ref == 1e-3);
    CHECK(normal_sf(cfg.level) == rel(1e-3, 1e-12));
}

TEST_CASE("coverage check")
{
    const std::vector<double> exact(5, 0.13);
    CHECK(coverage_check(exact, 0.13, 200) == 1.0);
    const std::vector<double> mixed{0.13, 0.5, 0.2, 0.01};
    const auto [lo, hi] = confidence_interval(0.2, 200);
    const double expected = (1.0 + (lo <= 0.13 && 0.13 <= hi ? 1.0 : 0.0)) / 4.0;
    CHECK(coverage_check(mixed, 0.13, 200) == expected);
}

TEST_CASE("single-trial Monte Carlo experiment")
{
    auto cfg = parse_config("method = simple_mc\nJ = 1\n");
    cfg.finalize();
    const auto r = run_experiment(cfg);
    REQUIRE(r.replicates.size() == 1);
    REQUIRE(r.replicates[0].mc.has_value());
    const double p = r.replicates[0].mc->p_tilde;
    CHECK((p == 0.0 || p == 1.0));
    REQUIRE(r.summary.pooled.has_value());
}

TEST_CASE("experiment summary")
{
    const auto cfg = small_1d();
    const auto r = run_experiment(cfg);
    CHECK(r.summary.completed == 4);
    CHECK(r.summary.aborted == 0);
    REQUIRE(r.summary.rmse.has_value());
    REQUIRE(r.summary.coverage.has_value());
    REQUIRE(r.summary.geometric_mean.has_value());
    double mean = 0.0;
    for (const auto& rec : r.replicates) mean += rec.estimate() / 4.0;
    CHECK(r.summary.mean == rel(mean));
    CHECK(r.summary.sd > 0.0);
    CHECK(*r.summary.geometric_mean <= r.summary.mean);
}

TEST_CASE("reports are deterministic apart from timing")
{
    auto cfg = small_1d();
    const auto a = to_json(run_experiment(cfg), false).dump();
    cfg.workers = 1;
    const auto b = to_json(run_experiment(cfg), false).dump();
    CHECK(a == b);
    CHECK(a.find("wall_time") == std::string::npos);
    CHECK(to_json(run_experiment(cfg)).dump().find("wall_time") != std::string::npos);
}

TEST_CASE("aborted replicates are recorded")
{
    auto cfg = small_1d();
    cfg.max_iterations = 3;
    const auto r = run_experiment(cfg);
    CHECK(r.summary.aborted == 4);
    CHECK(r.summary.completed == 0);
    CHECK_FALSE(r.replicates[0].ok());
    CHECK(r.replicates[0].abort_iteration > 0);
}

TEST_CASE("figure columns")
{
    auto cfg = small_1d();
    cfg.mc_replicates = 3;
    cfg.mc_J = 20000;
    const auto r = run_experiment(cfg);

    std::ostringstream f1, f2, f4, tq, csv;
    emit_figure_data(r, "fig1", f1);
    CHECK(first_line(f1.str()) == "rep,p_hat,I_p_low,I_p_high");
    CHECK(line_count(f1.str()) == 5);
    emit_figure_data(r, "fig2", f2);
    CHECK(first_line(f2.str()) == "method,rep,estimate,ci_low,ci_high");
    CHECK(line_count(f2.str()) == 8);
    emit_figure_data(r, "fig4", f4);
    CHECK(first_line(f4.str()) == "level_iteration,mean_acceptance");
    CHECK(line_count(f4.str()) == r.replicates[0].lp->acceptance_log.size() + 1);
    emit_figure_data(r, "table_quality", tq);
    CHECK(first_line(tq.str()) == "time_mc,rmse_mc,time_lp,rmse_lp,ratio");
    CHECK(line_count(tq.str()) == 2);
    REQUIRE(r.quality_ratio.has_value());
    CHECK(*r.quality_ratio > 0.0);

    std::ostringstream bad;
    CHECK_THROWS_AS(emit_figure_data(r, "fig9", bad), std::invalid_argument);

    write_replicates_csv(r, csv);
    CHECK(first_line(csv.str()) == estimate_csv_header());
    CHECK(line_count(csv.str()) == 5);
}

TEST_CASE("serialization")
{
    EstimateResult e;
    e.p_hat = 0.25;
    e.m = 3;
    e.n_particles = 10;
    e.kill_log = {1, 2};
    e.acceptance_log = {0.5, 0.25};
    const auto j = to_json(e, false);
    CHECK(j["p_hat"] == 0.25);
    CHECK(j["diagnostics"]["kill_log"].size() == 2);
    CHECK_FALSE(j.contains("wall_time"));
    CHECK(to_csv_row(2, e).rfind("2,0.25,3,", 0) == 0);

    const auto mc = make_mc_result(3, 10, 0.95, 0.0);
    CHECK(to_json(mc)["successes"] == 3);
    CHECK(mc_csv_header() == "rep,successes,trials,p_tilde,ci_low,ci_high,wall_time");
    CHECK(to_csv_row(0, mc).rfind("0,3,10,0.3,", 0) == 0);
}

TEST_CASE("VLMC through the harness resumes from its checkpoint")
{
    const auto dir = std::filesystem::temp_directory_path() / "rarepath_harness_vlmc";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto cfg = parse_config("method = vlmc\nJ = 1000000\nvlmc_stop_after = 5\n");
    cfg.checkpoint = (dir / "cp.bin").string();
    cfg.finalize();
    const auto first = run_experiment(cfg);
    CHECK_FALSE(first.replicates[0].ok());
    cfg.vlmc_stop_after = 0;
    const auto second = run_experiment(cfg);
    REQUIRE(second.replicates[0].ok());
    auto straight_cfg = cfg;
    straight_cfg.checkpoint.clear();
    const auto straight = run_experiment(straight_cfg);
    CHECK(second.replicates[0].mc->trials == 1000000);
    CHECK(second.replicates[0].mc->successes == straight.replicates[0].mc->successes);
    std::filesystem::remove_all(dir);
}
