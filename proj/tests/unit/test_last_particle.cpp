#include <algorithm>
#include <cmath>
#include <numeric>

#include "approx.hpp"
#include "doctest.h"
#include "rarepath/analytic_model.hpp"
#include "rarepath/last_particle.hpp"
#include "rarepath/model_1d.hpp"

using namespace rarepath;

namespace {

/// Scalar model with a constant objective: every particle ties.
struct FlatModel {
    using state_type = double;
    double objective(double) const { return 0.0; }
    double log_pdf(double) const { return 0.0; }
    double log_kernel_pdf(double, double) const { return 0.0; }
    double sample(Rng& rng) const { return rng.uniform(); }
    double sample_perturbed(double x, Rng&) const { return x; }
};

/// Proposes a fixed point regardless of the current state.
struct FixedProposalModel {
    using state_type = double;
    double target;
    double objective(double x) const { return x; }
    double log_pdf(double) const { return 0.0; }
    double log_kernel_pdf(double, double) const { return 0.0; }
    double sample(Rng& rng) const { return rng.uniform(); }
    double sample_perturbed(double, Rng&) const { return target; }
};

struct BrokenDensityModel : FixedProposalModel {
    double log_pdf(double) const { return neg_inf; }
};

/// Uniform on {0, ..., 9}, so the minimum is routinely shared.
struct DiceModel {
    using state_type = double;
    double objective(double x) const { return x; }
    double sample(Rng& rng) const { return static_cast<double>(rng.uniform_index(10)); }
    double sample_conditional(double t, Rng& rng) const
    {
        const auto lo = static_cast<std::size_t>(std::ceil(t));
        return static_cast<double>(lo + rng.uniform_index(10 - lo));
    }
};

} // namespace

TEST_CASE("confidence interval values")
{
    auto [lo1, hi1] = confidence_interval(1.0, 200);
    CHECK(lo1 == 1.0);
    CHECK(hi1 == 1.0);

    const double s = std::sqrt(-std::log(0.13) / 200.0);
    auto [lo, hi] = confidence_interval(0.13, 200);
    CHECK(lo == rel(0.13 * std::exp(-1.96 * s), 1e-14));
    CHECK(hi == rel(0.13 * std::exp(1.96 * s), 1e-14));
    CHECK(lo == rel(0.106652, 5e-6));
    CHECK(hi == rel(0.158459, 5e-6));

    auto [lo2, hi2] = confidence_interval(6.6e-8, 200);
    CHECK(hi2 / lo2 == rel(std::exp(2 * 1.96 * std::sqrt(-std::log(6.6e-8) / 200)), 1e-13));
    CHECK(hi2 / lo2 == rel(3.086632, 1e-6));

    CHECK_THROWS_AS(confidence_interval(0.0, 200), std::invalid_argument);
    CHECK_THROWS_AS(confidence_interval(1.5, 200), std::invalid_argument);
}

TEST_CASE("estimator value")
{
    CHECK(estimator_value(200, 0) == 1.0);
    CHECK(estimator_value(200, 14) == rel(std::pow(0.995, 14), 1e-15));
    CHECK(estimator_value(200, 14) == rel(0.932230, 1e-6));
}

TEST_CASE("log acceptance edge cases")
{
    CHECK(log_acceptance(neg_inf, -1.0, -2.0, -3.0) == 0.0);
    CHECK(log_acceptance(-1.0, neg_inf, -2.0, -3.0) == neg_inf);
    CHECK(log_acceptance(-1.0, -1.0, -2.0, -2.0) == 0.0);
    CHECK(log_acceptance(-1.0, -2.0, -2.0, -2.0) == rel(-1.0));
    CHECK(log_acceptance(-2.0, -1.0, -2.0, -2.0) == 0.0);
}

TEST_CASE("HM: proposal below the threshold is rejected")
{
    const FixedProposalModel m{0.2};
    Rng rng(1);
    const auto out = hm_conditional_sample(m, 0.5, 0.7, 1, rng);
    CHECK(out.state == 0.7);
    CHECK(out.acceptance_rate == 0.0);
}

TEST_CASE("HM: symmetric move above the threshold is always accepted")
{
    const FixedProposalModel m{0.9};
    Rng rng(2);
    const auto out = hm_conditional_sample(m, 0.5, 0.7, 50, rng);
    CHECK(out.state == 0.9);
    CHECK(out.acceptance_rate == 1.0);
}

TEST_CASE("HM argument errors")
{
    const FixedProposalModel m{0.9};
    Rng rng(3);
    CHECK_THROWS_AS(hm_conditional_sample(m, 0.5, 0.2, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(hm_conditional_sample(m, 0.5, 0.7, 0, rng), std::invalid_argument);
}

TEST_CASE("HM output always satisfies the threshold")
{
    const Model1D model({-15, 1, 1, 0.45, 0}, {0.01, 0.2});
    Rng rng(4);
    Trajectory x = model.sample(rng);
    while (model.objective(x) < -12.0) x = model.sample(rng);
    for (int rep = 0; rep < 50; ++rep) {
        const auto out = hm_conditional_sample(model, -12.0, x, 20, rng);
        CHECK(model.objective(out.state) >= -12.0);
        CHECK(out.acceptance_rate >= 0.0);
        CHECK(out.acceptance_rate <= 1.0);
    }
}

TEST_CASE("level already exceeded")
{
    const AnalyticModel m;
    const auto r = run_practical(m, 10, 5, -100.0, StreamKey(5));
    CHECK(r.m == 1);
    CHECK(r.p_hat == 1.0);
    CHECK(r.ci_low == 1.0);
    CHECK(r.kill_log.empty());
}

TEST_CASE("driver errors")
{
    const AnalyticModel m;
    CHECK_THROWS_AS(run_practical(m, 1, 5, 1.0, StreamKey(1)), std::invalid_argument);
    CHECK_THROWS_AS(run_practical(m, 10, 0, 1.0, StreamKey(1)), std::invalid_argument);
    CHECK_THROWS_AS(run_ideal(m, 1, 1.0, StreamKey(1)), std::invalid_argument);

    try {
        run_practical(FlatModel{}, 10, 5, 0.0, StreamKey(1));
        FAIL("expected an abort");
    } catch (const EstimationAborted& e) {
        CHECK(e.iteration() == 1);
    }
    CHECK_THROWS_AS(run_practical(BrokenDensityModel{}, 10, 5, 2.0, StreamKey(1)), EstimationAborted);
    CHECK_THROWS_AS(run_ideal(m, 10, 50.0, StreamKey(1), DriverOptions{100}), EstimationAborted);
}

TEST_CASE("logs have one entry per level iteration")
{
    const AnalyticModel m;
    const auto r = run_practical(m, 20, 5, 1.5, StreamKey(9));
    CHECK(r.kill_log.size() == static_cast<std::size_t>(r.m - 1));
    CHECK(r.acceptance_log.size() == static_cast<std::size_t>(r.m - 1));
    CHECK(r.level_log.size() == static_cast<std::size_t>(r.m));
    CHECK(r.level_log.back() > 1.5);
    CHECK(r.p_hat == estimator_value(20, r.m - 1));
    CHECK(r.hm_iterations == 5);
}

TEST_CASE("same key gives the same run")
{
    const Model1D model({-10, 1, 1, 0, 0}, {0.01, 0.0});
    const auto a = run_practical(model, 30, 10, 0.0, StreamKey(77));
    const auto b = run_practical(model, 30, 10, 0.0, StreamKey(77));
    CHECK(a.m == b.m);
    CHECK(a.acceptance_log == b.acceptance_log);
    CHECK(a.level_log == b.level_log);
}

TEST_CASE("ideal driver: iteration count is Poisson(-N log p)")
{
    const AnalyticModel m;
    const double p = 1e-2;
    const double level = normal_isf(p);
    const std::size_t N = 50, K = 400;
    std::vector<double> steps;
    for (std::size_t k = 0; k < K; ++k)
        steps.push_back(static_cast<double>(run_ideal(m, N, level, StreamKey(11).child(k)).m - 1));
    const double mean = std::accumulate(steps.begin(), steps.end(), 0.0) / K;
    const double lambda = -static_cast<double>(N) * std::log(p);
    CHECK(std::abs(mean - lambda) < 4.0 * std::sqrt(lambda / K));
}

TEST_CASE("tie rules")
{
    const DiceModel m;
    const auto one = run_ideal(m, 20, 8.5, StreamKey(5));
    CHECK(one.tie_warnings > 0);
    CHECK(std::all_of(one.kill_log.begin(), one.kill_log.end(), [](std::size_t k) { return k == 1; }));
    CHECK(one.kill_log.size() == static_cast<std::size_t>(one.m - 1));

    const auto all = run_ideal(m, 20, 8.5, StreamKey(5), DriverOptions{0, TieRule::kill_all});
    CHECK(all.tie_warnings > 0);
    CHECK(std::any_of(all.kill_log.begin(), all.kill_log.end(), [](std::size_t k) { return k > 1; }));
    const auto kills = std::accumulate(all.kill_log.begin(), all.kill_log.end(), std::size_t{0});
    CHECK(kills > static_cast<std::size_t>(all.m - 1));
}
