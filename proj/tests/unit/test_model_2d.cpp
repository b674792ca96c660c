#include <cmath>
#include <numbers>

#include "approx.hpp"
#include "doctest.h"
#include "rarepath/model_2d.hpp"

using namespace rarepath;

namespace {

constexpr double pi = std::numbers::pi;

void check_point(const std::optional<Vec2>& p, Vec2 expected)
{
    REQUIRE(p.has_value());
    CHECK(std::abs(p->x - expected.x) <= 1e-12);
    CHECK(std::abs(p->y - expected.y) <= 1e-12);
}

} // namespace

TEST_CASE("segment and circle")
{
    const auto through = segment_sphere_geometry({0, 0}, 2, {-5, 0}, {5, 0});
    CHECK(through.intersects);
    check_point(through.c1, {-2, 0});
    check_point(through.c2, {2, 0});

    const auto miss = segment_sphere_geometry({0, 0}, 2, {-5, 3}, {5, 3});
    CHECK_FALSE(miss.intersects);

    const auto radial = segment_sphere_geometry({0, 0}, 2, {0, 0}, {5, 0});
    CHECK(radial.intersects);
    check_point(radial.c, {2, 0});
    CHECK_FALSE(radial.c1.has_value());

    const auto inward = segment_sphere_geometry({0, 0}, 2, {0, 5}, {0, 1});
    check_point(inward.c, {0, 2});

    const auto stop_short = segment_sphere_geometry({0, 0}, 2, {-5, 0}, {-3, 0});
    CHECK_FALSE(stop_short.intersects);
    const auto interior = segment_sphere_geometry({0, 0}, 2, {-1, 0}, {1, 0.5});
    CHECK_FALSE(interior.intersects);
}

TEST_CASE("jump density branches")
{
    const Model2DParams p;
    CHECK(log_q_2d(p, {-3, 0}, {-3.5, 0}) == rel(-std::log(pi) + std::log(0.2) - 0.1, 1e-14));

    const double r = std::hypot(0.5, 0.3);
    CHECK(log_q_2d(p, {0, 0}, {0.5, 0.3}) ==
          rel(-std::log(2 * pi * r) + std::log(2.0) - 2.0 * r, 1e-14));

    // water, through the sphere, water: 1 unit water, 4 poison, 1 water
    CHECK(log_q_2d(p, {-3, 0}, {3, 0}) ==
          rel(-std::log(2 * pi * 6) + std::log(0.2) - (0.2 * 2 + 2.0 * 4), 1e-13));
    // water then poison: 1 unit each
    CHECK(log_q_2d(p, {-3, 0}, {-1, 0}) ==
          rel(-std::log(2 * pi * 2) + std::log(2.0) - (0.2 + 2.0), 1e-13));

    CHECK_THROWS(log_q_2d(p, {1, 1}, {1, 1}));
}

TEST_CASE("flip tables")
{
    const Model2DParams p;
    const Kernel2DParams k;
    const Vec2 water{-4, 0}, poison{0.5, 0}, out{20, 0};
    using enum StepKind;
    CHECK(perturbed_absorption_prob(p, k, before_n, water, out) == 1.0);
    CHECK(perturbed_absorption_prob(p, k, before_n, water, water) == k.Q_w);
    CHECK(perturbed_absorption_prob(p, k, before_n, poison, poison) == k.Q_p);
    CHECK(perturbed_absorption_prob(p, k, before_n, poison, water) == p.P_w);
    CHECK(perturbed_absorption_prob(p, k, before_n, water, poison) == p.P_p);

    CHECK(perturbed_absorption_prob(p, k, at_n, poison, poison) == 1.0 - k.Q_p);
    CHECK(perturbed_absorption_prob(p, k, at_n, water, water) == 1.0 - k.Q_w);
    CHECK(perturbed_absorption_prob(p, k, at_n, out, water) == p.P_w);
    CHECK(perturbed_absorption_prob(p, k, at_n, out, poison) == p.P_p);
    CHECK(perturbed_absorption_prob(p, k, at_n, water, poison) == p.P_p);
    CHECK(perturbed_absorption_prob(p, k, at_n, poison, water) == p.P_w);
    CHECK(perturbed_absorption_prob(p, k, at_n, water, out) == 1.0);
}

TEST_CASE("objective")
{
    const Model2DParams p;
    const Trajectory hit(2, {-1.0, 0.0, 3.0, 0.2});
    CHECK(objective_2d(p, hit) == rel(0.3));
    CHECK(std::abs(objective_2d(p, Trajectory(2, {3.0, 0.5}))) <= 1e-15);
    const Trajectory far(2, {1.0, 0.0, 3.0, 2.0, 5.5, 0.0});
    CHECK(objective_2d(p, far) <= -1.5);
}

TEST_CASE("pdf of a single flight leaving the box")
{
    const Model2DParams p;
    const Trajectory x(2, {-6.0, 0.0});
    CHECK(log_pdf_2d(p, x) == rel(log_q_2d(p, {-3, 0}, {-6, 0}), 1e-15));
    CHECK(log_pdf_2d(p, Trajectory(2, {-6.0, 0.0, -4.0, 0.0})) == neg_inf);
    CHECK(log_pdf_2d(p, Trajectory(2, {-4.0, 0.0})) ==
          rel(log_q_2d(p, {-3, 0}, {-4, 0}) + std::log(p.P_w), 1e-14));
}

TEST_CASE("parameter checks")
{
    Model2DParams p;
    CHECK_NOTHROW(p.validate());
    p.l = 2.5;
    CHECK_NOTHROW(p.validate());
    p.l = 2.6;
    CHECK_THROWS(p.validate());
    p = {};
    p.s_x = 6.0;
    CHECK_THROWS(p.validate());
    p.s_x = 1.5;
    CHECK_THROWS(p.validate());
    p = {};
    p.lambda_p = 0.1;
    CHECK_THROWS(p.validate());
    p = {};
    p.P_w = 1.0;
    CHECK_NOTHROW(p.validate());
    p.P_p = -0.1;
    CHECK_THROWS(p.validate());
    CHECK_THROWS(Kernel2DParams{0.0, 0.05, 0.1}.validate());
    CHECK_THROWS(Kernel2DParams{0.25, 1.1, 0.1}.validate());
    CHECK_NOTHROW(Kernel2DParams{0.25, 1.0, 0.0}.validate());
}

TEST_CASE("single-medium flights are exponential")
{
    Model2DParams p;
    p.lambda_p = p.lambda_w;
    Rng rng(6);
    const int n = 1000000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += norm(sample_jump_2d(p, {-4.5, -4.5}, rng).point - Vec2{-4.5, -4.5});
    CHECK(sum / n == rel(1.0 / p.lambda_w, 0.01));
}

TEST_CASE("at most three distance draws per flight")
{
    const Model2DParams p;
    Rng rng(7);
    int worst = 0;
    for (int i = 0; i < 200000; ++i) {
        const auto j = sample_jump_2d(p, {-3, 0.3}, rng);
        worst = std::max(worst, j.distance_samplings);
    }
    CHECK(worst == 3);
}

TEST_CASE("kernel: vanishing perturbation keeps the length")
{
    const Model2DParams p;
    const Kernel2DParams k{1e-12, 0.0, 0.0};
    const Trajectory x(2, {-1.0, 0.5, 0.4, -0.3, 2.5, 1.0, 7.0, 1.0});
    Rng rng(9);
    int same = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) same += sample_perturbed_2d(p, k, x, rng).size() == x.size();
    CHECK(static_cast<double>(same) / n >= 0.999);
}

TEST_CASE("kernel density: proposal centred on the history")
{
    const Model2DParams p;
    const Kernel2DParams k;
    const Trajectory x(2, {-1.0, 0.5, 6.0, 0.0});
    const Trajectory y(2, {-1.1, 0.4, 5.8, 0.3});
    const double s2 = k.sigma2_tilde;
    auto lphi = [&](double dx, double dy) { return -std::log(2 * pi * s2) - (dx * dx + dy * dy) / (2 * s2); };
    // first points both in the poison sphere, last points both outside the box
    const double expected = lphi(0.1, 0.1) + std::log(1.0 - k.Q_p) + lphi(0.2, 0.3);
    CHECK(log_kernel_pdf_2d(p, k, x, y) == rel(expected, 1e-13));
}

TEST_CASE("sampled trajectories have positive density")
{
    const Model2D m({}, {});
    Rng rng(13);
    for (int i = 0; i < 2000; ++i) {
        const auto x = m.sample(rng);
        CHECK(m.log_pdf(x) > neg_inf);
        const auto y = m.sample_perturbed(x, rng);
        CHECK(m.log_kernel_pdf(x, y) > neg_inf);
    }
}
