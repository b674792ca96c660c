#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

#include "approx.hpp"
#include "doctest.h"
#include "rarepath/model_1d.hpp"

using namespace rarepath;

namespace {

double log_phi(double mean, double var, double t)
{
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - (t - mean) * (t - mean) / (2.0 * var);
}

} // namespace

TEST_CASE("objective")
{
    Model1DParams p{-15, 1, 1, 0.45, 0};
    CHECK(objective_1d(p, Trajectory(1, {0.5, -0.3, -12.0})) == rel(-3.0));
    CHECK(objective_1d(p, Trajectory(1, {-15.0})) == 0.0);
    p.A = -10;
    CHECK(objective_1d(p, Trajectory(1, {0.2, -12.0, 3.0})) == rel(2.0));
}

TEST_CASE("pdf values")
{
    const Model1DParams p0{-10, 1, 1, 0, 0};
    CHECK(log_pdf_1d(p0, Trajectory(1, {2.0})) == rel(-2.918939, 1e-6));
    CHECK(log_pdf_1d(p0, Trajectory(1, {0.5})) == neg_inf);

    const Model1DParams p{-10, 1, 1, 0.45, 0};
    const double expected = log_phi(0, 1, 0.5) + std::log(0.55) + log_phi(0.5, 1, 3.0);
    CHECK(log_pdf_1d(p, Trajectory(1, {0.5, 3.0})) == rel(expected, 1e-14));
    CHECK(expected == rel(-5.685714, 1e-6));
    CHECK(log_pdf_1d(p, Trajectory(1, {0.5, 0.2})) ==
          rel(log_phi(0, 1, 0.5) + std::log(0.55) + log_phi(0.5, 1, 0.2) + std::log(0.45)));
    CHECK(log_pdf_1d(p, Trajectory(1, {5.0, 0.2})) == neg_inf);
}

TEST_CASE("parameter checks")
{
    CHECK_THROWS(Model1DParams{1, -1, 1, 0, 0}.validate());
    CHECK_THROWS(Model1DParams{-1, 1, 0, 0, 0}.validate());
    CHECK_THROWS(Model1DParams{-1, 1, 1, 1.0, 0}.validate());
    CHECK_THROWS(Model1DParams{-1, 1, 1, 0, 2.0}.validate());
    const Model1DParams p0{-10, 1, 1, 0, 0};
    CHECK_THROWS(Kernel1DParams{0.01, 0.2}.validate(p0));
    CHECK_THROWS(Kernel1DParams{0.0, 0.0}.validate(p0));
    CHECK_NOTHROW(Kernel1DParams{0.01, 0.0}.validate(p0));
    CHECK_THROWS(Kernel1DParams{0.01, 1.0}.validate(Model1DParams{-10, 1, 1, 0.3, 0}));
}

TEST_CASE("first-collision absorption frequency")
{
    const Model1DParams p{-15, 1, 1, 0.45, 0};
    const boost::math::normal n01;
    const double inside = boost::math::cdf(n01, 1.0) - boost::math::cdf(n01, -15.0);
    const double expected = (1.0 - inside) + 0.45 * inside;
    CHECK(expected == rel(0.537260, 1e-6));

    Rng rng(2024);
    const int n = 200000;
    int len1 = 0;
    for (int i = 0; i < n; ++i) len1 += sample_trajectory_1d(p, rng).size() == 1;
    const double freq = static_cast<double>(len1) / n;
    CHECK(std::abs(freq - expected) < 4.0 * std::sqrt(expected * (1 - expected) / n));
}

TEST_CASE("near-certain absorption")
{
    const Model1DParams p{-10, 1, 1, 0.999999, 0};
    Rng rng(3);
    int len1 = 0;
    for (int i = 0; i < 10000; ++i) len1 += sample_trajectory_1d(p, rng).size() == 1;
    CHECK(len1 >= 9999);
}

TEST_CASE("sampled trajectories respect the absorption rule")
{
    const Model1DParams p{-4, 2, 1, 0.2, 0};
    Rng rng(8);
    for (int i = 0; i < 2000; ++i) {
        const auto x = sample_trajectory_1d(p, rng);
        for (std::size_t j = 0; j + 1 < x.size(); ++j) CHECK(p.in_domain(x[j]));
        CHECK(log_pdf_1d(p, x) > neg_inf);
    }
}

TEST_CASE("kernel: vanishing perturbation reproduces the history")
{
    const Model1DParams p{-10, 1, 1, 0, 0};
    const Kernel1DParams k{1e-12, 0.0};
    const Trajectory x(1, {-0.8, -2.5, -4.0, 1.7});
    Rng rng(10);
    for (int i = 0; i < 100; ++i) {
        const auto y = sample_perturbed_1d(p, k, x, rng);
        REQUIRE(y.size() == x.size());
        for (std::size_t j = 0; j < x.size(); ++j) CHECK(y[j] == rel(x[j], 1e-4));
    }
}

TEST_CASE("kernel: single-point history")
{
    const Model1DParams p{-10, 1, 1, 0, 0};
    const Kernel1DParams k{0.01, 0.0};
    const Trajectory x(1, {1.5});
    Rng rng(12);
    for (int i = 0; i < 500; ++i) {
        const auto y = sample_perturbed_1d(p, k, x, rng);
        if (!p.in_domain(y[0])) {
            CHECK(y.size() == 1);
        } else {
            CHECK(y.size() > 1);
        }
    }
}

TEST_CASE("kernel density: same length, both endpoints outside")
{
    const Model1DParams p{-15, 1, 1, 0.45, 0};
    const Kernel1DParams k{0.01, 0.2};
    const Trajectory x(1, {0.3, -0.4, 2.0});
    const Trajectory y(1, {0.32, -0.35, 1.9});
    double expected = 0.0;
    double yp = 0.0, xp = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        expected += log_phi(yp + (x[i] - xp), 0.01, y[i]);
        if (i < 2) expected += std::log(0.8);
        yp = y[i];
        xp = x[i];
    }
    CHECK(log_kernel_pdf_1d(p, k, x, y) == rel(expected, 1e-13));
}

TEST_CASE("kernel density: mandatory absorption skipped")
{
    const Model1DParams p{-15, 1, 1, 0.45, 0};
    const Kernel1DParams k{0.01, 0.2};
    const Trajectory x(1, {0.3, 2.0});
    CHECK(log_kernel_pdf_1d(p, k, x, Trajectory(1, {1.3, 0.5, 2.0})) == neg_inf);
    CHECK(log_kernel_pdf_1d(Model1DParams{-10, 1, 1, 0, 0}, Kernel1DParams{0.01, 0}, x,
                            Trajectory(1, {1.3, 0.5, 2.0})) == neg_inf);
}

TEST_CASE("model wrapper")
{
    const Model1D m({-10, 1, 1, 0, 0}, {0.01, 0});
    Rng a(1), b(1);
    const auto x = m.sample(a);
    Trajectory buf(1);
    m.sample_into(buf, b);
    CHECK(buf == x);
    CHECK(m.log_pdf(x) == log_pdf_1d(m.params(), x));
    CHECK_THROWS(Model1D({-10, 1, 1, 0, 0}, {0.01, 0.2}));
}
