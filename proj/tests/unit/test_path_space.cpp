#include <cmath>
#include <numbers>
#include <sstream>

#include "approx.hpp"
#include "doctest.h"
#include "rarepath/path_space.hpp"
#include "rarepath/rng.hpp"

using namespace rarepath;

namespace {

double log_std_normal(double mean, double t)
{
    return -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * (t - mean) * (t - mean);
}

AbsorbedChainSpec walk_spec(double A, double B, double P)
{
    AbsorbedChainSpec s;
    s.source_point = {0.0};
    s.absorption = [=](std::size_t, Point y) { return (y[0] > A && y[0] < B) ? P : 1.0; };
    s.log_transition = [](std::size_t, Point from, Point to) { return log_std_normal(from[0], to[0]); };
    return s;
}

} // namespace

TEST_CASE("single point leaving the domain")
{
    const Trajectory x(1, {2.0});
    const double expected = -2.0 - 0.5 * std::log(2.0 * std::numbers::pi);
    CHECK(log_pdf_absorbed_chain(walk_spec(-10, 1, 0.0), x) == rel(expected, 1e-15));
    CHECK(expected == rel(-2.918939, 1e-6));
}

TEST_CASE("zero absorption at the last point gives -inf")
{
    const Trajectory x(1, {0.5});
    CHECK(log_pdf_absorbed_chain(walk_spec(-10, 1, 0.0), x) == neg_inf);
}

TEST_CASE("certain absorption before the last point gives -inf")
{
    const Trajectory x(1, {3.0, 0.5});
    CHECK(log_pdf_absorbed_chain(walk_spec(-10, 1, 0.3), x) == neg_inf);
}

TEST_CASE("two-step product")
{
    const Trajectory x(1, {0.5, 3.0});
    const auto terms = log_pdf_absorbed_chain_terms(walk_spec(-15, 1, 0.45), x);
    CHECK(terms.transitions == rel(log_std_normal(0.0, 0.5) + log_std_normal(0.5, 3.0)));
    CHECK(terms.absorption == rel(std::log(0.55)));
}

TEST_CASE("step index is passed to the chain")
{
    AbsorbedChainSpec s;
    s.source_point = {0.0};
    std::vector<std::size_t> seen_q, seen_a;
    s.absorption = [&](std::size_t i, Point) {
        seen_a.push_back(i);
        return 0.5;
    };
    s.log_transition = [&](std::size_t i, Point, Point) {
        seen_q.push_back(i);
        return 0.0;
    };
    const Trajectory x(1, {1.0, 2.0, 3.0});
    CHECK(log_pdf_absorbed_chain(s, x) == rel(3.0 * std::log(0.5)));
    CHECK(seen_q == std::vector<std::size_t>{1, 2, 3});
    CHECK(seen_a == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("vanishing transition density")
{
    AbsorbedChainSpec s = walk_spec(-10, 1, 0.5);
    s.log_transition = [](std::size_t i, Point, Point) { return i == 2 ? neg_inf : 0.0; };
    const double v = log_pdf_absorbed_chain(s, Trajectory(1, {0.0, 0.1, 5.0}));
    CHECK(v == neg_inf);
    CHECK_FALSE(std::isnan(v));
}

TEST_CASE("input errors")
{
    CHECK_THROWS_AS(log_pdf_absorbed_chain(walk_spec(-10, 1, 0), Trajectory(1)), std::invalid_argument);
    CHECK_THROWS_AS(log_pdf_absorbed_chain(walk_spec(-10, 1, 0), Trajectory(2, {1.0, 2.0})), std::invalid_argument);
    CHECK_THROWS_AS(log_pdf_absorbed_chain(walk_spec(-10, 1, 0), Trajectory(1, {NAN})), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory(2, {1.0, 2.0, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory(1, {INFINITY}).validate(), std::invalid_argument);
}

TEST_CASE("line round trip is exact")
{
    Trajectory x(2);
    x.push_back(0.1, -1.0 / 3.0);
    x.push_back(1e-300, 12345.678901234567);
    const std::string line = to_line(x);
    CHECK(line.substr(0, 2) == "2;");
    CHECK(trajectory_from_line(line) == x);
    CHECK_THROWS(trajectory_from_line("2;1.0"));
    CHECK_THROWS(trajectory_from_line("x;1"));
}

TEST_CASE("csv round trip")
{
    std::vector<Trajectory> v{Trajectory(1, {0.5, -2.25, 7.0}), Trajectory(1, {3.0})};
    std::stringstream ss;
    write_csv(ss, v);
    const std::string text = ss.str();
    CHECK(text.rfind("traj_id,step,c0\n", 0) == 0);
    CHECK(read_csv(ss) == v);
}

TEST_CASE("stream keys depend only on their path")
{
    const StreamKey k(42);
    CHECK(k.child({3, 7}).value() == k.child(3).child(7).value());
    CHECK(k.child({3, 7}).value() != k.child({7, 3}).value());
    CHECK(StreamKey(42).child(0).value() != StreamKey(43).child(0).value());
    Rng a = k.child(1).rng(), b = k.child(1).rng();
    for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
}
