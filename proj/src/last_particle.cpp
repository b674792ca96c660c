#include "rarepath/last_particle.hpp"

#include <tuple>

namespace rarepath {

std::pair<double, double> confidence_interval(double p_hat, std::size_t n_particles)
{
    if (!(p_hat > 0.0 && p_hat <= 1.0)) throw std::invalid_argument("p_hat must lie in (0, 1]");
    if (n_particles < 1) throw std::invalid_argument("N must be positive");
    const double half = 1.96 * std::sqrt(-std::log(p_hat) / static_cast<double>(n_particles));
    return {p_hat * std::exp(-half), p_hat * std::exp(half)};
}

double estimator_value(std::size_t n_particles, std::int64_t iterations)
{
    return std::pow(1.0 - 1.0 / static_cast<double>(n_particles), static_cast<double>(iterations));
}

namespace detail {

std::int64_t resolve_max_iterations(const DriverOptions& opts, std::size_t n)
{
    if (opts.max_iterations > 0) return opts.max_iterations;
    return static_cast<std::int64_t>(std::ceil(10.0 * static_cast<double>(n) * std::abs(std::log(1e-12))));
}

void check_driver_args(std::size_t n, int t_steps, bool with_hm)
{
    if (n < 2) throw std::invalid_argument("at least two particles are required");
    if (with_hm && t_steps < 1) throw std::invalid_argument("HM iteration count must be positive");
}

void finish_result(EstimateResult& r, std::chrono::steady_clock::time_point start)
{
    r.p_hat = estimator_value(r.n_particles, r.m - 1);
    std::tie(r.ci_low, r.ci_high) = confidence_interval(r.p_hat, r.n_particles);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace detail
} // namespace rarepath
