#pragma once

// Interacting-particle ("last particle") estimation of P(Phi(X) >= l):
// the ideal driver with an exact conditional sampler, the practical driver
// with a Hastings-Metropolis conditional sampler, and the asymptotic 95%
// confidence interval of the estimator (1 - 1/N)^(m-1).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rarepath/path_space.hpp"
#include "rarepath/rng.hpp"

namespace rarepath {

/// The five operations the practical method needs from a model.
template <class M>
concept PathModel = requires(const M& m, const typename M::state_type& x, Rng& rng) {
    typename M::state_type;
    { m.objective(x) } -> std::convertible_to<double>;
    { m.log_pdf(x) } -> std::convertible_to<double>;
    { m.log_kernel_pdf(x, x) } -> std::convertible_to<double>;
    { m.sample(rng) } -> std::same_as<typename M::state_type>;
    { m.sample_perturbed(x, rng) } -> std::same_as<typename M::state_type>;
};

/// Models that can sample X exactly conditionally on Phi(X) >= t.
template <class M>
concept ExactConditionalModel = requires(const M& m, const typename M::state_type& x, Rng& rng, double t) {
    typename M::state_type;
    { m.objective(x) } -> std::convertible_to<double>;
    { m.sample(rng) } -> std::same_as<typename M::state_type>;
    { m.sample_conditional(t, rng) } -> std::same_as<typename M::state_type>;
};

/// Thrown when a run cannot continue (no survivor, iteration cap, model
/// inconsistency). Carries the iteration at which it happened.
class EstimationAborted : public std::runtime_error {
public:
    EstimationAborted(const std::string& what, std::int64_t iteration)
        : std::runtime_error(what), iteration_(iteration) {}
    std::int64_t iteration() const noexcept { return iteration_; }

private:
    std::int64_t iteration_;
};

struct EstimateResult {
    double p_hat = 1.0;
    std::int64_t m = 1; ///< final iteration index; p_hat = (1 - 1/N)^(m - 1)
    double ci_low = 1.0;
    double ci_high = 1.0;
    std::size_t n_particles = 0;
    int hm_iterations = 0; ///< T; 0 for the ideal driver
    double wall_time = 0.0;
    std::vector<std::size_t> kill_log;    ///< particles resampled per iteration
    std::vector<double> acceptance_log;   ///< mean HM acceptance rate per iteration
    std::vector<double> level_log;        ///< L_1, L_2, ..., L_m
    std::size_t tie_warnings = 0;         ///< iterations where several particles shared L_m
};

/// Handling of several particles attaining L_m. An HM chain that rejects
/// all T proposals returns an exact copy of its start.
enum class TieRule {
    one_per_iteration, ///< resample the lowest-index minimum only; the others go in later iterations
    kill_all,          ///< resample all of them in one iteration
};

struct DriverOptions {
    /// Hard cap on m - 1. Zero selects 10 N |log 1e-12|.
    std::int64_t max_iterations = 0;
    TieRule ties = TieRule::one_per_iteration;
};

/// Asymptotic 95% interval [p exp(-1.96 s), p exp(1.96 s)], s = sqrt(-log p / N).
std::pair<double, double> confidence_interval(double p_hat, std::size_t n_particles);

/// (1 - 1/N)^k.
double estimator_value(std::size_t n_particles, std::int64_t iterations);

/// min(0, log r) for the HM ratio r = f(y) k(y,x) / (f(x) k(x,y)), given the
/// four log terms. A vanishing denominator gives r = 1; a vanishing
/// numerator (with finite denominator) gives r = 0.
inline double log_acceptance(double log_f_x, double log_f_y, double log_k_xy, double log_k_yx) noexcept
{
    const double den = log_f_x + log_k_xy;
    const double num = log_f_y + log_k_yx;
    if (den == neg_inf) return 0.0;
    if (num == neg_inf) return neg_inf;
    return std::min(0.0, num - den);
}

template <class State>
struct HmOutcome {
    State state;
    double acceptance_rate = 0.0;
};

namespace detail {

std::int64_t resolve_max_iterations(const DriverOptions& opts, std::size_t n);
void check_driver_args(std::size_t n, int t_steps, bool with_hm);
void finish_result(EstimateResult& r, std::chrono::steady_clock::time_point start);

inline StreamKey init_stream(StreamKey key, std::size_t i) { return key.child({0, i}); }
inline StreamKey resample_stream(StreamKey key, std::int64_t m, std::size_t i)
{
    return key.child({1, static_cast<std::uint64_t>(m), i});
}

inline double min_value(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

} // namespace detail

/// T rounds of Hastings-Metropolis targeting the law of X given Phi(X) >= t,
/// started at x0. A move counts as accepted when both the threshold and the
/// ratio test pass.
template <PathModel M>
HmOutcome<typename M::state_type> hm_conditional_sample(const M& model, double t,
                                                        const typename M::state_type& x0, int T, Rng& rng)
{
    if (T <= 0) throw std::invalid_argument("HM iteration count must be positive");
    if (!(model.objective(x0) >= t)) throw std::invalid_argument("HM starting point violates the threshold");
    double log_f_x = model.log_pdf(x0);
    if (log_f_x == neg_inf) throw std::invalid_argument("HM starting point has zero density");

    HmOutcome<typename M::state_type> out{x0, 0.0};
    auto& x = out.state;
    int accepted = 0;
    for (int k = 0; k < T; ++k) {
        auto y = model.sample_perturbed(x, rng);
        if (!(model.objective(y) >= t)) continue;
        const double log_f_y = model.log_pdf(y);
        const double la = log_acceptance(log_f_x, log_f_y, model.log_kernel_pdf(x, y), model.log_kernel_pdf(y, x));
        if (la == neg_inf) continue;
        if (std::log(rng.uniform()) < la) {
            x = std::move(y);
            log_f_x = log_f_y;
            ++accepted;
        }
    }
    out.acceptance_rate = static_cast<double>(accepted) / T;
    return out;
}

namespace detail {

/// Shared loop of both drivers; `resample(i, L, survivors, rng)` returns
/// the replacement for particle i and its acceptance rate.
template <class State, class Objective, class Resample>
void run_levels(std::vector<State>& particles, std::vector<double>& phi, double level, StreamKey key,
                std::int64_t max_iterations, TieRule ties, EstimateResult& r, const Objective& objective,
                const Resample& resample)
{
    const std::size_t n = particles.size();
    std::vector<std::size_t> survivors, killed;
    survivors.reserve(n);
    double L = min_value(phi);
    r.level_log.push_back(L);
    std::int64_t m = 1;
    while (L <= level) {
        if (m - 1 >= max_iterations)
            throw EstimationAborted("iteration cap reached before the level was exceeded", m);
        survivors.clear();
        killed.clear();
        for (std::size_t i = 0; i < n; ++i) (phi[i] > L ? survivors : killed).push_back(i);
        if (survivors.empty())
            throw EstimationAborted("all particles share the minimal objective value; no survivor to clone", m);
        if (killed.size() > 1) {
            ++r.tie_warnings;
            if (ties == TieRule::one_per_iteration) killed.resize(1);
        }

        double acc_sum = 0.0;
        for (std::size_t i : killed) {
            Rng rng = resample_stream(key, m, i).rng();
            const std::size_t j = survivors[rng.uniform_index(survivors.size())];
            auto [state, rate] = resample(particles[j], L, rng);
            particles[i] = std::move(state);
            phi[i] = objective(particles[i]);
            acc_sum += rate;
        }
        r.kill_log.push_back(killed.size());
        r.acceptance_log.push_back(acc_sum / static_cast<double>(killed.size()));
        ++m;
        L = min_value(phi);
        r.level_log.push_back(L);
    }
    r.m = m;
}

} // namespace detail

/// Practical method: killed particles are replaced by T-step HM chains
/// started from a uniformly drawn strict survivor, at threshold L_m.
template <PathModel M>
EstimateResult run_practical(const M& model, std::size_t n_particles, int T, double level, StreamKey key,
                             const DriverOptions& opts = {})
{
    detail::check_driver_args(n_particles, T, true);
    const auto start = std::chrono::steady_clock::now();
    EstimateResult r;
    r.n_particles = n_particles;
    r.hm_iterations = T;

    using State = typename M::state_type;
    std::vector<State> particles;
    std::vector<double> phi;
    particles.reserve(n_particles);
    phi.reserve(n_particles);
    for (std::size_t i = 0; i < n_particles; ++i) {
        Rng rng = detail::init_stream(key, i).rng();
        particles.push_back(model.sample(rng));
        if (model.log_pdf(particles.back()) == neg_inf)
            throw EstimationAborted("model density vanishes on one of its own samples", 0);
        phi.push_back(model.objective(particles.back()));
    }

    detail::run_levels(particles, phi, level, key, detail::resolve_max_iterations(opts, n_particles), opts.ties, r,
                       [&](const State& x) { return model.objective(x); },
                       [&](const State& from, double L, Rng& rng) {
                           auto out = hm_conditional_sample(model, L, from, T, rng);
                           return std::pair{std::move(out.state), out.acceptance_rate};
                       });
    detail::finish_result(r, start);
    return r;
}

/// Ideal method: killed particles are replaced by exact conditional draws.
template <ExactConditionalModel M>
EstimateResult run_ideal(const M& model, std::size_t n_particles, double level, StreamKey key,
                         const DriverOptions& opts = {})
{
    detail::check_driver_args(n_particles, 1, false);
    const auto start = std::chrono::steady_clock::now();
    EstimateResult r;
    r.n_particles = n_particles;

    using State = typename M::state_type;
    std::vector<State> particles;
    std::vector<double> phi;
    for (std::size_t i = 0; i < n_particles; ++i) {
        Rng rng = detail::init_stream(key, i).rng();
        particles.push_back(model.sample(rng));
        phi.push_back(model.objective(particles.back()));
    }
    detail::run_levels(particles, phi, level, key, detail::resolve_max_iterations(opts, n_particles), opts.ties, r,
                       [&](const State& x) { return model.objective(x); },
                       [&](const State&, double L, Rng& rng) {
                           return std::pair{model.sample_conditional(L, rng), 1.0};
                       });
    r.acceptance_log.clear();
    detail::finish_result(r, start);
    return r;
}

} // namespace rarepath
