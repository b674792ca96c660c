#pragma once

// Simple and very-large Monte Carlo estimation of P(Phi(X) >= l) with exact
// binomial (Clopper-Pearson) intervals.
//
// Trials are split into fixed-size batches; batch b draws from substream
// key.child(b). The OpenMP kernel agrees exactly with the serial reference
// for any thread count.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>

#include "rarepath/rng.hpp"

namespace rarepath {

inline constexpr std::uint64_t mc_batch_size = std::uint64_t{1} << 16;

struct McResult {
    std::uint64_t successes = 0;
    std::uint64_t trials = 0;
    double p_tilde = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    double confidence = 0.95;
    double wall_time = 0.0;
};

template <class M>
concept SamplableModel = requires(const M& m, const typename M::state_type& x, Rng& rng) {
    { m.objective(x) } -> std::convertible_to<double>;
    { m.sample(rng) } -> std::same_as<typename M::state_type>;
};

/// Regularized incomplete beta I_x(a, b), continued fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);
double log_beta(double a, double b);

/// Exact binomial interval at the given two-sided confidence.
std::pair<double, double> clopper_pearson(std::uint64_t successes, std::uint64_t trials, double confidence);

double rmse(std::span<const double> estimates, double p_ref);

/// sqrt(time_mc) rmse_mc / (sqrt(time_lp) rmse_lp).
double quality_ratio(double time_mc, double rmse_mc, double time_lp, double rmse_lp);

McResult make_mc_result(std::uint64_t successes, std::uint64_t trials, double confidence, double wall_time);

namespace detail {

template <SamplableModel M>
std::uint64_t count_batch(const M& model, double level, StreamKey key, std::uint64_t batch, std::uint64_t count)
{
    Rng rng = key.child(batch).rng();
    std::uint64_t hits = 0;
    if constexpr (requires(typename M::state_type& buf) { model.sample_into(buf, rng); }) {
        typename M::state_type buf = model.sample(rng);
        hits += model.objective(buf) >= level;
        for (std::uint64_t i = 1; i < count; ++i) {
            model.sample_into(buf, rng);
            hits += model.objective(buf) >= level;
        }
    } else {
        for (std::uint64_t i = 0; i < count; ++i) hits += model.objective(model.sample(rng)) >= level;
    }
    return hits;
}

inline std::uint64_t batch_count(std::uint64_t trials) { return (trials + mc_batch_size - 1) / mc_batch_size; }
inline std::uint64_t batch_len(std::uint64_t trials, std::uint64_t b)
{
    return std::min(mc_batch_size, trials - b * mc_batch_size);
}

inline void check_trials(std::uint64_t trials)
{
    if (trials < 1) throw std::invalid_argument("Monte Carlo needs at least one trial");
}

/// Successes over batches [first, last), parallel over batches.
template <SamplableModel M>
std::uint64_t count_batches_parallel(const M& model, double level, StreamKey key, std::uint64_t trials,
                                     std::uint64_t first, std::uint64_t last)
{
    std::uint64_t hits = 0;
    const auto lo = static_cast<std::int64_t>(first);
    const auto hi = static_cast<std::int64_t>(last);
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : hits)
    for (std::int64_t b = lo; b < hi; ++b) {
        const auto ub = static_cast<std::uint64_t>(b);
        hits += count_batch(model, level, key, ub, batch_len(trials, ub));
    }
    return hits;
}

} // namespace detail

/// Serial reference implementation.
template <SamplableModel M>
McResult simple_mc_serial(const M& model, std::uint64_t trials, double level, StreamKey key,
                          double confidence = 0.95)
{
    detail::check_trials(trials);
    const auto start = std::chrono::steady_clock::now();
    std::uint64_t hits = 0;
    for (std::uint64_t b = 0; b < detail::batch_count(trials); ++b)
        hits += detail::count_batch(model, level, key, b, detail::batch_len(trials, b));
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return make_mc_result(hits, trials, confidence, t);
}

/// OpenMP kernel; same counts as simple_mc_serial for any thread count.
template <SamplableModel M>
McResult simple_mc(const M& model, std::uint64_t trials, double level, StreamKey key, double confidence = 0.95)
{
    detail::check_trials(trials);
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t hits =
        detail::count_batches_parallel(model, level, key, trials, 0, detail::batch_count(trials));
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return make_mc_result(hits, trials, confidence, t);
}

/// Resumable VLMC state. On-disk layout (little-endian, 56 bytes):
///   char[8] magic "RPVLMC01" | u64 seed | u64 total_trials | u64 batch_size |
///   u64 next_batch | u64 successes | u64 elapsed_ns
struct VlmcCheckpoint {
    std::uint64_t seed = 0;
    std::uint64_t total_trials = 0;
    std::uint64_t batch_size = mc_batch_size;
    std::uint64_t next_batch = 0;
    std::uint64_t successes = 0;
    std::uint64_t elapsed_ns = 0;

    friend bool operator==(const VlmcCheckpoint&, const VlmcCheckpoint&) = default;
};

void save_checkpoint(const std::filesystem::path& path, const VlmcCheckpoint& cp);
std::optional<VlmcCheckpoint> load_checkpoint(const std::filesystem::path& path);

struct VlmcOptions {
    std::optional<std::filesystem::path> checkpoint; ///< resume from / save to this file
    std::uint64_t batches_per_checkpoint = 256;
    std::optional<std::uint64_t> stop_after_batches; ///< interrupt early (testing resumability)
    double confidence = 0.95;
};

/// Very large Monte Carlo; counts identical to simple_mc with StreamKey(seed).
/// Returns nullopt when interrupted by stop_after_batches.
template <SamplableModel M>
std::optional<McResult> run_vlmc(const M& model, std::uint64_t trials, double level, std::uint64_t seed,
                                 const VlmcOptions& opts = {})
{
    detail::check_trials(trials);
    VlmcCheckpoint cp{seed, trials, mc_batch_size, 0, 0, 0};
    if (opts.checkpoint) {
        if (auto saved = load_checkpoint(*opts.checkpoint)) {
            if (saved->seed != seed || saved->total_trials != trials || saved->batch_size != mc_batch_size)
                throw std::runtime_error("VLMC checkpoint belongs to a different run");
            cp = *saved;
        }
    }
    const StreamKey key(seed);
    const std::uint64_t total = detail::batch_count(trials);
    std::uint64_t done_this_call = 0;
    while (cp.next_batch < total) {
        auto step = std::min(opts.batches_per_checkpoint, total - cp.next_batch);
        if (opts.stop_after_batches) {
            if (done_this_call >= *opts.stop_after_batches) return std::nullopt;
            step = std::min(step, *opts.stop_after_batches - done_this_call);
        }
        const auto start = std::chrono::steady_clock::now();
        cp.successes += detail::count_batches_parallel(model, level, key, trials, cp.next_batch, cp.next_batch + step);
        cp.elapsed_ns += static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count());
        cp.next_batch += step;
        done_this_call += step;
        if (opts.checkpoint) save_checkpoint(*opts.checkpoint, cp);
    }
    return make_mc_result(cp.successes, trials, opts.confidence, static_cast<double>(cp.elapsed_ns) * 1e-9);
}

} // namespace rarepath
