#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace rarepath {

/// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Random stream used by every sampler. Wraps a 64-bit Mersenne twister and
/// keeps the distribution objects alive between calls.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return uniform_(engine_); }
    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
    double exponential(double rate) { return exponential_(engine_) / rate; }
    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform index in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n)
    {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::exponential_distribution<double> exponential_{1.0};
};

/// Counter-based substream derivation. A key names a position in a tree of
/// streams (master seed -> replicate -> iteration -> particle ...); the
/// stream for a node depends only on its path, never on scheduling.
class StreamKey {
public:
    constexpr explicit StreamKey(std::uint64_t master) noexcept : value_(splitmix64(master)) {}

    constexpr StreamKey child(std::uint64_t index) const noexcept
    {
        return StreamKey(Raw{}, splitmix64(value_ ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
    }

    constexpr StreamKey child(std::initializer_list<std::uint64_t> path) const noexcept
    {
        StreamKey k = *this;
        for (auto i : path) k = k.child(i);
        return k;
    }

    Rng rng() const { return Rng(value_); }
    constexpr std::uint64_t value() const noexcept { return value_; }

private:
    struct Raw {};
    constexpr StreamKey(Raw, std::uint64_t v) noexcept : value_(v) {}
    std::uint64_t value_;
};

} // namespace rarepath
