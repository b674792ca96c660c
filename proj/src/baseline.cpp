#include "rarepath/baseline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <tuple>

namespace rarepath {

namespace {

constexpr double cf_tolerance = 1e-14;
constexpr int cf_max_iterations = 1'000'000;
constexpr double max_upward_shift = 5000.0;
constexpr double tiny = 1e-300;

// Stirling remainder lnGamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2], z >= 20.
double stirling_remainder(double z)
{
    const double z2 = z * z;
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z;
}

constexpr double stirling_min = 20.0;

// Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x)
{
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= cf_max_iterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < cf_tolerance) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

void put_u64(std::array<unsigned char, 56>& buf, std::size_t off, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) buf[off + i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint64_t get_u64(const std::array<unsigned char, 56>& buf, std::size_t off)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[off + i]) << (8 * i);
    return v;
}

constexpr char checkpoint_magic[8] = {'R', 'P', 'V', 'L', 'M', 'C', '0', '1'};

} // namespace

double log_beta(double a, double b)
{
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("log_beta needs positive arguments");
    const double small = std::min(a, b);
    const double big = std::max(a, b);
    const double sum = a + b;
    if (small >= stirling_min) {
        const double log_small = std::log(small / sum);
        const double log_big = std::log1p(-small / sum);
        return 0.5 * std::log(2.0 * std::numbers::pi) + (small - 0.5) * log_small + (big - 0.5) * log_big -
               0.5 * std::log(sum) + stirling_remainder(a) + stirling_remainder(b) - stirling_remainder(sum);
    }
    if (big >= stirling_min) {
        // lnGamma(big) - lnGamma(big + small) without cancelling two huge terms.
        const double diff = -(big - 0.5) * std::log1p(small / big) - small * std::log(sum) + small +
                            stirling_remainder(big) - stirling_remainder(sum);
        return std::lgamma(small) + diff;
    }
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(sum);
}

double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete beta needs x in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
    // Just past the switch point with x < 1/2: raise a with
    // I_x(a, b) = I_x(a + 1, b) + x^a (1 - x)^b / (a B(a, b)) until the direct
    // fraction applies.
    const double shift = std::floor((x * (a + b + 2.0) - a - 1.0) / (1.0 - x)) + 1.0;
    if (x < 0.5 && shift <= max_upward_shift) {
        const double log_x = std::log(x);
        double log_term = log_front - std::log(a);
        double sum = 0.0;
        for (double j = 0.0; j < shift; j += 1.0) {
            sum += std::exp(log_term);
            log_term += log_x + std::log((a + b + j) / (a + j + 1.0));
        }
        return sum + std::exp(log_term) * beta_continued_fraction(a + shift, b, x);
    }
    return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

namespace {

// x in [0, 1] with F(x) = target for increasing F, by bisection to relative
// width 1e-12.
template <class F>
double bisect_increasing(F&& f, double target)
{
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-12 * hi) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace

std::pair<double, double> clopper_pearson(std::uint64_t successes, std::uint64_t trials, double confidence)
{
    if (trials < 1 || successes > trials) throw std::invalid_argument("Clopper-Pearson needs 0 <= k <= n, n >= 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0, 1)");
    const double alpha = 1.0 - confidence;
    const auto k = static_cast<double>(successes);
    const auto n = static_cast<double>(trials);
    const double low =
        successes == 0
            ? 0.0
            : bisect_increasing([&](double x) { return regularized_incomplete_beta(k, n - k + 1.0, x); }, 0.5 * alpha);
    const double high =
        successes == trials
            ? 1.0
            : bisect_increasing([&](double x) { return regularized_incomplete_beta(k + 1.0, n - k, x); },
                                1.0 - 0.5 * alpha);
    return {low, high};
}

double rmse(std::span<const double> estimates, double p_ref)
{
    if (estimates.empty()) throw std::invalid_argument("RMSE of an empty list");
    double acc = 0.0;
    for (double e : estimates) acc += (p_ref - e) * (p_ref - e);
    return std::sqrt(acc / static_cast<double>(estimates.size()));
}

double quality_ratio(double time_mc, double rmse_mc, double time_lp, double rmse_lp)
{
    if (!(time_mc > 0.0 && rmse_mc > 0.0 && time_lp > 0.0 && rmse_lp > 0.0))
        throw std::invalid_argument("quality ratio needs positive times and errors");
    return std::sqrt(time_mc) * rmse_mc / (std::sqrt(time_lp) * rmse_lp);
}

McResult make_mc_result(std::uint64_t successes, std::uint64_t trials, double confidence, double wall_time)
{
    McResult r;
    r.successes = successes;
    r.trials = trials;
    r.p_tilde = static_cast<double>(successes) / static_cast<double>(trials);
    r.confidence = confidence;
    std::tie(r.ci_low, r.ci_high) = clopper_pearson(successes, trials, confidence);
    r.wall_time = wall_time;
    return r;
}

void save_checkpoint(const std::filesystem::path& path, const VlmcCheckpoint& cp)
{
    std::array<unsigned char, 56> buf{};
    std::memcpy(buf.data(), checkpoint_magic, 8);
    put_u64(buf, 8, cp.seed);
    put_u64(buf, 16, cp.total_trials);
    put_u64(buf, 24, cp.batch_size);
    put_u64(buf, 32, cp.next_batch);
    put_u64(buf, 40, cp.successes);
    put_u64(buf, 48, cp.elapsed_ns);
    const auto tmp = std::filesystem::path(path).concat(".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write checkpoint " + tmp.string());
        os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!os) throw std::runtime_error("short write on checkpoint " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::optional<VlmcCheckpoint> load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) return std::nullopt;
    std::array<unsigned char, 56> buf{};
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() != static_cast<std::streamsize>(buf.size()) || std::memcmp(buf.data(), checkpoint_magic, 8) != 0)
        throw std::runtime_error("malformed VLMC checkpoint " + path.string());
    VlmcCheckpoint cp;
    cp.seed = get_u64(buf, 8);
    cp.total_trials = get_u64(buf, 16);
    cp.batch_size = get_u64(buf, 24);
    cp.next_batch = get_u64(buf, 32);
    cp.successes = get_u64(buf, 40);
    cp.elapsed_ns = get_u64(buf, 48);
    return cp;
}

} // namespace rarepath
