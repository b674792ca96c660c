#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rarepath/analytic_model.hpp"
#include "rarepath/baseline.hpp"
#include "rarepath/harness.hpp"
#include "rarepath/last_particle.hpp"
#include "validation.hpp"

namespace rarepath::validation {

namespace {

constexpr double pi = std::numbers::pi;

template <class... Args>
std::string fmt(const char* f, Args... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::size_t scaled(double n, const SuiteOptions& o)
{
    return static_cast<std::size_t>(std::max(1.0, std::round(n * o.scale)));
}

bool close(double a, double b, double rel)
{
    if (a == b) return true; // also both -inf
    if (!std::isfinite(a) || !std::isfinite(b)) return false;
    return std::abs(a - b) <= rel * std::max(1.0, std::abs(a));
}

// Parameter sets of the test configurations.
Model1DParams m1_moderate() { return {-10.0, 1.0, 1.0, 0.0, 0.0}; }
Kernel1DParams k1_moderate() { return {0.01, 0.0}; }
Model1DParams m1_small() { return {-15.0, 1.0, 1.0, 0.45, 0.0}; }
Kernel1DParams k1_small() { return {0.01, 0.2}; }
/// Short walks with every branch reachable, for the binning tests.
Model1DParams m1_mixed() { return {-4.0, 2.0, 1.0, 0.2, 0.0}; }
Kernel1DParams k1_mixed() { return {0.04, 0.15}; }

Model2DParams m2_moderate() { return {}; }
Model2DParams m2_small()
{
    Model2DParams p;
    p.l = 2.5;
    p.lambda_w = 2.0;
    p.lambda_p = 3.0;
    p.P_w = 0.5;
    p.P_p = 0.7;
    return p;
}
Kernel2DParams k2() { return {}; }

Vec2 pt(const Trajectory& x, std::size_t i) { return {x.point(i)[0], x.point(i)[1]}; }

/// Draws model trajectories until one has a length in [lo, hi] and, if
/// asked, ends inside (or outside) the domain.
template <class Sample, class Pred>
Trajectory pick(Sample&& sample, Pred&& ok, Rng& rng)
{
    for (int tries = 0; tries < 1'000'000; ++tries) {
        Trajectory x = sample(rng);
        if (ok(x)) return x;
    }
    throw std::runtime_error("no trajectory with the requested shape");
}

// Detailed balance -----------------------------------------------------------

template <class M>
CheckResult balance_check(const std::string& name, const M& model, std::size_t pairs, Rng& rng)
{
    std::size_t finite = 0, bad = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        const auto x = model.sample(rng);
        const auto y = model.sample_perturbed(x, rng);
        const double fx = model.log_pdf(x), fy = model.log_pdf(y);
        const double kxy = model.log_kernel_pdf(x, y), kyx = model.log_kernel_pdf(y, x);
        const double lhs = fx + kxy + log_acceptance(fx, fy, kxy, kyx);
        const double rhs = fy + kyx + log_acceptance(fy, fx, kyx, kxy);
        if (std::isfinite(lhs) || std::isfinite(rhs)) {
            ++finite;
            const double err = std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
            worst = std::max(worst, std::isfinite(err) ? err : 1.0);
            if (!close(lhs, rhs, 1e-9)) ++bad;
        }
        if (!std::isfinite(kxy)) ++bad; // a proposal must have positive density under its own kernel
    }
    return {name, bad == 0,
            fmt("%zu pairs, %zu with positive two-way flux, max rel err %.2e", pairs, finite, worst)};
}

// Quadrature -----------------------------------------------------------------

/// Sphere crossings along the ray from z in direction u, as distances.
std::vector<double> ray_breaks(const Model2DParams& p, Vec2 z, Vec2 u, double R)
{
    const double h = z.x * u.x + z.y * u.y;
    const double disc = h * h - (z.x * z.x + z.y * z.y - p.l * p.l);
    std::vector<double> out;
    if (disc > 0.0)
        for (double s : {-h - std::sqrt(disc), -h + std::sqrt(disc)})
            if (s > 0.0 && s < R) out.push_back(s);
    return out;
}

CheckResult quadrature_check(const std::string& name, const Model2DParams& p, Vec2 z)
{
    const double R = std::log(1e4) / p.lambda_w; // the truncated tail holds at most 1e-4 of the mass
    const int n_theta = 720;
    double total = 0.0, analytic = 0.0, worst_ray = 0.0;
    for (int t = 0; t < n_theta; ++t) {
        const double th = 2.0 * pi * (t + 0.5) / n_theta;
        const Vec2 u{std::cos(th), std::sin(th)};
        // radial mass of the ray: q(z, z + r u) r, times 2 pi for the angular measure
        auto f = [&](double r) { return 2.0 * pi * r * std::exp(log_q_2d(p, z, z + r * u)); };
        std::vector<double> edges{0.0};
        for (double b : ray_breaks(p, z, u, R)) edges.push_back(b);
        edges.push_back(R);
        double ray = 0.0;
        for (std::size_t e = 0; e + 1 < edges.size(); ++e)
            ray += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, edges[e], edges[e + 1], 12,
                                                                                  1e-12);
        const double expected = 1.0 - std::exp(-oracle_optical_depth(p, z, z + R * u));
        worst_ray = std::max(worst_ray, std::abs(ray - expected));
        total += ray / n_theta;
        analytic += expected / n_theta;
    }
    const bool ok = std::abs(total - 1.0) <= 1e-3 && analytic >= 0.999 && worst_ray <= 1e-8;
    return {name, ok,
            fmt("integral %.8f (analytic truncated %.8f), worst ray error %.1e", total, analytic, worst_ray)};
}

// Binning --------------------------------------------------------------------

struct LogDensity {
    std::function<Trajectory(Rng&)> sample;
    std::function<double(const Trajectory&)> log_pdf;
};

/// Frequencies of `target.sample` against importance-sampling estimates of
/// the same bin masses from `target.log_pdf` with an independent proposal.
/// The extra last "bin" is the total mass, which must be 1.
CheckResult bin_check(const std::string& name, const LogDensity& target, const LogDensity& proposal,
                      const std::function<int(const Trajectory&)>& bin_of, int n_bins, std::size_t draws, Rng& rng)
{
    std::vector<double> freq(n_bins, 0.0), is_sum(n_bins + 1, 0.0), is_sq(n_bins + 1, 0.0);
    for (std::size_t k = 0; k < draws; ++k) freq[bin_of(target.sample(rng))] += 1.0;
    for (std::size_t k = 0; k < draws; ++k) {
        const Trajectory z = proposal.sample(rng);
        const double lf = target.log_pdf(z);
        const double w = lf == neg_inf ? 0.0 : std::exp(lf - proposal.log_pdf(z));
        const int b = bin_of(z);
        is_sum[b] += w;
        is_sq[b] += w * w;
        is_sum[n_bins] += w;
        is_sq[n_bins] += w * w;
    }
    const double n = static_cast<double>(draws);
    double worst = 0.0;
    int compared = 0;
    for (int b = 0; b <= n_bins; ++b) {
        const double mass_is = is_sum[b] / n;
        const double var_is = std::max(is_sq[b] / n - mass_is * mass_is, 0.0) / n;
        double mass_f = 1.0, var_f = 0.0;
        if (b < n_bins) {
            mass_f = freq[b] / n;
            var_f = mass_f * (1.0 - mass_f) / n;
        }
        if (mass_f == 0.0 && mass_is == 0.0) continue;
        const double se = std::sqrt(var_is + var_f);
        const double z = se > 0.0 ? std::abs(mass_f - mass_is) / se : (mass_f == mass_is ? 0.0 : INFINITY);
        worst = std::max(worst, z);
        ++compared;
    }
    if (std::getenv("RAREPATH_BIN_DEBUG"))
        for (int b = 0; b <= n_bins; ++b)
            std::fprintf(stderr, "  %s bin %d: freq %.5f is %.5f (max w^2 sum %.3g)\n", name.c_str(), b,
                         b < n_bins ? freq[b] / n : 1.0, is_sum[b] / n, is_sq[b]);
    return {name, worst <= 3.0,
            fmt("%d bins incl. total mass (%.4f), %zu draws each side, max |z| %.2f", compared,
                is_sum[n_bins] / n, draws, worst)};
}

// Independent proposals. Each writes its own log-density.

/// 1D walk: N(0, s2) increments, absorption a inside the domain.
LogDensity walk_1d_proposal(const Model1DParams& p, double s2, double a)
{
    auto in = [p](double t) { return p.A < t && t < p.B; };
    LogDensity d;
    d.sample = [=](Rng& rng) {
        Trajectory y(1);
        double pos = p.source;
        for (;;) {
            pos += std::sqrt(s2) * rng.normal();
            y.push_back(pos);
            if (!in(pos) || rng.uniform() < a) return y;
        }
    };
    d.log_pdf = [=](const Trajectory& y) {
        double lg = 0.0, prev = p.source;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double e = y[i] - prev;
            lg += -0.5 * std::log(2.0 * pi * s2) - e * e / (2.0 * s2);
            const bool last = i + 1 == y.size();
            if (!in(y[i])) {
                if (!last) return neg_inf;
            } else {
                lg += std::log(last ? a : 1.0 - a);
            }
            prev = y[i];
        }
        return lg;
    };
    return d;
}

/// Shifted increments around x with variance s2 for n steps, then the walk.
LogDensity shifted_1d_proposal(const Model1DParams& p, const Trajectory& x, double s2, double s2_after, double a)
{
    auto in = [p](double t) { return p.A < t && t < p.B; };
    auto mean_step = [p, x](std::size_t i) { return x[i] - (i == 0 ? p.source : x[i - 1]); };
    const std::size_t n = x.size();
    LogDensity d;
    d.sample = [=](Rng& rng) {
        Trajectory y(1);
        double pos = p.source;
        for (std::size_t i = 0;; ++i) {
            pos += i < n ? mean_step(i) + std::sqrt(s2) * rng.normal() : std::sqrt(s2_after) * rng.normal();
            y.push_back(pos);
            if (!in(pos) || rng.uniform() < a) return y;
        }
    };
    d.log_pdf = [=](const Trajectory& y) {
        double lg = 0.0, prev = p.source;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double mu = i < n ? mean_step(i) : 0.0, v = i < n ? s2 : s2_after;
            const double e = y[i] - prev - mu;
            lg += -0.5 * std::log(2.0 * pi * v) - e * e / (2.0 * v);
            const bool last = i + 1 == y.size();
            if (!in(y[i])) {
                if (!last) return neg_inf;
            } else {
                lg += std::log(last ? a : 1.0 - a);
            }
            prev = y[i];
        }
        return lg;
    };
    return d;
}

bool in_box(const Model2DParams& p, Vec2 z) { return std::abs(z.x) <= p.L / 2 && std::abs(z.y) <= p.L / 2; }

/// Absorption factor of the 2D proposals: always outside the box, a inside.
double box_absorb_log(const Model2DParams& p, Vec2 z, bool last, double a)
{
    if (!in_box(p, z)) return last ? 0.0 : neg_inf;
    return std::log(last ? a : 1.0 - a);
}

/// Isotropic flights with a single exponential rate mu; the polar density
/// mu exp(-mu r) / (2 pi r) keeps the 1/r singularity of q.
double flight_log(double mu, Vec2 from, Vec2 to)
{
    const double r = std::hypot(to.x - from.x, to.y - from.y);
    return std::log(mu) - mu * r - std::log(2.0 * pi * r);
}

Vec2 flight(double mu, Vec2 from, Rng& rng)
{
    const double th = 2.0 * pi * rng.uniform();
    const double r = -std::log1p(-rng.uniform()) / mu;
    return {from.x + r * std::cos(th), from.y + r * std::sin(th)};
}

LogDensity flights_2d_proposal(const Model2DParams& p, double mu, double a)
{
    LogDensity d;
    d.sample = [=](Rng& rng) {
        Trajectory y(2);
        Vec2 pos{-p.s_x, 0.0};
        for (;;) {
            pos = flight(mu, pos, rng);
            y.push_back(pos.x, pos.y);
            if (!in_box(p, pos) || rng.uniform() < a) return y;
        }
    };
    d.log_pdf = [=](const Trajectory& y) {
        double lg = 0.0;
        Vec2 prev{-p.s_x, 0.0};
        for (std::size_t i = 0; i < y.size(); ++i) {
            const Vec2 z = pt(y, i);
            lg += flight_log(mu, prev, z) + box_absorb_log(p, z, i + 1 == y.size(), a);
            prev = z;
        }
        return lg;
    };
    return d;
}

LogDensity gaussian_2d_proposal(const Model2DParams& p, const Trajectory& x, double s2, double mu, double a)
{
    const std::size_t n = x.size();
    LogDensity d;
    d.sample = [=](Rng& rng) {
        Trajectory y(2);
        Vec2 pos{-p.s_x, 0.0};
        for (std::size_t i = 0;; ++i) {
            if (i < n) {
                const Vec2 c = pt(x, i);
                pos = {c.x + std::sqrt(s2) * rng.normal(), c.y + std::sqrt(s2) * rng.normal()};
            } else {
                pos = flight(mu, pos, rng);
            }
            y.push_back(pos.x, pos.y);
            if (!in_box(p, pos) || rng.uniform() < a) return y;
        }
    };
    d.log_pdf = [=](const Trajectory& y) {
        double lg = 0.0;
        Vec2 prev{-p.s_x, 0.0};
        for (std::size_t i = 0; i < y.size(); ++i) {
            const Vec2 z = pt(y, i);
            if (i < n) {
                const Vec2 c = pt(x, i);
                const double dx = z.x - c.x, dy = z.y - c.y;
                lg += -std::log(2.0 * pi * s2) - (dx * dx + dy * dy) / (2.0 * s2);
            } else {
                lg += flight_log(mu, prev, z);
            }
            lg += box_absorb_log(p, z, i + 1 == y.size(), a);
            prev = z;
        }
        return lg;
    };
    return d;
}

int length_class(std::size_t n) { return n == 1 ? 0 : (n <= 3 ? 1 : 2); }
int relative_class(std::size_t m, std::size_t n) { return m < n ? 0 : (m == n ? 1 : 2); }

// Jump-distance law ----------------------------------------------------------

CheckResult jump_law_check(const std::string& name, const Model2DParams& p, Vec2 z, std::size_t draws, Rng& rng)
{
    const int n_r = 10, n_sec = 8, n_theta = 400; // angular quadrature points per sector
    const double lam0 = p.in_sphere(z) ? p.lambda_p : p.lambda_w;
    std::vector<double> edges(n_r + 1);
    for (int k = 0; k < n_r; ++k) edges[k] = -std::log1p(-static_cast<double>(k) / n_r) / lam0;
    edges[n_r] = INFINITY;

    std::vector<double> expected(n_r * n_sec, 0.0);
    for (int s = 0; s < n_sec; ++s)
        for (int t = 0; t < n_theta; ++t) {
            const double th = 2.0 * pi * (s + (t + 0.5) / n_theta) / n_sec;
            const Vec2 u{std::cos(th), std::sin(th)};
            double prev_survival = 1.0;
            for (int k = 1; k <= n_r; ++k) {
                const double surv = k == n_r ? 0.0 : std::exp(-oracle_optical_depth(p, z, z + edges[k] * u));
                expected[s * n_r + k - 1] += (prev_survival - surv) / (n_theta * n_sec);
                prev_survival = surv;
            }
        }

    std::vector<double> counts(n_r * n_sec, 0.0);
    for (std::size_t k = 0; k < draws; ++k) {
        const Vec2 d = sample_jump_2d(p, z, rng).point - z;
        const double r = norm(d);
        double th = std::atan2(d.y, d.x);
        if (th < 0.0) th += 2.0 * pi;
        const int s = std::min(n_sec - 1, static_cast<int>(th / (2.0 * pi) * n_sec));
        const int b = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), r) - edges.begin()) - 1;
        counts[s * n_r + std::min(b, n_r - 1)] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double e = expected[c] * static_cast<double>(draws);
        chi2 += (counts[c] - e) * (counts[c] - e) / e;
    }
    const double dof = static_cast<double>(counts.size() - 1);
    const double pval = boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));
    return {name, pval > 1e-3, fmt("chi2 %.1f on %.0f dof, p = %.3f, %zu draws", chi2, dof, pval, draws)};
}

// Helpers for the absorption trace ---------------------------------------------

double trace_log(const std::vector<double>& a)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = i + 1 == a.size() ? a[i] : 1.0 - a[i];
        s += v > 0.0 ? std::log(v) : neg_inf;
    }
    return s;
}

template <class M>
CheckResult stationarity_check(const std::string& name, const M& model, std::size_t n, int T, Rng& rng)
{
    std::vector<double> moved, fresh;
    moved.reserve(n);
    fresh.reserve(n);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        auto out = hm_conditional_sample(model, neg_inf, model.sample(rng), T, rng);
        acc += out.acceptance_rate;
        moved.push_back(model.objective(out.state));
        fresh.push_back(model.objective(model.sample(rng)));
    }
    const double pval = ks_two_sample_pvalue(moved, fresh);
    return {name, pval > 0.01,
            fmt("KS p = %.3f on %zu chains of %d steps (mean acceptance %.2f)", pval, n, T, acc / n)};
}

} // namespace

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    const double en = std::sqrt(na * nb / (na + nb));
    const double lambda = (en + 0.12 + 0.11 / en) * d;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12 * std::abs(sum) || std::abs(term) < 1e-300) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

std::vector<CheckResult> detailed_balance(const SuiteOptions& o)
{
    Rng rng = StreamKey(o.seed).child(1).rng();
    const std::size_t pairs = scaled(1000, o);
    return {
        balance_check("balance 1D P=0", Model1D(m1_moderate(), k1_moderate()), pairs, rng),
        balance_check("balance 1D P=0.45 Q=0.2", Model1D(m1_small(), k1_small()), pairs, rng),
        balance_check("balance 2D moderate", Model2D(m2_moderate(), k2()), pairs, rng),
        balance_check("balance 2D small", Model2D(m2_small(), k2()), pairs, rng),
    };
}

std::vector<CheckResult> quadrature_normalization(const SuiteOptions&)
{
    std::vector<CheckResult> out;
    for (auto [label, p] : {std::pair{"moderate", m2_moderate()}, std::pair{"small", m2_small()}}) {
        const double l = p.l;
        const std::pair<const char*, Vec2> starts[] = {
            {"source", p.source()},
            {"water near sphere", {-(l + 0.05), 0.3}},
            {"poison centre", {0.0, 0.0}},
            {"poison near edge", {0.0, -(l - 0.05)}},
            {"box corner", {0.5 * p.L - 0.1, 0.5 * p.L - 0.1}},
        };
        for (const auto& [where, z] : starts)
            out.push_back(quadrature_check(fmt("q normalization %s, %s", label, where), p, z));
    }
    return out;
}

std::vector<CheckResult> geometry(const SuiteOptions& o)
{
    std::vector<CheckResult> out;
    auto near = [](Vec2 a, Vec2 b) { return std::abs(a.x - b.x) <= 1e-9 && std::abs(a.y - b.y) <= 1e-9; };
    const Vec2 o0{0.0, 0.0};
    const double s2 = std::sqrt(2.0);

    {
        auto h = segment_sphere_geometry(o0, 2.0, {-3.0, 0.0}, {3.0, 0.0});
        out.push_back({"chord through the centre", h.intersects && h.c1 && h.c2 && near(*h.c1, {-2.0, 0.0}) &&
                                                         near(*h.c2, {2.0, 0.0}), "c1=(-2,0) c2=(2,0)"});
    }
    {
        auto h = segment_sphere_geometry(o0, 2.0, {-3.0, -3.0}, {3.0, 3.0});
        out.push_back({"diagonal chord",
                       h.intersects && h.c1 && h.c2 && near(*h.c1, {-s2, -s2}) && near(*h.c2, {s2, s2}),
                       "c1=-(sqrt2,sqrt2) c2=(sqrt2,sqrt2)"});
    }
    {
        auto h = segment_sphere_geometry(o0, 2.0, {0.0, 0.0}, {5.0, 0.0});
        auto g = segment_sphere_geometry(o0, 2.0, {0.0, 3.0}, {0.0, 0.5});
        out.push_back({"single crossings", h.intersects && h.c && near(*h.c, {2.0, 0.0}) && g.intersects && g.c &&
                                               near(*g.c, {0.0, 2.0}),
                       "inside-out (2,0), outside-in (0,2)"});
    }
    {
        auto miss = segment_sphere_geometry(o0, 2.0, {-3.0, 3.0}, {3.0, 3.0});
        auto shortseg = segment_sphere_geometry(o0, 2.0, {-5.0, 0.0}, {-3.0, 0.0});
        auto inside = segment_sphere_geometry(o0, 2.0, {-1.0, 0.0}, {1.0, 0.5});
        out.push_back({"non-crossing segments", !miss.intersects && !shortseg.intersects && !inside.intersects,
                       "line miss, short segment, interior segment"});
    }
    {
        auto h = segment_sphere_geometry({1.0, 1.0}, 1.0, {1.0, -1.0}, {1.0, 3.0});
        out.push_back({"off-centre circle", h.intersects && h.c1 && h.c2 && near(*h.c1, {1.0, 0.0}) &&
                                                near(*h.c2, {1.0, 2.0}), "c1=(1,0) c2=(1,2)"});
    }
    {
        const Model2DParams p;
        Trajectory x(2, {3.0, 0.2, 0.0, 4.0});
        const bool ok = std::abs(objective_2d(p, x) - 0.3) <= 1e-9 && region_of(p, {5.0, 5.0}) == Region::water &&
                        region_of(p, {5.0, 5.0 + 1e-9}) == Region::outside &&
                        region_of(p, {2.0, 0.0}) == Region::poison &&
                        region_of(p, {2.0 + 1e-9, 0.0}) == Region::water;
        out.push_back({"regions and detector objective", ok, "closed box and disc; objective l_d - min distance"});
    }
    {
        Rng rng = StreamKey(o.seed).child(3).rng();
        std::size_t cases = scaled(100000, o), bad = 0, crossing = 0;
        double worst = 0.0;
        const double l = 2.0;
        for (std::size_t k = 0; k < cases; ++k) {
            const Vec2 v{10.0 * rng.uniform() - 5.0, 10.0 * rng.uniform() - 5.0};
            const Vec2 w{10.0 * rng.uniform() - 5.0, 10.0 * rng.uniform() - 5.0};
            const auto h = segment_sphere_geometry(o0, l, v, w);
            const auto g = oracle_crossing(l, v, w);
            if (h.intersects != g.crosses) {
                ++bad;
                continue;
            }
            if (!g.crosses) continue;
            ++crossing;
            if (h.c) {
                worst = std::max({worst, norm(*h.c - g.single), std::abs(norm(*h.c) - l)});
            } else {
                worst = std::max({worst, norm(*h.c1 - g.first), norm(*h.c2 - g.second), std::abs(norm(*h.c1) - l),
                                  std::abs(norm(*h.c2) - l)});
            }
        }
        out.push_back({"random segments vs quadratic roots", bad == 0 && worst <= 1e-9,
                       fmt("%zu segments, %zu crossing, %zu disagreements, max error %.1e", cases, crossing, bad,
                           worst)});
    }
    return out;
}

std::vector<CheckResult> sampler_pdf_agreement(const SuiteOptions& o)
{
    std::vector<CheckResult> out;
    Rng rng = StreamKey(o.seed).child(4).rng();
    const std::size_t draws = scaled(200000, o);

    auto bins_1d = [](const Model1DParams& p) {
        return [p](const Trajectory& y) {
            const double e = y[y.size() - 1];
            const int region = e <= p.A ? 0 : (e >= p.B ? 1 : 2);
            return length_class(y.size()) * 3 + region;
        };
    };
    for (auto [label, p, k] : {std::tuple{"P=0", m1_moderate(), k1_moderate()},
                               std::tuple{"P=0.2 Q=0.15", m1_mixed(), k1_mixed()}}) {
        const Model1D model(p, k);
        const LogDensity target{[&](Rng& r) { return model.sample(r); },
                                [&](const Trajectory& y) { return model.log_pdf(y); }};
        out.push_back(bin_check(fmt("1D sampler vs pdf, %s", label), target,
                                walk_1d_proposal(p, (p.P > 0.0 ? 1.1 : 1.02) * p.sigma2, p.P), bins_1d(p), 9, draws,
                                rng));
    }

    // kernels around historical paths absorbed inside and outside the domain
    const Model1D mixed(m1_mixed(), k1_mixed());
    const auto p1 = m1_mixed();
    auto sampler1 = [&](Rng& r) { return mixed.sample(r); };
    const Trajectory x_in =
        pick(sampler1, [&](const Trajectory& x) { return x.size() >= 3 && x.size() <= 5 && p1.in_domain(x[x.size() - 1]); }, rng);
    const Trajectory x_out =
        pick(sampler1, [&](const Trajectory& x) { return x.size() >= 3 && x.size() <= 5 && !p1.in_domain(x[x.size() - 1]); }, rng);
    const Model1D moderate(m1_moderate(), k1_moderate());
    const Trajectory x_p0 = pick([&](Rng& r) { return moderate.sample(r); },
                                 [](const Trajectory& x) { return x.size() >= 3 && x.size() <= 12; }, rng);
    const std::tuple<const char*, const Model1D*, const Trajectory*> kernel_cases[] = {
        {"history absorbed inside", &mixed, &x_in},
        {"history leaving the domain", &mixed, &x_out},
        {"P=0 history", &moderate, &x_p0},
    };
    for (const auto& [label, model, x] : kernel_cases) {
        const auto& p = model->params();
        const auto& k = model->kernel_params();
        const Trajectory& hx = *x;
        const std::size_t n = hx.size();
        const LogDensity target{[&](Rng& r) { return model->sample_perturbed(hx, r); },
                                [&](const Trajectory& y) { return model->log_kernel_pdf(hx, y); }};
        auto bins = [p, n](const Trajectory& y) { return relative_class(y.size(), n) * 2 + (p.in_domain(y[y.size() - 1]) ? 1 : 0); };
        out.push_back(bin_check(fmt("1D kernel vs pdf, %s", label), target,
                                shifted_1d_proposal(p, hx, 1.5 * k.sigma2_tilde, (p.P > 0.0 ? 1.3 : 1.02) * p.sigma2,
                                                    p.P > 0.0 ? 0.25 : 0.0), bins, 6,
                                draws, rng));
    }

    for (auto [label, p] : {std::pair{"moderate", m2_moderate()}, std::pair{"small", m2_small()}}) {
        const Model2D model(p, k2());
        const LogDensity target{[&](Rng& r) { return model.sample(r); },
                                [&](const Trajectory& y) { return model.log_pdf(y); }};
        auto bins = [p](const Trajectory& y) { return length_class(y.size()) * 2 + (in_box(p, pt(y, y.size() - 1)) ? 1 : 0); };
        out.push_back(bin_check(fmt("2D sampler vs pdf, %s", label), target,
                                flights_2d_proposal(p, p.lambda_w, p.P_w), bins, 6, draws, rng));

        auto sampler2 = [&](Rng& r) { return model.sample(r); };
        const Trajectory h_box = pick(sampler2, [&](const Trajectory& x) {
            return x.size() >= 2 && x.size() <= 4 && in_box(p, pt(x, x.size() - 1));
        }, rng);
        const Trajectory h_out = pick(sampler2, [&](const Trajectory& x) {
            return x.size() >= 2 && x.size() <= 4 && !in_box(p, pt(x, x.size() - 1));
        }, rng);
        for (auto [hlabel, hx] : {std::pair{"absorbed in the box", &h_box}, std::pair{"leaving the box", &h_out}}) {
            const Trajectory& x = *hx;
            const std::size_t n = x.size();
            const LogDensity ktarget{[&](Rng& r) { return model.sample_perturbed(x, r); },
                                     [&](const Trajectory& y) { return model.log_kernel_pdf(x, y); }};
            auto kbins = [p, n](const Trajectory& y) {
                return relative_class(y.size(), n) * 2 + (in_box(p, pt(y, y.size() - 1)) ? 1 : 0);
            };
            out.push_back(bin_check(fmt("2D kernel vs pdf, %s, history %s", label, hlabel), ktarget,
                                    gaussian_2d_proposal(p, x, 1.5 * k2().sigma2_tilde, 0.8 * p.lambda_w, 0.3), kbins,
                                    6, draws, rng));
        }
    }
    return out;
}

std::vector<CheckResult> kernel_reduction(const SuiteOptions& o)
{
    Rng rng = StreamKey(o.seed).child(5).rng();
    const auto p = m1_moderate();
    const auto k = k1_moderate();
    const Model1D model(p, k);
    const std::size_t pairs = scaled(1000, o);
    std::size_t bad = 0, finite = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const Trajectory x = model.sample(rng);
        const Trajectory y = i % 2 == 0 ? model.sample_perturbed(x, rng) : model.sample(rng);
        const double a = oracle_log_kernel_1d_p0(p, k, x, y);
        const double b = oracle_log_kernel_1d(p, k, x, y);
        const double c = model.log_kernel_pdf(x, y);
        if (std::isfinite(a)) {
            ++finite;
            worst = std::max({worst, std::abs(a - b) / std::max(1.0, std::abs(a)),
                              std::abs(a - c) / std::max(1.0, std::abs(a))});
        }
        if (!close(a, b, 1e-12) || !close(a, c, 1e-12)) ++bad;
    }
    return {{"P=0 kernel formula equals general formula at Q=0", bad == 0,
             fmt("%zu pairs (%zu finite), max rel difference %.1e, library agrees", pairs, finite, worst)}};
}

std::vector<CheckResult> clopper_pearson_coverage(const SuiteOptions&)
{
    std::vector<CheckResult> out;
    for (double p : {0.5, 0.1, 0.01})
        for (std::uint64_t n : {10u, 100u}) {
            double cover = 0.0;
            for (std::uint64_t k = 0; k <= n; ++k) {
                const double lpmf = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                                    (k ? k * std::log(p) : 0.0) + (n - k ? (n - k) * std::log1p(-p) : 0.0);
                const auto [lo, hi] = clopper_pearson(k, n, 0.95);
                if (lo <= p && p <= hi) cover += std::exp(lpmf);
            }
            out.push_back({fmt("Clopper-Pearson coverage p=%g n=%llu", p, static_cast<unsigned long long>(n)),
                           cover >= 0.95, fmt("exact coverage %.5f", cover)});
        }
    return out;
}

std::vector<CheckResult> interval_values(const SuiteOptions&)
{
    std::vector<CheckResult> out;
    {
        const auto [lo, hi] = confidence_interval(0.13, 200);
        out.push_back({"interval at p=0.13, N=200", std::abs(lo - 0.106652) <= 5e-7 && std::abs(hi - 0.158459) <= 5e-7,
                       fmt("[%.6f, %.6f], expected [0.106652, 0.158459]", lo, hi)});
    }
    {
        const double v = estimator_value(200, 14);
        out.push_back({"estimator (1-1/200)^14", std::abs(v - 0.932230) <= 5e-7 && v == std::pow(0.995, 14),
                       fmt("%.6f, expected 0.932230", v)});
    }
    {
        const auto [lo, hi] = confidence_interval(1.0, 50);
        const auto [lo2, hi2] = confidence_interval(6.6e-8, 200);
        // hand evaluation: exp(+-1.96 sqrt(-log p / N))
        const double s = std::sqrt(-std::log(6.6e-8) / 200.0);
        out.push_back({"interval degenerate at p=1 and deep in the tail",
                       lo == 1.0 && hi == 1.0 && close(lo2, 6.6e-8 * std::exp(-1.96 * s), 1e-14) &&
                           close(hi2, 6.6e-8 * std::exp(1.96 * s), 1e-14),
                       fmt("[%.4e, %.4e] at p=6.6e-8", lo2, hi2)});
    }
    return out;
}

std::vector<CheckResult> determinism(const SuiteOptions& o)
{
    std::vector<CheckResult> out;
    auto run = [&](ExperimentConfig c, int workers) {
        c.workers = workers;
        c.finalize();
        return to_json(run_experiment(c), false).dump();
    };
    ExperimentConfig c1;
    c1.seed = o.seed;
    c1.N = 40;
    c1.T = 20;
    c1.replicates = 4;
    c1.p_ref = 0.13;
    const auto a = run(c1, 1), b = run(c1, 1), c = run(c1, 3);
    out.push_back({"1D experiment report is reproducible", a == b && a == c,
                   fmt("%zu-byte report; serial twice and 3 workers", a.size())});

    ExperimentConfig c2;
    c2.model = ModelKind::two_d;
    c2.seed = o.seed + 1;
    c2.N = 30;
    c2.T = 10;
    c2.replicates = 3;
    c2.mc_replicates = 2;
    c2.mc_J = 20000;
    const auto d = run(c2, 1), e = run(c2, 2);
    out.push_back({"2D experiment with MC companion is reproducible", d == e, fmt("%zu-byte report", d.size())});

    const Model2D m(m2_moderate(), k2());
    const auto s = simple_mc_serial(m, 150000, 0.0, StreamKey(o.seed));
    const auto par = simple_mc(m, 150000, 0.0, StreamKey(o.seed));
    out.push_back({"parallel simple MC equals serial reference", s.successes == par.successes,
                   fmt("%llu successes in both", static_cast<unsigned long long>(s.successes))});
    return out;
}

std::vector<CheckResult> model_consistency(const SuiteOptions& o)
{
    std::vector<CheckResult> out;
    Rng rng = StreamKey(o.seed).child(9).rng();
    const std::size_t pairs = scaled(2000, o);

    for (auto [label, p, k] : {std::tuple{"P=0", m1_moderate(), k1_moderate()},
                               std::tuple{"P=0.45 Q=0.2", m1_small(), k1_small()},
                               std::tuple{"P=0.2 Q=0.15", m1_mixed(), k1_mixed()}}) {
        const Model1D model(p, k);
        std::size_t bad = 0;
        for (std::size_t i = 0; i < pairs; ++i) {
            const Trajectory x = model.sample(rng);
            const Trajectory y = i % 2 == 0 ? model.sample_perturbed(x, rng) : model.sample(rng);
            if (!close(model.log_pdf(x), oracle_log_pdf_1d(p, x), 1e-12)) ++bad;
            if (!close(model.log_kernel_pdf(x, y), oracle_log_kernel_1d(p, k, x, y), 1e-12)) ++bad;
        }
        out.push_back({fmt("1D pdf and kernel vs direct formulas, %s", label), bad == 0,
                       fmt("%zu pairs, %zu mismatches", pairs, bad)});
    }
    for (auto [label, p] : {std::pair{"moderate", m2_moderate()}, std::pair{"small", m2_small()}}) {
        const Model2D model(p, k2());
        std::size_t bad = 0;
        for (std::size_t i = 0; i < pairs; ++i) {
            const Trajectory x = model.sample(rng);
            const Trajectory y = i % 2 == 0 ? model.sample_perturbed(x, rng) : model.sample(rng);
            if (!close(model.log_pdf(x), oracle_log_pdf_2d(p, x), 1e-9)) ++bad;
            if (!close(model.log_kernel_pdf(x, y), oracle_log_kernel_2d(p, k2(), x, y), 1e-9)) ++bad;
        }
        out.push_back({fmt("2D pdf and kernel vs direct formulas, %s", label), bad == 0,
                       fmt("%zu pairs, %zu mismatches", pairs, bad)});
    }

    const std::size_t jumps = scaled(1'000'000, o);
    for (auto [label, p] : {std::pair{"moderate", m2_moderate()}, std::pair{"small", m2_small()}}) {
        out.push_back(jump_law_check(fmt("jump law %s, from water", label), p, {-p.l - 0.7, 0.4}, jumps, rng));
        out.push_back(jump_law_check(fmt("jump law %s, from poison", label), p, {0.5, -0.3}, jumps, rng));
    }

    {
        const std::size_t total = scaled(10'000'000, o);
        int worst = 0;
        for (auto p : {m2_moderate(), m2_small()})
            for (std::size_t k = 0; k < total / 2; ++k) {
                const Vec2 z{p.L * (rng.uniform() - 0.5), p.L * (rng.uniform() - 0.5)};
                worst = std::max(worst, sample_jump_2d(p, z, rng).distance_samplings);
            }
        out.push_back({"at most three distance samplings per flight", worst <= 3,
                       fmt("max %d over %zu flights from uniform points of the box", worst, total)});
    }

    {
        const std::size_t n = scaled(10000, o);
        std::size_t bad = 0;
        for (auto p : {m2_moderate(), m2_small()}) {
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> trace;
                const Trajectory x = sample_trajectory_2d(p, rng, &trace);
                const auto terms = log_pdf_absorbed_chain_terms(ModelChain2D(p), x);
                if (trace.size() != x.size() || !close(trace_log(trace), terms.absorption, 1e-12)) ++bad;
                std::vector<double> ktrace;
                const Trajectory y = sample_perturbed_2d(p, k2(), x, rng, &ktrace);
                const auto kterms = log_pdf_absorbed_chain_terms(KernelChain2D(p, k2(), x), y);
                if (ktrace.size() != y.size() || !close(trace_log(ktrace), kterms.absorption, 1e-12)) ++bad;
            }
        }
        out.push_back({"absorption decisions replay into the density", bad == 0,
                       fmt("%zu model and %zu kernel trajectories, %zu mismatches", 2 * n, 2 * n, bad)});
    }

    {
        const std::size_t n = scaled(10000, o);
        out.push_back(stationarity_check("HM leaves the 1D law invariant, P=0.45",
                                         Model1D(m1_small(), k1_small()), n, 10, rng));
        out.push_back(stationarity_check("HM leaves the 1D law invariant, P=0.2",
                                         Model1D(m1_mixed(), k1_mixed()), n, 10, rng));
        out.push_back(stationarity_check("HM leaves the 2D law invariant, moderate",
                                         Model2D(m2_moderate(), k2()), n, 10, rng));
        out.push_back(stationarity_check("HM leaves the 2D law invariant, small", Model2D(m2_small(), k2()), n, 10,
                                         rng));
    }
    return out;
}

const std::vector<Suite>& suites()
{
    static const std::vector<Suite> all{
        {"detailed_balance", detailed_balance},
        {"quadrature", quadrature_normalization},
        {"geometry", geometry},
        {"binning", sampler_pdf_agreement},
        {"kernel_reduction", kernel_reduction},
        {"clopper_pearson", clopper_pearson_coverage},
        {"interval_values", interval_values},
        {"determinism", determinism},
        {"model_consistency", model_consistency},
    };
    return all;
}

std::vector<CheckResult> run_all(const SuiteOptions& o)
{
    std::vector<CheckResult> out;
    for (const auto& s : suites()) {
        auto r = s.run(o);
        for (auto& c : r) c.name = s.id + ": " + c.name;
        out.insert(out.end(), r.begin(), r.end());
    }
    return out;
}

} // namespace rarepath::validation
