#include <cmath>
#include <numbers>
#include <stdexcept>

#include "validation.hpp"

namespace rarepath::validation {

namespace {

constexpr double pi = std::numbers::pi;

double log_phi(double mean, double var, double t)
{
    return -0.5 * std::log(2.0 * pi * var) - (t - mean) * (t - mean) / (2.0 * var);
}

double log_phi2(Vec2 mean, double var, Vec2 t)
{
    const double dx = t.x - mean.x, dy = t.y - mean.y;
    return -std::log(2.0 * pi * var) - (dx * dx + dy * dy) / (2.0 * var);
}

double ln(double v) { return v > 0.0 ? std::log(v) : neg_inf; }

double ind(bool b) { return b ? 1.0 : 0.0; }

bool in_d(const Model1DParams& p, double t) { return p.A < t && t < p.B; }

double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool in_b(const Model2DParams& p, Vec2 z) { return std::abs(z.x) <= p.L / 2 && std::abs(z.y) <= p.L / 2; }
bool in_s(const Model2DParams& p, Vec2 z) { return z.x * z.x + z.y * z.y <= p.l * p.l; }

Vec2 pt(const Trajectory& x, std::size_t i) { return {x.point(i)[0], x.point(i)[1]}; }

/// Absorption probability of the perturbed particle before the historical
/// absorption index.
double table_before(const Model2DParams& p, const Kernel2DParams& k, Vec2 xi, Vec2 yi)
{
    if (!in_b(p, yi)) return 1.0;
    const bool yw = !in_s(p, yi), xw = in_b(p, xi) && !in_s(p, xi), xs = in_s(p, xi);
    if (yw && xs) return p.P_w;
    if (!yw && xw) return p.P_p;
    if (yw && xw) return k.Q_w;
    if (!yw && xs) return k.Q_p;
    return yw ? p.P_w : p.P_p; // historical point outside the box
}

/// Same at the historical absorption index.
double table_at(const Model2DParams& p, const Kernel2DParams& k, Vec2 xn, Vec2 yn)
{
    if (!in_b(p, yn)) return 1.0;
    const bool yw = !in_s(p, yn);
    const bool x_out = !in_b(p, xn), xs = in_s(p, xn), xw = !x_out && !xs;
    if (yw && (xs || x_out)) return p.P_w;
    if (!yw && (xw || x_out)) return p.P_p;
    if (yw && xw) return 1.0 - k.Q_w;
    return 1.0 - k.Q_p;
}

} // namespace

double oracle_log_pdf_1d(const Model1DParams& p, const Trajectory& x)
{
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("empty trajectory");
    double lf = 0.0;
    double prev = p.source;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        lf += log_phi(prev, p.sigma2, x[i]) + ln(1.0 - p.P) + ln(ind(in_d(p, x[i])));
        prev = x[i];
    }
    const double last = x[n - 1];
    lf += log_phi(prev, p.sigma2, last) + ln(ind(!in_d(p, last)) + p.P * ind(in_d(p, last)));
    return lf;
}

double oracle_log_kernel_1d_p0(const Model1DParams& p, const Kernel1DParams& k, const Trajectory& x,
                               const Trajectory& y)
{
    const std::size_t n = x.size(), m = y.size();
    const double s2 = k.sigma2_tilde;
    auto xs = [&](std::size_t i) { return i == 0 ? p.source : x[i - 1]; }; // 1-based
    auto ys = [&](std::size_t i) { return i == 0 ? p.source : y[i - 1]; };
    double lk = 0.0;
    if (m <= n) {
        for (std::size_t i = 1; i < m; ++i)
            lk += log_phi(ys(i - 1) + (xs(i) - xs(i - 1)), s2, ys(i)) + ln(ind(in_d(p, ys(i))));
        lk += log_phi(ys(m - 1) + (xs(m) - xs(m - 1)), s2, ys(m)) + ln(ind(!in_d(p, ys(m))));
        return lk;
    }
    for (std::size_t i = 1; i <= n; ++i)
        lk += log_phi(ys(i - 1) + (xs(i) - xs(i - 1)), s2, ys(i)) + ln(ind(in_d(p, ys(i))));
    for (std::size_t i = n + 1; i < m; ++i) lk += log_phi(ys(i - 1), p.sigma2, ys(i)) + ln(ind(in_d(p, ys(i))));
    lk += log_phi(ys(m - 1), p.sigma2, ys(m)) + ln(ind(!in_d(p, ys(m))));
    return lk;
}

double oracle_log_kernel_1d(const Model1DParams& p, const Kernel1DParams& k, const Trajectory& x,
                            const Trajectory& y)
{
    const std::size_t n = x.size(), m = y.size();
    const double s2 = k.sigma2_tilde, Q = k.Q, P = p.P;
    auto xs = [&](std::size_t i) { return i == 0 ? p.source : x[i - 1]; };
    auto ys = [&](std::size_t i) { return i == 0 ? p.source : y[i - 1]; };
    auto shifted = [&](std::size_t i) { return log_phi(ys(i - 1) + (xs(i) - xs(i - 1)), s2, ys(i)); };
    auto in = [&](std::size_t i) { return ind(in_d(p, ys(i))); };

    double lk = 0.0;
    if (m <= n - 1) {
        for (std::size_t i = 1; i < m; ++i) lk += shifted(i) + ln((1.0 - Q) * in(i));
        return lk + shifted(m) + ln(Q * in(m) + (1.0 - in(m)));
    }
    for (std::size_t i = 1; i < n; ++i) lk += shifted(i) + ln((1.0 - Q) * in(i));
    const double xn_in = ind(in_d(p, xs(n)));
    if (m == n)
        return lk + shifted(n) + ln((1.0 - in(n)) + (1.0 - Q) * in(n) * xn_in + P * in(n) * (1.0 - xn_in));
    lk += shifted(n) + ln(in(n) * (Q * xn_in + (1.0 - P) * (1.0 - xn_in)));
    for (std::size_t i = n + 1; i < m; ++i) lk += log_phi(ys(i - 1), p.sigma2, ys(i)) + ln((1.0 - P) * in(i));
    return lk + log_phi(ys(m - 1), p.sigma2, ys(m)) + ln((1.0 - in(m)) + P * in(m));
}

OracleCrossing oracle_crossing(double l, Vec2 v, Vec2 w)
{
    const double dx = w.x - v.x, dy = w.y - v.y;
    const double a = dx * dx + dy * dy;
    const double b = 2.0 * (v.x * dx + v.y * dy);
    const double c = v.x * v.x + v.y * v.y - l * l;
    const double disc = b * b - 4.0 * a * c;
    const bool v_in = c <= 0.0;
    const bool w_in = w.x * w.x + w.y * w.y <= l * l;
    OracleCrossing out;
    if (v_in && w_in) return out;
    if (disc <= 0.0) return out;
    const double sq = std::sqrt(disc);
    const double t1 = (-b - sq) / (2.0 * a), t2 = (-b + sq) / (2.0 * a);
    auto at = [&](double t) { return Vec2{v.x + t * dx, v.y + t * dy}; };
    if (v_in) {
        out.crosses = true;
        out.single = at(t2);
    } else if (w_in) {
        out.crosses = true;
        out.single = at(t1);
    } else if (t1 >= 0.0 && t2 <= 1.0) {
        out.crosses = true;
        out.first = at(t1);
        out.second = at(t2);
    }
    return out;
}

double oracle_optical_depth(const Model2DParams& p, Vec2 v, Vec2 w)
{
    const double lw = p.lambda_w, lp = p.lambda_p;
    const bool vs = in_s(p, v), ws = in_s(p, w);
    if (vs && ws) return lp * dist(v, w);
    const auto c = oracle_crossing(p.l, v, w);
    if (vs) return lp * dist(v, c.single) + lw * dist(c.single, w);
    if (ws) return lw * dist(v, c.single) + lp * dist(c.single, w);
    if (!c.crosses) return lw * dist(v, w);
    return lw * dist(v, c.first) + lp * dist(c.first, c.second) + lw * dist(c.second, w);
}

double oracle_log_q_2d(const Model2DParams& p, Vec2 from, Vec2 to)
{
    const double r = dist(from, to);
    const double lam_end = in_s(p, to) ? p.lambda_p : p.lambda_w;
    return -std::log(2.0 * pi * r) + std::log(lam_end) - oracle_optical_depth(p, from, to);
}

double oracle_log_pdf_2d(const Model2DParams& p, const Trajectory& x)
{
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("empty trajectory");
    Vec2 prev{-p.s_x, 0.0};
    double lf = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const Vec2 xi = pt(x, i);
        lf += oracle_log_q_2d(p, prev, xi) +
              ln((1.0 - p.P_w) * ind(in_b(p, xi) && !in_s(p, xi)) + (1.0 - p.P_p) * ind(in_s(p, xi)));
        prev = xi;
    }
    const Vec2 xn = pt(x, n - 1);
    lf += oracle_log_q_2d(p, prev, xn) +
          ln(ind(!in_b(p, xn)) + p.P_w * ind(in_b(p, xn) && !in_s(p, xn)) + p.P_p * ind(in_s(p, xn)));
    return lf;
}

double oracle_log_kernel_2d(const Model2DParams& p, const Kernel2DParams& k, const Trajectory& x,
                            const Trajectory& y)
{
    const std::size_t n = x.size(), m = y.size();
    const double s2 = k.sigma2_tilde;
    double lk = 0.0;
    const std::size_t head = std::min(m, n) - 1; // steps 1..head use the before-n table, not absorbed
    for (std::size_t i = 0; i < head; ++i)
        lk += log_phi2(pt(x, i), s2, pt(y, i)) + ln(1.0 - table_before(p, k, pt(x, i), pt(y, i)));
    if (m < n) {
        const std::size_t j = m - 1;
        return lk + log_phi2(pt(x, j), s2, pt(y, j)) + ln(table_before(p, k, pt(x, j), pt(y, j)));
    }
    const std::size_t j = n - 1;
    const double a_n = table_at(p, k, pt(x, j), pt(y, j));
    lk += log_phi2(pt(x, j), s2, pt(y, j));
    if (m == n) return lk + ln(a_n);
    lk += ln(1.0 - a_n);
    for (std::size_t i = n; i + 1 < m; ++i) {
        const Vec2 yi = pt(y, i);
        lk += oracle_log_q_2d(p, pt(y, i - 1), yi) +
              ln((1.0 - p.P_w) * ind(in_b(p, yi) && !in_s(p, yi)) + (1.0 - p.P_p) * ind(in_s(p, yi)));
    }
    const Vec2 ym = pt(y, m - 1);
    return lk + oracle_log_q_2d(p, pt(y, m - 2), ym) +
           ln(ind(!in_b(p, ym)) + p.P_w * ind(in_b(p, ym) && !in_s(p, ym)) + p.P_p * ind(in_s(p, ym)));
}

} // namespace rarepath::validation
