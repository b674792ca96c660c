#include "rarepath/model_2d.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rarepath {

namespace {

constexpr int max_distance_samplings = 16;
constexpr double tangency_tolerance = 1e-12;
constexpr double inf = std::numeric_limits<double>::infinity();

} // namespace

void Model2DParams::validate() const
{
    if (!(L > 0.0 && l > 0.0 && l_d > 0.0)) throw std::invalid_argument("2D model needs L, l, l_d > 0");
    if (!(l < 0.5 * L)) throw std::invalid_argument("2D model needs l < L/2");
    // detector may be tangent to the sphere
    if (!(l <= d_x - l_d && d_x + l_d < 0.5 * L))
        throw std::invalid_argument("2D model needs the detector between the sphere and the box edge");
    if (!(s_x > l && s_x < 0.5 * L)) throw std::invalid_argument("2D model needs the source outside the sphere, l < s_x < L/2");
    if (!(lambda_w > 0.0 && lambda_p > lambda_w)) throw std::invalid_argument("2D model needs 0 < lambda_w < lambda_p");
    if (!(P_w >= 0.0 && P_w <= 1.0 && P_p >= 0.0 && P_p <= 1.0))
        throw std::invalid_argument("2D model needs absorption probabilities in [0, 1]");
}

void Kernel2DParams::validate() const
{
    if (!(sigma2_tilde > 0.0)) throw std::invalid_argument("2D kernel needs sigma2_tilde > 0");
    if (!(Q_w >= 0.0 && Q_w <= 1.0 && Q_p >= 0.0 && Q_p <= 1.0))
        throw std::invalid_argument("2D kernel needs Q_w, Q_p in [0, 1]");
}

SegmentSphereHit segment_sphere_geometry(Vec2 center, double radius, Vec2 v, Vec2 w)
{
    const Vec2 d = w - v;
    const double len = norm(d);
    if (len == 0.0) throw std::invalid_argument("degenerate segment");
    const Vec2 u = (1.0 / len) * d;
    const Vec2 f = v - center;
    const double h = dot(f, u);
    const double r2 = radius * radius;
    const bool v_in = dot(f, f) <= r2;
    const Vec2 g = w - center;
    const bool w_in = dot(g, g) <= r2;
    const double disc = h * h - (dot(f, f) - r2);

    SegmentSphereHit hit;
    if (v_in && w_in) return hit;
    if (v_in != w_in) {
        const double root = std::sqrt(std::max(disc, 0.0));
        const double s = v_in ? -h + root : -h - root;
        hit.intersects = true;
        hit.c = v + std::clamp(s, 0.0, len) * u;
        return hit;
    }
    if (disc < tangency_tolerance * r2) return hit;
    const double root = std::sqrt(disc);
    const double s1 = -h - root;
    const double s2 = -h + root;
    if (s1 < 0.0 || s2 > len) return hit;
    hit.intersects = true;
    hit.c1 = v + s1 * u;
    hit.c2 = v + s2 * u;
    return hit;
}

JumpSample sample_jump_2d(const Model2DParams& params, Vec2 from, Rng& rng)
{
    const double angle = 2.0 * std::numbers::pi * rng.uniform();
    const Vec2 u{std::cos(angle), std::sin(angle)};
    const double r2 = params.l * params.l;
    Vec2 pos = from;
    bool poison = params.in_sphere(from);
    JumpSample out;
    for (;;) {
        if (++out.distance_samplings > max_distance_samplings)
            throw std::logic_error("flight exceeded the distance-sampling cap; geometry is inconsistent");
        const double dist = rng.exponential(poison ? params.lambda_p : params.lambda_w);
        const double h = dot(pos, u);
        const double disc = h * h - (dot(pos, pos) - r2);
        double to_boundary = inf;
        if (poison) {
            to_boundary = std::max(-h + std::sqrt(std::max(disc, 0.0)), 0.0);
        } else if (disc >= tangency_tolerance * r2) {
            const double s1 = -h - std::sqrt(disc);
            if (s1 > 0.0) to_boundary = s1;
        }
        if (dist < to_boundary) {
            out.point = pos + dist * u;
            return out;
        }
        // Stop at the medium change; the leg continues in the medium entered.
        pos = pos + to_boundary * u;
        poison = !poison;
    }
}

double log_q_2d(const Model2DParams& params, Vec2 from, Vec2 to)
{
    const double r = norm(to - from);
    if (r == 0.0) throw std::invalid_argument("transition density is singular at coincident points");
    const double lw = params.lambda_w;
    const double lp = params.lambda_p;
    const double base = -std::log(2.0 * std::numbers::pi * r);
    const bool from_poison = params.in_sphere(from);
    const bool to_poison = params.in_sphere(to);

    if (from_poison && to_poison) return base + std::log(lp) - lp * r;
    const auto hit = segment_sphere_geometry({0.0, 0.0}, params.l, from, to);
    if (from_poison) {
        const Vec2 c = *hit.c;
        return base - lp * norm(c - from) + std::log(lw) - lw * norm(to - c);
    }
    if (to_poison) {
        const Vec2 c = *hit.c;
        return base - lw * norm(c - from) + std::log(lp) - lp * norm(to - c);
    }
    if (!hit.intersects) return base + std::log(lw) - lw * r;
    const Vec2 c1 = *hit.c1;
    const Vec2 c2 = *hit.c2;
    return base - lw * norm(c1 - from) - lp * norm(c2 - c1) + std::log(lw) - lw * norm(to - c2);
}

double perturbed_absorption_prob(const Model2DParams& params, const Kernel2DParams& kparams, StepKind kind,
                                 Vec2 historical, Vec2 perturbed)
{
    const Region ry = region_of(params, perturbed);
    if (ry == Region::outside) return 1.0;
    const Region rx = region_of(params, historical);
    const bool same = rx == ry;
    if (ry == Region::water) {
        if (!same) return params.P_w;
        return kind == StepKind::before_n ? kparams.Q_w : 1.0 - kparams.Q_w;
    }
    if (!same) return params.P_p;
    return kind == StepKind::before_n ? kparams.Q_p : 1.0 - kparams.Q_p;
}

KernelChain2D::KernelChain2D(const Model2DParams& p, const Kernel2DParams& k, const Trajectory& historical)
    : p_(p),
      k_(k),
      x_(historical),
      src_{-p.s_x, 0.0},
      log_norm_(-std::log(2.0 * std::numbers::pi * k.sigma2_tilde)),
      inv_two_var_(1.0 / (2.0 * k.sigma2_tilde))
{
}

double KernelChain2D::absorption_prob(std::size_t step, Point y) const noexcept
{
    const std::size_t n = x_.size();
    if (step > n) return absorption_prob_2d(p_, to_vec2(y));
    const auto kind = step < n ? StepKind::before_n : StepKind::at_n;
    return perturbed_absorption_prob(p_, k_, kind, to_vec2(x_.point(step - 1)), to_vec2(y));
}

double KernelChain2D::log_transition_density(std::size_t step, Point from, Point to) const
{
    if (step <= x_.size()) {
        const Vec2 d = to_vec2(to) - to_vec2(x_.point(step - 1));
        return log_norm_ - dot(d, d) * inv_two_var_;
    }
    return log_q_2d(p_, to_vec2(from), to_vec2(to));
}

void append_flights_2d(const Model2DParams& params, Vec2 start, Trajectory& out, Rng& rng,
                       std::vector<double>* absorption_trace)
{
    Vec2 pos = start;
    for (;;) {
        pos = sample_jump_2d(params, pos, rng).point;
        out.push_back(pos.x, pos.y);
        const double a = absorption_prob_2d(params, pos);
        if (absorption_trace) absorption_trace->push_back(a);
        if (a >= 1.0 || rng.bernoulli(a)) return;
    }
}

Trajectory sample_trajectory_2d(const Model2DParams& params, Rng& rng, std::vector<double>* absorption_trace)
{
    Trajectory x(2);
    append_flights_2d(params, params.source(), x, rng, absorption_trace);
    return x;
}

double objective_2d(const Model2DParams& params, const Trajectory& x)
{
    const Vec2 det = params.detector();
    double best = inf;
    for (std::size_t i = 0; i < x.size(); ++i) best = std::min(best, norm(to_vec2(x.point(i)) - det));
    return params.l_d - best;
}

double log_pdf_2d(const Model2DParams& params, const Trajectory& x)
{
    return log_pdf_absorbed_chain(ModelChain2D(params), x);
}

Trajectory sample_perturbed_2d(const Model2DParams& params, const Kernel2DParams& kparams, const Trajectory& x,
                               Rng& rng, std::vector<double>* absorption_trace)
{
    const std::size_t n = x.size();
    const double sd = std::sqrt(kparams.sigma2_tilde);
    Trajectory y(2);
    y.reserve(n + 4);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 xi = to_vec2(x.point(i));
        const Vec2 yi{xi.x + sd * rng.normal(), xi.y + sd * rng.normal()};
        y.push_back(yi.x, yi.y);
        const auto kind = i + 1 < n ? StepKind::before_n : StepKind::at_n;
        const double a = perturbed_absorption_prob(params, kparams, kind, xi, yi);
        if (absorption_trace) absorption_trace->push_back(a);
        if (a >= 1.0 || rng.bernoulli(a)) return y;
    }
    append_flights_2d(params, to_vec2(y.back()), y, rng, absorption_trace);
    return y;
}

double log_kernel_pdf_2d(const Model2DParams& params, const Kernel2DParams& kparams, const Trajectory& x,
                         const Trajectory& y)
{
    x.validate();
    return log_pdf_absorbed_chain(KernelChain2D(params, kparams, x), y);
}

Model2D::Model2D(const Model2DParams& params, const Kernel2DParams& kparams) : params_(params), kparams_(kparams)
{
    params_.validate();
    kparams_.validate();
}

} // namespace rarepath
