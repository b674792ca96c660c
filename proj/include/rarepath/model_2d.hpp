#pragma once

// Two-dimensional monokinetic shielding model: isotropic exponential flights
// in a box [-L/2, L/2]^2 holding a "poison" disc |x| <= l inside "water",
// with a detector disc at (d_x, 0). Flight distances are redrawn with the
// new medium's rate at each medium change.

#include <cmath>
#include <optional>
#include <vector>

#include "rarepath/path_space.hpp"
#include "rarepath/rng.hpp"

namespace rarepath {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }
inline Vec2 to_vec2(Point p) noexcept { return {p[0], p[1]}; }

struct Model2DParams {
    double L = 10.0;
    double l = 2.0;
    double l_d = 0.5;
    double d_x = 3.0;
    double s_x = 3.0;
    double lambda_w = 0.2;
    double lambda_p = 2.0;
    double P_w = 0.2;
    double P_p = 0.5;

    Vec2 source() const noexcept { return {-s_x, 0.0}; }
    Vec2 detector() const noexcept { return {d_x, 0.0}; }
    bool in_box(Vec2 p) const noexcept { return std::abs(p.x) <= 0.5 * L && std::abs(p.y) <= 0.5 * L; }
    bool in_sphere(Vec2 p) const noexcept { return dot(p, p) <= l * l; }
    void validate() const;
};

struct Kernel2DParams {
    double sigma2_tilde = 0.25;
    double Q_w = 0.05;
    double Q_p = 0.1;

    void validate() const;
};

enum class Region { outside, water, poison };

inline Region region_of(const Model2DParams& p, Vec2 y) noexcept
{
    if (!p.in_box(y)) return Region::outside;
    return p.in_sphere(y) ? Region::poison : Region::water;
}

/// Crossings of the segment [v, w] with the circle |x - center| = radius.
/// `intersects` is true when the segment crosses the circle at least once.
/// Both endpoints exterior: c1, c2 are entry and exit, ordered from v.
/// One endpoint interior: c is the single crossing.
struct SegmentSphereHit {
    bool intersects = false;
    std::optional<Vec2> c1;
    std::optional<Vec2> c2;
    std::optional<Vec2> c;
};

SegmentSphereHit segment_sphere_geometry(Vec2 center, double radius, Vec2 v, Vec2 w);

struct JumpSample {
    Vec2 point;
    int distance_samplings = 0; ///< exponential draws used; at most 3 for this layout
};

/// One flight from a birth or scattering point.
JumpSample sample_jump_2d(const Model2DParams& params, Vec2 from, Rng& rng);

/// log q(from, to): density of the next collision point given a scattering
/// point inside the box. Throws on coincident points.
double log_q_2d(const Model2DParams& params, Vec2 from, Vec2 to);

/// Model absorption probability at a collision point.
inline double absorption_prob_2d(const Model2DParams& p, Vec2 y) noexcept
{
    switch (region_of(p, y)) {
    case Region::outside: return 1.0;
    case Region::poison: return p.P_p;
    case Region::water: break;
    }
    return p.P_w;
}

enum class StepKind { before_n, at_n };

/// Absorption probability of the perturbed particle at collision i, given the
/// historical point x_i and perturbed point y_i: the flip tables used before
/// and at the historical absorption index.
double perturbed_absorption_prob(const Model2DParams& params, const Kernel2DParams& kparams, StepKind kind,
                                 Vec2 historical, Vec2 perturbed);

class ModelChain2D {
public:
    explicit ModelChain2D(const Model2DParams& p) : p_(p), src_{-p.s_x, 0.0} {}
    int dim() const noexcept { return 2; }
    Point source() const noexcept { return src_; }
    double absorption_prob(std::size_t, Point y) const noexcept { return absorption_prob_2d(p_, to_vec2(y)); }
    double log_transition_density(std::size_t, Point from, Point to) const
    {
        return log_q_2d(p_, to_vec2(from), to_vec2(to));
    }

private:
    Model2DParams p_;
    double src_[2];
};

class KernelChain2D {
public:
    KernelChain2D(const Model2DParams& p, const Kernel2DParams& k, const Trajectory& historical);
    int dim() const noexcept { return 2; }
    Point source() const noexcept { return src_; }
    double absorption_prob(std::size_t step, Point y) const noexcept;
    double log_transition_density(std::size_t step, Point from, Point to) const;

private:
    Model2DParams p_;
    Kernel2DParams k_;
    const Trajectory& x_;
    double src_[2];
    double log_norm_;
    double inv_two_var_;
};

/// `absorption_trace`, when given, receives the absorption probability used
/// at every collision, in order.
Trajectory sample_trajectory_2d(const Model2DParams& params, Rng& rng,
                                std::vector<double>* absorption_trace = nullptr);
void append_flights_2d(const Model2DParams& params, Vec2 start, Trajectory& out, Rng& rng,
                       std::vector<double>* absorption_trace = nullptr);

double objective_2d(const Model2DParams& params, const Trajectory& x);
double log_pdf_2d(const Model2DParams& params, const Trajectory& x);
Trajectory sample_perturbed_2d(const Model2DParams& params, const Kernel2DParams& kparams, const Trajectory& x,
                               Rng& rng, std::vector<double>* absorption_trace = nullptr);
double log_kernel_pdf_2d(const Model2DParams& params, const Kernel2DParams& kparams, const Trajectory& x,
                         const Trajectory& y);

class Model2D {
public:
    using state_type = Trajectory;

    Model2D(const Model2DParams& params, const Kernel2DParams& kparams);

    double objective(const Trajectory& x) const { return objective_2d(params_, x); }
    double log_pdf(const Trajectory& x) const { return log_pdf_absorbed_chain(ModelChain2D(params_), x); }
    double log_kernel_pdf(const Trajectory& x, const Trajectory& y) const
    {
        return log_kernel_pdf_2d(params_, kparams_, x, y);
    }
    Trajectory sample(Rng& rng) const { return sample_trajectory_2d(params_, rng); }
    void sample_into(Trajectory& out, Rng& rng) const
    {
        out.clear();
        append_flights_2d(params_, params_.source(), out, rng);
    }
    Trajectory sample_perturbed(const Trajectory& x, Rng& rng) const
    {
        return sample_perturbed_2d(params_, kparams_, x, rng);
    }

    const Model2DParams& params() const noexcept { return params_; }
    const Kernel2DParams& kernel_params() const noexcept { return kparams_; }

private:
    Model2DParams params_;
    Kernel2DParams kparams_;
};

} // namespace rarepath
