#pragma once

// One-dimensional random walk with Gaussian increments, absorbed at the first
// collision outside (A, B) and with probability P at collisions inside it.
// The rare event is reaching (-inf, A], i.e. objective A - min x_i >= 0.

#include <cmath>
#include <numbers>

#include "rarepath/path_space.hpp"
#include "rarepath/rng.hpp"

namespace rarepath {

struct Model1DParams {
    double A = -10.0;
    double B = 1.0;
    double sigma2 = 1.0;
    double P = 0.0;
    double source = 0.0;

    /// Open interval membership; a point equal to A or B is outside.
    bool in_domain(double t) const noexcept { return t > A && t < B; }
    void validate() const;
};

struct Kernel1DParams {
    double sigma2_tilde = 0.01;
    double Q = 0.2;

    void validate(const Model1DParams& model) const;
};

inline double log_gaussian_1d(double mean, double var, double t) noexcept
{
    const double d = t - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - d * d / (2.0 * var);
}

/// Unconditional chain: a_i(y) = P 1{y in D} + 1{y not in D}, q_i = N(y_{i-1}, sigma2).
class ModelChain1D {
public:
    explicit ModelChain1D(const Model1DParams& p);
    int dim() const noexcept { return 1; }
    Point source() const noexcept { return {&p_.source, 1}; }
    double absorption_prob(std::size_t, Point y) const noexcept { return p_.in_domain(y[0]) ? p_.P : 1.0; }
    double log_transition_density(std::size_t, Point from, Point to) const noexcept
    {
        const double d = to[0] - from[0];
        return log_norm_ - d * d * inv_two_var_;
    }

private:
    Model1DParams p_;
    double log_norm_;
    double inv_two_var_;
};

/// Perturbation chain conditioned on a historical trajectory x of length n:
/// flip probability Q before n, the terminal mixture at n, model dynamics
/// after n; increments of x shifted onto the perturbed path up to n.
class KernelChain1D {
public:
    KernelChain1D(const Model1DParams& p, const Kernel1DParams& k, const Trajectory& historical);
    int dim() const noexcept { return 1; }
    Point source() const noexcept { return {&p_.source, 1}; }
    double absorption_prob(std::size_t step, Point y) const noexcept;
    double log_transition_density(std::size_t step, Point from, Point to) const noexcept;

private:
    Model1DParams p_;
    Kernel1DParams k_;
    const Trajectory& x_;
    double log_norm_model_, inv_two_var_model_;
    double log_norm_kernel_, inv_two_var_kernel_;
};

Trajectory sample_trajectory_1d(const Model1DParams& params, Rng& rng);

/// Runs the unconditional walk from `start` and appends its collisions to `out`.
void append_walk_1d(const Model1DParams& params, double start, Trajectory& out, Rng& rng);

double objective_1d(const Model1DParams& params, const Trajectory& x);
double log_pdf_1d(const Model1DParams& params, const Trajectory& x);
Trajectory sample_perturbed_1d(const Model1DParams& params, const Kernel1DParams& kparams, const Trajectory& x,
                               Rng& rng);
double log_kernel_pdf_1d(const Model1DParams& params, const Kernel1DParams& kparams, const Trajectory& x,
                         const Trajectory& y);

class Model1D {
public:
    using state_type = Trajectory;

    Model1D(const Model1DParams& params, const Kernel1DParams& kparams);

    double objective(const Trajectory& x) const { return objective_1d(params_, x); }
    double log_pdf(const Trajectory& x) const { return log_pdf_absorbed_chain(chain_, x); }
    double log_kernel_pdf(const Trajectory& x, const Trajectory& y) const
    {
        return log_kernel_pdf_1d(params_, kparams_, x, y);
    }
    Trajectory sample(Rng& rng) const { return sample_trajectory_1d(params_, rng); }
    void sample_into(Trajectory& out, Rng& rng) const
    {
        out.clear();
        append_walk_1d(params_, params_.source, out, rng);
    }
    Trajectory sample_perturbed(const Trajectory& x, Rng& rng) const
    {
        return sample_perturbed_1d(params_, kparams_, x, rng);
    }

    const Model1DParams& params() const noexcept { return params_; }
    const Kernel1DParams& kernel_params() const noexcept { return kparams_; }

private:
    Model1DParams params_;
    Kernel1DParams kparams_;
    ModelChain1D chain_;
};

} // namespace rarepath
