#include "rarepath/model_1d.hpp"

#include <algorithm>
#include <stdexcept>

namespace rarepath {

void Model1DParams::validate() const
{
    if (!(A < source && source < B)) throw std::invalid_argument("1D model needs A < source < B");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("1D model needs sigma2 > 0");
    if (!(P >= 0.0 && P < 1.0)) throw std::invalid_argument("1D model needs 0 <= P < 1");
}

void Kernel1DParams::validate(const Model1DParams& model) const
{
    if (!(sigma2_tilde > 0.0)) throw std::invalid_argument("1D kernel needs sigma2_tilde > 0");
    if (!(Q >= 0.0 && Q < 1.0)) throw std::invalid_argument("1D kernel needs 0 <= Q < 1");
    if (model.P == 0.0 && Q != 0.0) throw std::invalid_argument("1D kernel needs Q = 0 when P = 0");
}

ModelChain1D::ModelChain1D(const Model1DParams& p)
    : p_(p),
      log_norm_(-0.5 * std::log(2.0 * std::numbers::pi * p.sigma2)),
      inv_two_var_(1.0 / (2.0 * p.sigma2))
{
}

KernelChain1D::KernelChain1D(const Model1DParams& p, const Kernel1DParams& k, const Trajectory& historical)
    : p_(p),
      k_(k),
      x_(historical),
      log_norm_model_(-0.5 * std::log(2.0 * std::numbers::pi * p.sigma2)),
      inv_two_var_model_(1.0 / (2.0 * p.sigma2)),
      log_norm_kernel_(-0.5 * std::log(2.0 * std::numbers::pi * k.sigma2_tilde)),
      inv_two_var_kernel_(1.0 / (2.0 * k.sigma2_tilde))
{
}

double KernelChain1D::absorption_prob(std::size_t step, Point y) const noexcept
{
    if (!p_.in_domain(y[0])) return 1.0;
    const std::size_t n = x_.size();
    if (step < n) return k_.Q;
    if (step == n) return p_.in_domain(x_[n - 1]) ? 1.0 - k_.Q : p_.P;
    return p_.P;
}

double KernelChain1D::log_transition_density(std::size_t step, Point from, Point to) const noexcept
{
    if (step <= x_.size()) {
        const double prev = step == 1 ? p_.source : x_[step - 2];
        const double d = to[0] - (from[0] + (x_[step - 1] - prev));
        return log_norm_kernel_ - d * d * inv_two_var_kernel_;
    }
    const double d = to[0] - from[0];
    return log_norm_model_ - d * d * inv_two_var_model_;
}

void append_walk_1d(const Model1DParams& params, double start, Trajectory& out, Rng& rng)
{
    const double sd = std::sqrt(params.sigma2);
    double pos = start;
    for (;;) {
        pos += sd * rng.normal();
        out.push_back(pos);
        if (!params.in_domain(pos) || rng.bernoulli(params.P)) return;
    }
}

Trajectory sample_trajectory_1d(const Model1DParams& params, Rng& rng)
{
    Trajectory x(1);
    append_walk_1d(params, params.source, x, rng);
    return x;
}

double objective_1d(const Model1DParams& params, const Trajectory& x)
{
    const auto& c = x.coords();
    return params.A - *std::min_element(c.begin(), c.end());
}

double log_pdf_1d(const Model1DParams& params, const Trajectory& x)
{
    return log_pdf_absorbed_chain(ModelChain1D(params), x);
}

Trajectory sample_perturbed_1d(const Model1DParams& params, const Kernel1DParams& kparams, const Trajectory& x,
                               Rng& rng)
{
    const std::size_t n = x.size();
    const double sd = std::sqrt(kparams.sigma2_tilde);
    Trajectory y(1);
    y.reserve(n + 4);
    double prev_x = params.source;
    double pos = params.source;
    // Steps 1..n-1: shifted increments, absorption flipped with probability Q.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        pos += (x[i] - prev_x) + sd * rng.normal();
        prev_x = x[i];
        y.push_back(pos);
        if (!params.in_domain(pos) || rng.bernoulli(kparams.Q)) return y;
    }
    // Step n: terminal mixture depending on where the historical path ended.
    pos += (x[n - 1] - prev_x) + sd * rng.normal();
    y.push_back(pos);
    if (!params.in_domain(pos)) return y;
    const double absorb = params.in_domain(x[n - 1]) ? 1.0 - kparams.Q : params.P;
    if (rng.bernoulli(absorb)) return y;
    append_walk_1d(params, pos, y, rng);
    return y;
}

double log_kernel_pdf_1d(const Model1DParams& params, const Kernel1DParams& kparams, const Trajectory& x,
                         const Trajectory& y)
{
    x.validate();
    return log_pdf_absorbed_chain(KernelChain1D(params, kparams, x), y);
}

Model1D::Model1D(const Model1DParams& params, const Kernel1DParams& kparams)
    : params_(params), kparams_(kparams), chain_(params)
{
    params_.validate();
    kparams_.validate(params_);
}

} // namespace rarepath
