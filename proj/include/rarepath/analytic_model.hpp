#pragma once

// Standard normal scalar with Phi(x) = x. Exact tail probabilities and an
// exact conditional sampler make it the reference for the ideal driver.

#include "rarepath/rng.hpp"

namespace rarepath {

double normal_cdf(double x);
/// Upper tail 1 - normal_cdf(x), accurate far into the tail.
double normal_sf(double x);
double normal_quantile(double p);
/// Inverse of the upper tail: returns x with normal_sf(x) = q.
double normal_isf(double q);

class AnalyticModel {
public:
    using state_type = double;

    double objective(double x) const noexcept { return x; }
    double log_pdf(double x) const noexcept;
    double sample(Rng& rng) const { return rng.normal(); }

    /// Inverse-cdf draw of X given X >= t, computed through the upper tail.
    double sample_conditional(double t, Rng& rng) const;

    /// Symmetric Gaussian random-walk proposal for the HM driver.
    double log_kernel_pdf(double x, double y) const noexcept;
    double sample_perturbed(double x, Rng& rng) const { return x + step_sd_ * rng.normal(); }

    /// P(X >= level).
    double exact_probability(double level) const { return normal_sf(level); }

    explicit AnalyticModel(double step_sd = 1.0) : step_sd_(step_sd) {}

private:
    double step_sd_;
};

} // namespace rarepath
