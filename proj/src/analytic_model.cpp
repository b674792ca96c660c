#include "rarepath/analytic_model.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rarepath {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal quantile needs p in (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_isf(double q)
{
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("normal inverse survival needs q in (0, 1)");
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

double AnalyticModel::log_pdf(double x) const noexcept
{
    return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

double AnalyticModel::sample_conditional(double t, Rng& rng) const
{
    // Uniform draw in (0, sf(t)] mapped back through the upper-tail inverse.
    const double tail = normal_sf(t);
    const double u = 1.0 - rng.uniform();
    const double q = std::min(u * tail, std::nextafter(1.0, 0.0));
    return std::max(t, normal_isf(q));
}

double AnalyticModel::log_kernel_pdf(double x, double y) const noexcept
{
    const double d = (y - x) / step_sd_;
    return -0.5 * d * d - std::log(step_sd_) - 0.5 * std::log(2.0 * std::numbers::pi);
}

} // namespace rarepath
