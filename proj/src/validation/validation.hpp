#pragma once

// Independent oracles and property suites. The oracles write out each density
// as a direct product with their own geometry, without the chain composer.

#include <cstdint>
#include <string>
#include <vector>

#include "rarepath/model_1d.hpp"
#include "rarepath/model_2d.hpp"

namespace rarepath::validation {

// 1D
double oracle_log_pdf_1d(const Model1DParams& p, const Trajectory& x);
/// Kernel density for the absorption-free walk (P = 0, no flips).
double oracle_log_kernel_1d_p0(const Model1DParams& p, const Kernel1DParams& k, const Trajectory& x,
                               const Trajectory& y);
/// Kernel density with absorption and flip probability Q.
double oracle_log_kernel_1d(const Model1DParams& p, const Kernel1DParams& k, const Trajectory& x,
                            const Trajectory& y);

// 2D
struct OracleCrossing {
    bool crosses = false;
    Vec2 first{}, second{}; ///< both ends exterior: entry and exit
    Vec2 single{};          ///< one end interior
};
/// Circle |z| = l against segment [v, w], by solving the quadratic in the
/// segment parameter.
OracleCrossing oracle_crossing(double l, Vec2 v, Vec2 w);
double oracle_log_q_2d(const Model2DParams& p, Vec2 from, Vec2 to);
/// Optical depth along [from, to].
double oracle_optical_depth(const Model2DParams& p, Vec2 from, Vec2 to);
double oracle_log_pdf_2d(const Model2DParams& p, const Trajectory& x);
double oracle_log_kernel_2d(const Model2DParams& p, const Kernel2DParams& k, const Trajectory& x,
                            const Trajectory& y);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SuiteOptions {
    std::uint64_t seed = 20240611;
    /// Multiplies every sample size; below 1 gives a quick smoke run.
    double scale = 1.0;
};

std::vector<CheckResult> detailed_balance(const SuiteOptions& o);
std::vector<CheckResult> quadrature_normalization(const SuiteOptions& o);
std::vector<CheckResult> geometry(const SuiteOptions& o);
std::vector<CheckResult> sampler_pdf_agreement(const SuiteOptions& o);
std::vector<CheckResult> kernel_reduction(const SuiteOptions& o);
std::vector<CheckResult> clopper_pearson_coverage(const SuiteOptions& o);
std::vector<CheckResult> interval_values(const SuiteOptions& o);
std::vector<CheckResult> determinism(const SuiteOptions& o);
/// Oracle agreement, jump-distance law, sampling cap, absorption trace and
/// HM stationarity.
std::vector<CheckResult> model_consistency(const SuiteOptions& o);

struct Suite {
    std::string id;
    std::vector<CheckResult> (*run)(const SuiteOptions&);
};
const std::vector<Suite>& suites();
std::vector<CheckResult> run_all(const SuiteOptions& o);

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic series).
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

} // namespace rarepath::validation
