#pragma once

// Experiment runner behind the CLI: flat key-value configuration, K
// independent replicates on per-replicate substreams, summaries, JSON/CSV
// reports and plot data.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rarepath/baseline.hpp"
#include "rarepath/last_particle.hpp"
#include "rarepath/model_1d.hpp"
#include "rarepath/model_2d.hpp"

namespace rarepath {

enum class ModelKind { one_d, two_d, analytic };
enum class MethodKind { last_particle, simple_mc, vlmc, ideal };

std::string_view to_string(ModelKind k) noexcept;
std::string_view to_string(MethodKind k) noexcept;
ModelKind parse_model_kind(std::string_view s);
MethodKind parse_method_kind(std::string_view s);
std::string_view to_string(TieRule t) noexcept;
TieRule parse_tie_rule(std::string_view s);

/// Thrown for malformed configuration text or inconsistent settings.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
    ModelKind model = ModelKind::one_d;
    MethodKind method = MethodKind::last_particle;

    Model1DParams one_d;
    Kernel1DParams one_d_kernel;
    Model2DParams two_d;
    Kernel2DParams two_d_kernel;
    double analytic_step_sd = 1.0;

    std::size_t N = 200;
    int T = 300;
    std::uint64_t J = 1'000'000;
    double level = 0.0;
    std::size_t replicates = 1;
    std::uint64_t seed = 1;
    std::string out;
    double confidence = 0.95;
    int workers = 0; ///< 0: OpenMP default, 1: serial loop
    std::int64_t max_iterations = 0;
    TieRule ties = TieRule::one_per_iteration;
    std::string checkpoint; ///< VLMC checkpoint file, empty for none
    std::uint64_t vlmc_stop_after = 0; ///< interrupt VLMC after this many batches (0: never)

    std::optional<double> p_ref; ///< reference probability for RMSE and coverage
    std::size_t mc_replicates = 0; ///< companion simple-MC replicates for comparisons
    std::uint64_t mc_J = 0;        ///< trials of each companion replicate (0: J)

    /// Assigns one key. Throws ConfigError for unknown keys or bad values.
    void set(std::string_view key, std::string_view value);
    /// Applies dependent defaults and checks consistency. Throws ConfigError.
    void finalize();

    std::uint64_t companion_trials() const noexcept { return mc_J ? mc_J : J; }

private:
    bool q_set_ = false;
    std::optional<double> p_target_;
};

/// Parses `key = value` lines; `#` starts a comment, values may be quoted.
/// The result is not finalized; call finalize() after any overrides.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
nlohmann::json to_json(const ExperimentConfig& cfg);

struct ReplicateRecord {
    std::size_t index = 0;
    std::optional<EstimateResult> lp; ///< last_particle and ideal
    std::optional<McResult> mc;       ///< simple_mc and vlmc
    std::string error;                ///< non-empty when the replicate aborted
    std::int64_t abort_iteration = -1;

    bool ok() const noexcept { return error.empty(); }
    double estimate() const; ///< p_hat or p_tilde
    double wall_time() const;
};

struct Summary {
    std::size_t completed = 0;
    std::size_t aborted = 0;
    double mean = 0.0;
    double sd = 0.0; ///< sample standard deviation (0 for a single replicate)
    std::optional<double> geometric_mean; ///< when every estimate is positive
    std::optional<double> rmse;           ///< when p_ref is known
    double mean_wall_time = 0.0;
    std::optional<std::pair<double, double>> asymptotic_band; ///< I_p at p_ref (or the mean), particle methods
    std::optional<double> coverage;                   ///< particle methods with p_ref
    std::optional<McResult> pooled;                   ///< all MC replicates pooled, with its CP band
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<ReplicateRecord> replicates;
    Summary summary;
    std::vector<ReplicateRecord> companion; ///< simple-MC replicates when mc_replicates > 0
    std::optional<Summary> companion_summary;
    std::optional<double> quality_ratio; ///< MC companion vs. particle method
};

/// Fraction of estimates whose asymptotic interval I_{p_hat} contains p_ref.
double coverage_check(std::span<const double> estimates, double p_ref, std::size_t n_particles);

/// One replicate of `method`. Aborts are caught and recorded.
ReplicateRecord run_replicate(const ExperimentConfig& cfg, MethodKind method, std::size_t index);

/// Runs the configured replicates (and the MC companion). `cfg` must be
/// finalized.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

Summary summarize(std::span<const ReplicateRecord> records, const ExperimentConfig& cfg, MethodKind method);

/// Without timing fields the JSON is a pure function of the configuration.
nlohmann::json to_json(const ExperimentReport& report, bool include_timing = true);
void write_replicates_csv(const ExperimentReport& report, std::ostream& os);

/// Figure ids: fig1, fig2, fig3, fig4, fig5, table_quality.
std::vector<std::string_view> figure_ids();
void emit_figure_data(const ExperimentReport& report, std::string_view figure_id, std::ostream& os);

} // namespace rarepath
